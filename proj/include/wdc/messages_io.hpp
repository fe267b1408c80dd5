#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wdc/dehaze.hpp"

namespace wdc {

/// {"messages":[{"pixels":[[x,y],...],"target":0.42|null},...]}
std::vector<EwdcMessage> parse_messages(const std::string& json_text);
std::vector<EwdcMessage> load_messages(const std::filesystem::path& path);
std::string dump_messages(const std::vector<EwdcMessage>& messages);

} // namespace wdc
