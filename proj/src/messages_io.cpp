#include "wdc/messages_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "wdc/image_io.hpp"

namespace wdc {

using nlohmann::json;

std::vector<EwdcMessage> parse_messages(const std::string& json_text)
{
    std::vector<EwdcMessage> out;
    try {
        const json doc = json::parse(json_text);
        for (const auto& m : doc.at("messages")) {
            EwdcMessage msg;
            for (const auto& p : m.at("pixels")) {
                if (!p.is_array() || p.size() != 2)
                    throw MessageError("pixel entries must be [x, y] pairs");
                msg.pixels.push_back({p[0].get<int>(), p[1].get<int>()});
            }
            if (m.contains("target") && !m.at("target").is_null())
                msg.target = m.at("target").get<double>();
            out.push_back(std::move(msg));
        }
    } catch (const json::exception& e) {
        throw MessageError(std::string("malformed message document: ") + e.what());
    }
    return out;
}

std::vector<EwdcMessage> load_messages(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_messages(buf.str());
}

std::string dump_messages(const std::vector<EwdcMessage>& messages)
{
    json list = json::array();
    for (const auto& m : messages) {
        json pixels = json::array();
        for (const auto& p : m.pixels)
            pixels.push_back({p.x, p.y});
        list.push_back({{"pixels", std::move(pixels)}, {"target", m.target ? json(*m.target) : json(nullptr)}});
    }
    return json{{"messages", std::move(list)}}.dump();
}

} // namespace wdc
