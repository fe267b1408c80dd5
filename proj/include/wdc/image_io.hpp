#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wdc/image.hpp"

namespace wdc {

class IoError : public Error {
public:
    using Error::Error;
};

/// Loads PNG (8/16-bit; gray, RGB, with or without alpha) or binary PPM (P6).
/// Samples are divided by the format's max value. Alpha is dropped.
ImageRgb load_image(const std::filesystem::path& path);
ImageRgb decode_image(std::span<const std::uint8_t> bytes);
/// Same as resize_max_side(decode_image(bytes), max_side) without materializing the full-size raster.
ImageRgb decode_image(std::span<const std::uint8_t> bytes, int max_side);

/// Writes an 8-bit RGB PNG, or P6 when the extension is .ppm.
/// Each sample is round-half-up(clamp(v, 0, 1) * 255).
void save_image(const ImageRgb& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const ImageRgb& img);

/// 16-bit grayscale PNG with value round(clamp(v, 0, 1) * 65535).
void save_map16(const ScalarMap& map, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_map16(const ScalarMap& map);
/// Reads a grayscale PNG back into [0,1] (any bit depth).
ScalarMap load_map(const std::filesystem::path& path);

std::uint8_t quantize8(double v);
std::uint16_t quantize16(double v);

} // namespace wdc
