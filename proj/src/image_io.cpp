#include "wdc/image_io.hpp"

#include <png.h>

#include "resample.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>

namespace wdc {

namespace {

constexpr std::uint64_t kMaxPixels = std::uint64_t{1} << 28;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------- PNG decode

struct MemoryReader {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t length)
{
    auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (reader->offset + length > reader->bytes.size())
        png_error(png, "truncated PNG stream");
    std::memcpy(out, reader->bytes.data() + reader->offset, length);
    reader->offset += length;
}

struct DecodedPng {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int channels = 0;  // after transforms: 1 (gray) or 3 (rgb)
    int bit_depth = 0; // 8 or 16
    std::vector<std::uint8_t> rows;
    char error[256] = {};
};

void png_error_callback(png_structp png, png_const_charp msg)
{
    auto* decoded = static_cast<DecodedPng*>(png_get_error_ptr(png));
    std::snprintf(decoded->error, sizeof(decoded->error), "%s", msg);
    png_longjmp(png, 1);
}

void png_warning_callback(png_structp, png_const_charp) {}

// Only trivially destructible locals live between setjmp and the libpng calls.
bool decode_png_raw(MemoryReader* reader, DecodedPng* out)
{
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, out, png_error_callback, png_warning_callback);
    if (!png) {
        std::snprintf(out->error, sizeof(out->error), "png_create_read_struct failed");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        std::snprintf(out->error, sizeof(out->error), "png_create_info_struct failed");
        return false;
    }
    png_bytep* row_ptrs = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        std::free(row_ptrs);
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, reader, png_read_callback);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (static_cast<std::uint64_t>(width) * height > kMaxPixels)
        png_error(png, "PNG dimensions overflow the supported pixel count");

    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    if (bit_depth == 16)
        png_set_swap(png); // host little-endian uint16 in the row buffer
    png_read_update_info(png, info);

    out->width = width;
    out->height = height;
    out->channels = png_get_channels(png, info);
    out->bit_depth = png_get_bit_depth(png, info);
    if (out->bit_depth != 8 && out->bit_depth != 16)
        png_error(png, "unsupported PNG bit depth");
    if (out->channels != 1 && out->channels != 3)
        png_error(png, "unsupported PNG channel layout");

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    out->rows.resize(rowbytes * height);
    row_ptrs = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * std::max<png_uint_32>(height, 1)));
    for (png_uint_32 y = 0; y < height; ++y)
        row_ptrs[y] = out->rows.data() + y * rowbytes;
    png_read_image(png, row_ptrs);
    png_read_end(png, nullptr);
    std::free(row_ptrs);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

DecodedPng decode_png(std::span<const std::uint8_t> bytes)
{
    MemoryReader reader{bytes, 0};
    DecodedPng decoded;
    if (!decode_png_raw(&reader, &decoded))
        throw IoError(std::string("PNG decode failed: ") + decoded.error);
    return decoded;
}

double png_sample(const DecodedPng& d, std::size_t sample_index)
{
    if (d.bit_depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, d.rows.data() + 2 * sample_index, 2);
        return v / 65535.0;
    }
    return d.rows[sample_index] / 255.0;
}

ImageRgb png_to_image(const DecodedPng& d)
{
    const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
    std::vector<double> data(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            const std::size_t src = d.channels == 3 ? 3 * i + c : i;
            data[3 * i + c] = png_sample(d, src);
        }
    }
    return ImageRgb(static_cast<int>(d.width), static_cast<int>(d.height), std::move(data));
}

// ---------------------------------------------------------------- PNG encode

void png_write_callback(png_structp png, png_bytep data, png_size_t length)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_callback(png_structp) {}

bool encode_png_raw(const std::uint8_t* rows, std::uint32_t width, std::uint32_t height, int color_type,
                    int bit_depth, std::size_t rowbytes, std::vector<std::uint8_t>* out, DecodedPng* err)
{
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err, png_error_callback, png_warning_callback);
    if (!png)
        return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, out, png_write_callback, png_flush_callback);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16)
        png_set_swap(png);
    for (std::uint32_t y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(rows + y * rowbytes));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

std::vector<std::uint8_t> encode_rows(const std::vector<std::uint8_t>& rows, int width, int height, int color_type,
                                      int bit_depth, std::size_t rowbytes)
{
    if (width <= 0 || height <= 0)
        throw IoError("cannot encode an empty raster as PNG");
    std::vector<std::uint8_t> out;
    DecodedPng err;
    if (!encode_png_raw(rows.data(), static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height), color_type,
                        bit_depth, rowbytes, &out, &err))
        throw IoError(std::string("PNG encode failed: ") + err.error);
    return out;
}

// ---------------------------------------------------------------- PPM

bool is_ppm(std::span<const std::uint8_t> bytes)
{
    return bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6';
}

ImageRgb decode_ppm(std::span<const std::uint8_t> bytes)
{
    std::size_t pos = 2;
    auto next_token = [&]() -> long long {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        long long value = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > std::numeric_limits<int>::max())
                throw IoError("PPM header value overflow");
            any = true;
            ++pos;
        }
        if (!any)
            throw IoError("malformed PPM header");
        return value;
    };
    const long long width = next_token();
    const long long height = next_token();
    const long long maxval = next_token();
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw IoError("malformed PPM header");
    ++pos;
    if (maxval < 1 || maxval > 65535)
        throw IoError("unsupported PPM max value");
    if (static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height) > kMaxPixels)
        throw IoError("PPM dimensions overflow the supported pixel count");

    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    if (bytes.size() - pos < n * 3 * bytes_per_sample)
        throw IoError("truncated PPM payload");
    std::vector<double> data(n * 3);
    for (std::size_t i = 0; i < n * 3; ++i) {
        unsigned v = bytes[pos + i * bytes_per_sample];
        if (bytes_per_sample == 2)
            v = (v << 8) | bytes[pos + i * 2 + 1];
        data[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return ImageRgb(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

std::vector<std::uint8_t> encode_ppm(const ImageRgb& img)
{
    const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (double v : img.samples())
        out.push_back(quantize8(v));
    return out;
}

bool has_ppm_extension(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".ppm";
}

} // namespace

std::uint8_t quantize8(double v)
{
    if (!(v > 0.0))
        return 0;
    return static_cast<std::uint8_t>(std::floor(std::min(v, 1.0) * 255.0 + 0.5));
}

std::uint16_t quantize16(double v)
{
    if (!(v > 0.0))
        return 0;
    return static_cast<std::uint16_t>(std::floor(std::min(v, 1.0) * 65535.0 + 0.5));
}

ImageRgb decode_image(std::span<const std::uint8_t> bytes)
{
    if (is_ppm(bytes))
        return decode_ppm(bytes);
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw IoError("unsupported image format (expected PNG or binary PPM)");
    return png_to_image(decode_png(bytes));
}

ImageRgb decode_image(std::span<const std::uint8_t> bytes, int max_side)
{
    if (is_ppm(bytes))
        return resize_max_side(decode_ppm(bytes), max_side);
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw IoError("unsupported image format (expected PNG or binary PPM)");
    const DecodedPng d = decode_png(bytes);
    const int w = static_cast<int>(d.width);
    const int h = static_cast<int>(d.height);
    const auto size = detail::fitted_size(w, h, max_side);
    if (size.width == w && size.height == h)
        return png_to_image(d);
    // Sample straight from the packed rows; a full-size double raster is never built.
    return detail::resample_bilinear(w, h, size.width, size.height, [&](int x, int y) {
        const std::size_t i = static_cast<std::size_t>(y) * d.width + x;
        Rgb p;
        for (int c = 0; c < 3; ++c)
            p[c] = png_sample(d, d.channels == 3 ? 3 * i + c : i);
        return p;
    });
}

ImageRgb load_image(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    try {
        return decode_image(bytes);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const ImageRgb& img)
{
    std::vector<std::uint8_t> rows(img.samples().size());
    std::transform(img.samples().begin(), img.samples().end(), rows.begin(), quantize8);
    return encode_rows(rows, img.width(), img.height(), PNG_COLOR_TYPE_RGB, 8, static_cast<std::size_t>(img.width()) * 3);
}

void save_image(const ImageRgb& img, const std::filesystem::path& path)
{
    write_file(path, has_ppm_extension(path) ? encode_ppm(img) : encode_png(img));
}

std::vector<std::uint8_t> encode_map16(const ScalarMap& map)
{
    std::vector<std::uint8_t> rows(map.size() * 2);
    for (std::size_t i = 0; i < map.size(); ++i) {
        const std::uint16_t q = quantize16(map[i]);
        std::memcpy(rows.data() + 2 * i, &q, 2);
    }
    return encode_rows(rows, map.width(), map.height(), PNG_COLOR_TYPE_GRAY, 16, static_cast<std::size_t>(map.width()) * 2);
}

void save_map16(const ScalarMap& map, const std::filesystem::path& path)
{
    write_file(path, encode_map16(map));
}

ScalarMap load_map(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw IoError(path.string() + ": not a PNG file");
    const DecodedPng d = decode_png(bytes);
    const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i)
        values[i] = png_sample(d, d.channels == 3 ? 3 * i : i);
    return ScalarMap(static_cast<int>(d.width), static_cast<int>(d.height), std::move(values));
}

} // namespace wdc
