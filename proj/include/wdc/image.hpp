#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Zero-based raster coordinate, top-left origin.
struct PixelCoord {
    int x = 0;
    int y = 0;

    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

using Rgb = std::array<double, 3>;

/// Row-major RGB raster with channels in [0,1].
class ImageRgb {
public:
    ImageRgb() = default;
    ImageRgb(int width, int height, Rgb fill = {0.0, 0.0, 0.0});
    /// Takes interleaved RGB samples; values are clamped into [0,1].
    ImageRgb(int width, int height, std::vector<double> interleaved);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return pixel_count() == 0; }

    Rgb pixel(std::size_t index) const { return {data_[3 * index], data_[3 * index + 1], data_[3 * index + 2]}; }
    Rgb pixel(int x, int y) const { return pixel(index(x, y)); }
    void set_pixel(std::size_t index, const Rgb& rgb);
    void set_pixel(int x, int y, const Rgb& rgb) { set_pixel(index(x, y), rgb); }

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::span<const double> samples() const { return data_; }

    friend bool operator==(const ImageRgb&, const ImageRgb&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Single-channel raster (b, t~, W, t ...).
class ScalarMap {
public:
    ScalarMap() = default;
    ScalarMap(int width, int height, double fill = 0.0);
    ScalarMap(int width, int height, std::vector<double> values);

    /// Builds a map whose values are clamped into [lo, hi].
    static ScalarMap clamped(int width, int height, std::vector<double> values, double lo = 0.0, double hi = 1.0);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double at(int x, int y) const { return data_[index(x, y)]; }
    double& at(int x, int y) { return data_[index(x, y)]; }

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool same_shape(const ScalarMap& o) const { return width_ == o.width_ && height_ == o.height_; }
    bool same_shape(const ImageRgb& img) const { return width_ == img.width() && height_ == img.height(); }

    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    double min() const;
    double max() const;
    double mean() const;

    friend bool operator==(const ScalarMap&, const ScalarMap&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Boolean raster, stored as bytes.
struct MaskMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
    std::size_t count() const;
};

/// Global atmospheric color. Channels are floored at 1/255 so division by A is always defined.
class AirLight {
public:
    static constexpr double kFloor = 1.0 / 255.0;

    AirLight() : AirLight(Rgb{1.0, 1.0, 1.0}) {}
    explicit AirLight(const Rgb& rgb);

    const Rgb& rgb() const { return rgb_; }
    double operator[](int c) const { return rgb_[c]; }

    friend bool operator==(const AirLight&, const AirLight&) = default;

private:
    Rgb rgb_;
};

/// Per pixel min over channels of I^c / A^c. Values exceed 1 where I^c > A^c.
ScalarMap min_channel(const ImageRgb& img, const AirLight& airlight);

/// Bilinear downscale so that max(width, height) <= max_side. Never upscales.
ImageRgb resize_max_side(const ImageRgb& img, int max_side);

} // namespace wdc
