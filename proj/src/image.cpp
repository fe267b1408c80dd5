#include "wdc/image.hpp"

#include "resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wdc {

namespace {

void check_dims(int width, int height)
{
    if (width < 0 || height < 0)
        throw Error("negative raster dimensions");
}

} // namespace

ImageRgb::ImageRgb(int width, int height, Rgb fill) : width_(width), height_(height)
{
    check_dims(width, height);
    for (auto& v : fill)
        v = std::clamp(v, 0.0, 1.0);
    data_.resize(pixel_count() * 3);
    for (std::size_t i = 0; i < pixel_count(); ++i)
        std::copy(fill.begin(), fill.end(), data_.begin() + 3 * i);
}

ImageRgb::ImageRgb(int width, int height, std::vector<double> interleaved)
    : width_(width), height_(height), data_(std::move(interleaved))
{
    check_dims(width, height);
    if (data_.size() != pixel_count() * 3)
        throw Error("image data length does not match width*height*3");
    for (auto& v : data_)
        v = std::clamp(v, 0.0, 1.0);
}

void ImageRgb::set_pixel(std::size_t index, const Rgb& rgb)
{
    for (int c = 0; c < 3; ++c)
        data_[3 * index + c] = std::clamp(rgb[c], 0.0, 1.0);
}

ScalarMap::ScalarMap(int width, int height, double fill)
    : width_(width), height_(height), data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill)
{
    check_dims(width, height);
}

ScalarMap::ScalarMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), data_(std::move(values))
{
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw Error("map data length does not match width*height");
}

ScalarMap ScalarMap::clamped(int width, int height, std::vector<double> values, double lo, double hi)
{
    for (auto& v : values)
        v = std::clamp(v, lo, hi);
    return ScalarMap(width, height, std::move(values));
}

double ScalarMap::min() const
{
    return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double ScalarMap::max() const
{
    return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double ScalarMap::mean() const
{
    if (data_.empty())
        return 0.0;
    return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

std::size_t MaskMap::count() const
{
    return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

AirLight::AirLight(const Rgb& rgb)
{
    for (int c = 0; c < 3; ++c) {
        if (!std::isfinite(rgb[c]))
            throw Error("air-light channel is not finite");
        rgb_[c] = std::clamp(rgb[c], kFloor, 1.0);
    }
}

ScalarMap min_channel(const ImageRgb& img, const AirLight& airlight)
{
    ScalarMap out(img.width(), img.height());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const Rgb p = img.pixel(i);
        out[i] = std::min({p[0] / airlight[0], p[1] / airlight[1], p[2] / airlight[2]});
    }
    return out;
}

ImageRgb resize_max_side(const ImageRgb& img, int max_side)
{
    const auto size = detail::fitted_size(img.width(), img.height(), max_side);
    if (size.width == img.width() && size.height == img.height())
        return img;
    return detail::resample_bilinear(img.width(), img.height(), size.width, size.height,
                                     [&](int x, int y) { return img.pixel(x, y); });
}

} // namespace wdc
