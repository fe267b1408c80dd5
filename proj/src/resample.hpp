#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wdc/image.hpp"

namespace wdc::detail {

struct ResampleSize {
    int width;
    int height;
};

inline ResampleSize fitted_size(int w, int h, int max_side)
{
    if (max_side < 1)
        throw Error("max_side must be >= 1");
    const int longest = std::max(w, h);
    if (longest <= max_side)
        return {w, h};
    const double scale = static_cast<double>(max_side) / longest;
    return {std::max(1, static_cast<int>(std::lround(w * scale))), std::max(1, static_cast<int>(std::lround(h * scale)))};
}

// Bilinear resampling with pixel-center aligned positions clamped at the borders.
// fetch(x, y) returns the source Rgb; shared by resize_max_side and the downscaling decoder
// so both produce identical samples.
template <class Fetch>
ImageRgb resample_bilinear(int src_w, int src_h, int out_w, int out_h, Fetch fetch)
{
    auto source_coord = [](int dst, int src_len, int dst_len) {
        const double s = (dst + 0.5) * static_cast<double>(src_len) / dst_len - 0.5;
        return std::clamp(s, 0.0, static_cast<double>(src_len - 1));
    };

    std::vector<double> out(static_cast<std::size_t>(out_w) * out_h * 3);
    for (int y = 0; y < out_h; ++y) {
        const double sy = source_coord(y, src_h, out_h);
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, src_h - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double sx = source_coord(x, src_w, out_w);
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, src_w - 1);
            const double fx = sx - x0;
            const Rgb p00 = fetch(x0, y0), p10 = fetch(x1, y0);
            const Rgb p01 = fetch(x0, y1), p11 = fetch(x1, y1);
            for (int c = 0; c < 3; ++c) {
                const double top = p00[c] + (p10[c] - p00[c]) * fx;
                const double bottom = p01[c] + (p11[c] - p01[c]) * fx;
                out[(static_cast<std::size_t>(y) * out_w + x) * 3 + c] = top + (bottom - top) * fy;
            }
        }
    }
    return ImageRgb(out_w, out_h, std::move(out));
}

} // namespace wdc::detail
