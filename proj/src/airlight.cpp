#include "wdc/airlight.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wdc/morphology.hpp"

namespace wdc {

ScalarMap dark_channel(const ImageRgb& img, int radius)
{
    if (radius < 0)
        throw Error("dark channel radius must be >= 0");
    ScalarMap pointwise(img.width(), img.height());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const Rgb p = img.pixel(i);
        pointwise[i] = std::min({p[0], p[1], p[2]});
    }
    return erode_disk(pointwise, radius);
}

AirLight estimate_airlight(const ImageRgb& img, int radius, double top_fraction)
{
    if (!(top_fraction > 0.0 && top_fraction <= 1.0))
        throw Error("top_fraction must lie in (0, 1]");
    if (img.empty())
        throw Error("air-light indeterminate: empty image");

    const auto samples = img.samples();
    if (std::all_of(samples.begin(), samples.end(), [](double v) { return v == 0.0; }))
        throw Error("air-light indeterminate: image is entirely black");

    const ScalarMap dark = dark_channel(img, radius);
    const std::size_t n = img.pixel_count();
    const auto count = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(n))), 1, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable on index so equal dark-channel values keep row-major order.
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                      [&](std::size_t a, std::size_t b) { return dark[a] > dark[b] || (dark[a] == dark[b] && a < b); });

    std::size_t best = order[0];
    double best_sum = -1.0;
    for (std::size_t k = 0; k < count; ++k) {
        const Rgb p = img.pixel(order[k]);
        const double sum = p[0] + p[1] + p[2];
        if (sum > best_sum || (sum == best_sum && order[k] < best)) {
            best_sum = sum;
            best = order[k];
        }
    }
    return AirLight(img.pixel(best));
}

} // namespace wdc
