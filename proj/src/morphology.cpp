#include "wdc/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

namespace wdc {

std::vector<PixelCoord> disk_offsets(int radius)
{
    std::vector<PixelCoord> out;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius)
                out.push_back({dx, dy});
    return out;
}

int disk_half_width(int radius, int dy)
{
    // Largest w with w^2 + dy^2 <= r^2, computed in integers.
    const long long budget = static_cast<long long>(radius) * radius - static_cast<long long>(dy) * dy;
    if (budget < 0)
        return -1;
    auto w = static_cast<long long>(std::sqrt(static_cast<double>(budget)));
    while (w * w > budget)
        --w;
    while ((w + 1) * (w + 1) <= budget)
        ++w;
    return static_cast<int>(w);
}

namespace {

// Sliding-window extremum over [x-w, x+w] clipped to the row, for every row.
template <typename Better>
void horizontal_pass(const ScalarMap& in, int w, std::vector<double>& out, Better better)
{
    const int width = in.width();
    std::deque<int> window;
    for (int y = 0; y < in.height(); ++y) {
        const double* row = in.values().data() + static_cast<std::size_t>(y) * width;
        double* dst = out.data() + static_cast<std::size_t>(y) * width;
        window.clear();
        int next = 0;
        for (int x = 0; x < width; ++x) {
            const int hi = std::min(width - 1, x + w);
            for (; next <= hi; ++next) {
                while (!window.empty() && !better(row[window.back()], row[next]))
                    window.pop_back();
                window.push_back(next);
            }
            while (window.front() < x - w)
                window.pop_front();
            dst[x] = row[window.front()];
        }
    }
}

// Disk = union of horizontal segments; one horizontal pass per distinct half-width,
// folded into the output over the rows that use it.
template <typename Better>
ScalarMap disk_filter(const ScalarMap& in, int radius, Better better)
{
    if (radius < 0)
        throw Error("structuring element radius must be >= 0");
    ScalarMap out = in;
    if (radius == 0 || in.size() == 0)
        return out;

    const int width = in.width();
    const int height = in.height();
    std::vector<double> segment(in.size());
    int previous_w = -1;
    for (int dy_abs = radius; dy_abs >= 0; --dy_abs) {
        const int w = disk_half_width(radius, dy_abs);
        if (w != previous_w) {
            horizontal_pass(in, w, segment, better);
            previous_w = w;
        }
        for (int sign : {-1, 1}) {
            if (dy_abs == 0 && sign == 1)
                break;
            const int dy = sign * dy_abs;
            for (int y = std::max(0, -dy); y < std::min(height, height - dy); ++y) {
                const double* src = segment.data() + static_cast<std::size_t>(y + dy) * width;
                double* dst = out.values().data() + static_cast<std::size_t>(y) * width;
                for (int x = 0; x < width; ++x)
                    if (better(src[x], dst[x]))
                        dst[x] = src[x];
            }
        }
    }
    return out;
}

} // namespace

ScalarMap dilate_disk(const ScalarMap& in, int radius)
{
    return disk_filter(in, radius, std::greater<double>{});
}

ScalarMap erode_disk(const ScalarMap& in, int radius)
{
    return disk_filter(in, radius, std::less<double>{});
}

} // namespace wdc
