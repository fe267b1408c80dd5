#include "wdc/transmission.hpp"

#include <algorithm>
#include <string>

#include "wdc/morphology.hpp"

namespace wdc {

std::string_view to_string(Initializer::Kind kind)
{
    switch (kind) {
    case Initializer::Kind::Dilation:
        return "dilation";
    case Initializer::Kind::Opening:
        return "opening";
    }
    return "unknown";
}

Initializer::Kind parse_initializer_kind(std::string_view name)
{
    if (name == "dilation")
        return Initializer::Kind::Dilation;
    if (name == "opening")
        return Initializer::Kind::Opening;
    throw Error("unknown initializer '" + std::string(name) + "'");
}

ScalarMap lower_bound(const ImageRgb& img, const AirLight& airlight)
{
    ScalarMap b = min_channel(img, airlight);
    for (auto& v : b.values())
        v = std::clamp(1.0 - v, 0.0, 1.0);
    return b;
}

ScalarMap initial_transmission(const ScalarMap& b, const Initializer& init)
{
    if (init.radius < 1)
        throw Error("initializer radius must be >= 1");
    switch (init.kind) {
    case Initializer::Kind::Dilation:
        return dilate_disk(b, init.radius);
    case Initializer::Kind::Opening:
        // Opening of the normalized image 1-b is the closing of b.
        return erode_disk(dilate_disk(b, init.radius), init.radius);
    }
    throw Error("unknown initializer kind");
}

namespace {

void require_same_shape(const ScalarMap& a, const ScalarMap& b)
{
    if (!a.same_shape(b))
        throw Error("map dimensions do not match");
}

} // namespace

ScalarMap weight_map(const ScalarMap& t_init, const ScalarMap& b, double gap_floor)
{
    require_same_shape(t_init, b);
    if (!(gap_floor > 0.0))
        throw Error("gap_floor must be > 0");
    ScalarMap w(t_init.width(), t_init.height());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double gap = std::max(std::max(t_init[i] - b[i], 0.0), gap_floor);
        w[i] = 1.0 / (gap * gap);
        sum += w[i];
    }
    if (w.size() > 0) {
        const double mean = sum / static_cast<double>(w.size());
        for (auto& v : w.values())
            v /= mean;
    }
    return w;
}

MaskMap dark_pixel_mask(const ScalarMap& t_init, const ScalarMap& b, double tol)
{
    require_same_shape(t_init, b);
    if (!(tol >= 0.0))
        throw Error("dark pixel tolerance must be >= 0");
    MaskMap mask{t_init.width(), t_init.height(), std::vector<std::uint8_t>(t_init.size())};
    for (std::size_t i = 0; i < t_init.size(); ++i)
        mask.data[i] = (t_init[i] - b[i] <= tol) ? 1 : 0;
    return mask;
}

} // namespace wdc
