#pragma once

#include <limits>
#include <string_view>

#include "wdc/image.hpp"

namespace wdc {

inline constexpr int kDefaultMaskRadius = 25;
inline constexpr double kDefaultGapFloor = 1e-3;

/// Local-constant assumption used to turn the lower bound into an initial transmission.
struct Initializer {
    enum class Kind {
        Dilation, ///< t~ = max over the patch of b
        Opening,  ///< image opening of 1-b, i.e. t~ = min_{y in patch} max_{z in patch(y)} b(z)
    };
    Kind kind = Kind::Dilation;
    int radius = kDefaultMaskRadius;

    friend bool operator==(const Initializer&, const Initializer&) = default;
};

std::string_view to_string(Initializer::Kind kind);
Initializer::Kind parse_initializer_kind(std::string_view name);

/// b(x) = 1 - min_c I^c(x)/A^c, clamped to [0,1].
ScalarMap lower_bound(const ImageRgb& img, const AirLight& airlight);

ScalarMap initial_transmission(const ScalarMap& b, const Initializer& init);

/// W = 1 / max(t~ - b, gap_floor)^2 normalized to unit mean. Negative gaps count as zero.
ScalarMap weight_map(const ScalarMap& t_init, const ScalarMap& b, double gap_floor = kDefaultGapFloor);

/// Pixels with t~ - b <= tol, the likely dark pixels.
MaskMap dark_pixel_mask(const ScalarMap& t_init, const ScalarMap& b, double tol = 0.0);

} // namespace wdc
