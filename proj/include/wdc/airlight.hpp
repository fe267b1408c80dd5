#pragma once

#include "wdc/image.hpp"

namespace wdc {

/// Fraction of brightest dark-channel pixels considered as air-light candidates (top 0.1%).
inline constexpr double kDefaultAirlightTopFraction = 0.001;

/// Min over a round patch of min over channels, on raw intensities.
ScalarMap dark_channel(const ImageRgb& img, int radius);

/// Among the ceil(top_fraction * N) pixels with the largest dark channel, returns the
/// color of the one with the largest R+G+B. Ties go to the smallest row-major index.
/// Throws wdc::Error("air-light indeterminate") for an all-black image.
AirLight estimate_airlight(const ImageRgb& img, int radius, double top_fraction = kDefaultAirlightTopFraction);

} // namespace wdc
