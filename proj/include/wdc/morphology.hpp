#pragma once

#include <vector>

#include "wdc/image.hpp"

namespace wdc {

/// Offsets of the discrete disk {(dx,dy) : dx^2 + dy^2 <= r^2}, row-major.
std::vector<PixelCoord> disk_offsets(int radius);

/// Half-width of the disk row at vertical offset dy (|dy| <= radius).
int disk_half_width(int radius, int dy);

/// Grayscale dilation (max) and erosion (min) over a round mask of the given radius.
/// Patches are clipped at the raster border.
ScalarMap dilate_disk(const ScalarMap& in, int radius);
ScalarMap erode_disk(const ScalarMap& in, int radius);

} // namespace wdc
