#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "wdc/image.hpp"

namespace wdc {

/// Ground-truth scene: radiance J, depth d, attenuation beta and air-light A.
struct SceneSpec {
    ImageRgb radiance;
    ScalarMap depth;
    double beta = 1.0;
    AirLight airlight;

    void validate() const;
    /// t = exp(-beta d)
    ScalarMap transmission() const;
};

struct HazyScene {
    ImageRgb hazy;
    ScalarMap transmission;
};

/// I = t J + (1 - t) A, channelwise, clamped to [0,1].
HazyScene synthesize_haze(const SceneSpec& spec);

enum class SceneKind {
    Steps,      ///< three horizontal depth bands {1, 2, 4}
    Occluder,   ///< depth-1 rectangle over a depth-8 background
    Gradient,   ///< linear depth ramp 1 -> 8, left to right
    Perforated, ///< occluder pierced by small holes showing the background
};

std::string_view to_string(SceneKind kind);
SceneKind parse_scene_kind(std::string_view name);

inline constexpr std::uint32_t kDefaultSceneSeed = 20190811;

/// Deterministic textured scene of 4x4 tiles; every 2x2 block of tiles holds a dark tile
/// (one channel exactly zero), so the dark channel of J vanishes over any round mask of radius >= 6.
SceneSpec make_test_scene(SceneKind kind, int size, double beta = 1.0, AirLight airlight = AirLight(Rgb{1.0, 1.0, 1.0}),
                          std::uint32_t seed = kDefaultSceneSeed);
SceneSpec make_test_scene(SceneKind kind, int width, int height, double beta = 1.0,
                          AirLight airlight = AirLight(Rgb{1.0, 1.0, 1.0}), std::uint32_t seed = kDefaultSceneSeed);

/// Hole pixels of a Perforated scene of the given size (background visible through the occluder).
MaskMap perforation_mask(int size);
MaskMap perforation_mask(int width, int height);

double mse(const ImageRgb& a, const ImageRgb& b);
double mse(const ScalarMap& a, const ScalarMap& b);
/// MSE restricted to pixels where mask is set.
double mse(const ScalarMap& a, const ScalarMap& b, const MaskMap& mask);

/// BT.601 luma.
ScalarMap luminance(const ImageRgb& img);

/// Mean single-scale SSIM over luminance: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1, averaged over window positions fully inside the image.
double ssim(const ImageRgb& a, const ImageRgb& b);
double ssim(const ScalarMap& a, const ScalarMap& b);

/// JSON manifest plus PNG sidecars (radiance 8-bit, depth 16-bit scaled by depth_scale).
void save_scene(const SceneSpec& spec, const std::filesystem::path& json_path);
SceneSpec load_scene(const std::filesystem::path& json_path);

} // namespace wdc
