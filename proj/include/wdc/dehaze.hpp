#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wdc/airlight.hpp"
#include "wdc/graph.hpp"
#include "wdc/image.hpp"
#include "wdc/solver.hpp"
#include "wdc/transmission.hpp"

namespace wdc {

inline constexpr double kDefaultEpsT = 0.05;
inline constexpr int kDefaultMaxSide = 640;
inline constexpr double kDefaultClusterFraction = 0.005;

enum class Mode {
    Wdc,  ///< unconstrained linear refinement
    Cwdc, ///< refinement with t >= b enforced exactly
};

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

struct DehazeConfig {
    Initializer initializer;
    double lambda = kDefaultLambda;
    double eps_t = kDefaultEpsT;
    double gap_floor = kDefaultGapFloor;
    double color_floor = kDefaultColorFloor;
    Mode mode = Mode::Wdc;
    std::optional<AirLight> airlight; ///< estimated from the image when absent
    double airlight_top_fraction = kDefaultAirlightTopFraction;
    int max_side = kDefaultMaxSide;
    SolverConfig solver;

    void validate() const;
};

struct DehazeDiagnostics {
    bool airlight_estimated = false;
    std::size_t cg_iterations = 0;
    double cg_residual = 0.0;
    int qp_outer_iters = 0;
    std::size_t qp_inner_iters = 0;
    double kkt_residual = 0.0;
    bool cwdc_fallback = false;
    std::string warning;
    double seconds = 0.0;
};

struct DehazeResult {
    ImageRgb input;                 ///< the (resized) hazy image the maps refer to
    ImageRgb radiance;              ///< J
    ScalarMap transmission;         ///< t
    ScalarMap lower_bound;          ///< b
    ScalarMap initial_transmission; ///< t~ (after message edits, if any)
    ScalarMap weights;              ///< W
    AirLight airlight;
    Mode mode = Mode::Wdc;
    DehazeDiagnostics diagnostics;
};

/// External knowledge: the pixels in `pixels` share transmission `target`
/// (max of b over the pixels when absent).
struct EwdcMessage {
    std::vector<PixelCoord> pixels;
    std::optional<double> target;
};

class MessageError : public Error {
public:
    using Error::Error;
};

/// J = (I - A) / ((max(t, b) + eps_t) / (1 + eps_t)) + A, clamped to [0,1].
ImageRgb recover_radiance(const ImageRgb& img, const ScalarMap& t, const ScalarMap& b, const AirLight& airlight,
                          double eps_t = kDefaultEpsT);

/// Runs the configured mode.
DehazeResult dehaze(const ImageRgb& img, const DehazeConfig& cfg, SolverTrace* trace = nullptr);
DehazeResult dehaze_wdc(const ImageRgb& img, DehazeConfig cfg, SolverTrace* trace = nullptr);
DehazeResult dehaze_cwdc(const ImageRgb& img, DehazeConfig cfg, SolverTrace* trace = nullptr);

/// Overrides t~ with each message in order (later messages win on overlap), recomputes W
/// once and re-solves in the configured mode. Coordinates refer to the resized frame.
DehazeResult apply_messages(const ImageRgb& img, const DehazeConfig& cfg, const std::vector<EwdcMessage>& messages,
                            SolverTrace* trace = nullptr);

/// The t_s a message resolves to against lower bound b. Throws MessageError for empty or
/// out-of-bounds pixel sets and for targets below max b over the set minus 1e-3.
double resolve_message_target(const EwdcMessage& message, const ScalarMap& b);

/// One message per 16x16x16 RGB cell holding at least min_fraction of the pixels, with the
/// target left to max b over the cell.
std::vector<EwdcMessage> cluster_messages(const ImageRgb& img, const ScalarMap& b,
                                          double min_fraction = kDefaultClusterFraction);

} // namespace wdc
