#include "wdc/dehaze.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

namespace wdc {

std::string_view to_string(Mode mode)
{
    return mode == Mode::Wdc ? "wdc" : "cwdc";
}

Mode parse_mode(std::string_view name)
{
    if (name == "wdc")
        return Mode::Wdc;
    if (name == "cwdc")
        return Mode::Cwdc;
    throw Error("unknown mode '" + std::string(name) + "'");
}

void DehazeConfig::validate() const
{
    if (!(lambda >= 0.0))
        throw Error("lambda must be >= 0");
    if (!(eps_t >= 0.0))
        throw Error("eps_t must be >= 0");
    if (!(gap_floor > 0.0))
        throw Error("gap_floor must be > 0");
    if (!(color_floor > 0.0))
        throw Error("color_floor must be > 0");
    if (initializer.radius < 1)
        throw Error("initializer radius must be >= 1");
    if (max_side < 1)
        throw Error("max_side must be >= 1");
    if (!(airlight_top_fraction > 0.0 && airlight_top_fraction <= 1.0))
        throw Error("airlight_top_fraction must lie in (0, 1]");
    solver.validate();
}

ImageRgb recover_radiance(const ImageRgb& img, const ScalarMap& t, const ScalarMap& b, const AirLight& airlight,
                          double eps_t)
{
    if (!t.same_shape(img) || !b.same_shape(img))
        throw Error("recover_radiance: map dimensions do not match the image");
    if (!(eps_t >= 0.0))
        throw Error("eps_t must be >= 0");
    std::vector<double> out(img.pixel_count() * 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double denom = std::max((std::max(t[i], b[i]) + eps_t) / (1.0 + eps_t), 1e-6);
        const Rgb p = img.pixel(i);
        for (int c = 0; c < 3; ++c)
            out[3 * i + c] = (p[c] - airlight[c]) / denom + airlight[c];
    }
    return ImageRgb(img.width(), img.height(), std::move(out));
}

namespace {

using Clock = std::chrono::steady_clock;

struct Prepared {
    ImageRgb image;
    AirLight airlight;
    bool estimated = false;
    ScalarMap b;
    ScalarMap t_init;
};

Prepared prepare(const ImageRgb& input, const DehazeConfig& cfg)
{
    cfg.validate();
    if (input.empty())
        throw Error("cannot dehaze an empty image");
    Prepared p;
    p.image = resize_max_side(input, cfg.max_side);
    if (cfg.airlight) {
        p.airlight = *cfg.airlight;
    } else {
        p.airlight = estimate_airlight(p.image, cfg.initializer.radius, cfg.airlight_top_fraction);
        p.estimated = true;
    }
    p.b = lower_bound(p.image, p.airlight);
    p.t_init = initial_transmission(p.b, cfg.initializer);
    return p;
}

ScalarMap clamp_unit(int w, int h, std::vector<double> values)
{
    return ScalarMap::clamped(w, h, std::move(values));
}

// Refinement, recovery and bookkeeping shared by every entry point.
DehazeResult refine(Prepared p, const DehazeConfig& cfg, SolverTrace* trace, Clock::time_point start)
{
    DehazeResult res;
    res.mode = cfg.mode;
    res.airlight = p.airlight;
    res.diagnostics.airlight_estimated = p.estimated;
    res.weights = weight_map(p.t_init, p.b, cfg.gap_floor);

    const int w = p.image.width();
    const int h = p.image.height();
    const SparseSymmetric laplacian = build_laplacian(p.image, cfg.color_floor);

    const LinearSystem sys = assemble_wdc_system(res.weights, p.t_init, laplacian, cfg.lambda);
    SpdStats stats;
    auto t_wdc = solve_spd(sys.matrix, sys.rhs, cfg.solver, &stats, trace);
    res.diagnostics.cg_iterations = stats.iterations;
    res.diagnostics.cg_residual = stats.relative_residual;

    if (cfg.mode == Mode::Wdc) {
        res.transmission = clamp_unit(w, h, std::move(t_wdc));
    } else {
        const SparseQuadratic qp = assemble_cwdc_qp(res.weights, p.t_init, p.b, laplacian, cfg.lambda);
        try {
            const QpSolution sol = solve_nnqp(qp, cfg.solver, trace);
            std::vector<double> t(sol.x.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                t[i] = sol.x[i] + p.b[i];
            res.transmission = clamp_unit(w, h, std::move(t));
            res.diagnostics.qp_outer_iters = sol.outer_iters;
            res.diagnostics.qp_inner_iters = sol.inner_iters;
            res.diagnostics.kkt_residual = sol.kkt_residual;
        } catch (const QpError& e) {
            // The WDC estimate with t = max(t, b) keeps the lower bound satisfied.
            for (std::size_t i = 0; i < t_wdc.size(); ++i)
                t_wdc[i] = std::max(t_wdc[i], p.b[i]);
            res.transmission = clamp_unit(w, h, std::move(t_wdc));
            res.diagnostics.cwdc_fallback = true;
            res.diagnostics.qp_outer_iters = e.best().outer_iters;
            res.diagnostics.qp_inner_iters = e.best().inner_iters;
            res.diagnostics.kkt_residual = e.best().kkt_residual;
            res.diagnostics.warning = std::string("CWDC fell back to clamped WDC: ") + e.what();
        }
    }

    res.radiance = recover_radiance(p.image, res.transmission, p.b, p.airlight, cfg.eps_t);
    res.input = std::move(p.image);
    res.lower_bound = std::move(p.b);
    res.initial_transmission = std::move(p.t_init);
    res.diagnostics.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return res;
}

} // namespace

DehazeResult dehaze(const ImageRgb& img, const DehazeConfig& cfg, SolverTrace* trace)
{
    const auto start = Clock::now();
    return refine(prepare(img, cfg), cfg, trace, start);
}

DehazeResult dehaze_wdc(const ImageRgb& img, DehazeConfig cfg, SolverTrace* trace)
{
    cfg.mode = Mode::Wdc;
    return dehaze(img, cfg, trace);
}

DehazeResult dehaze_cwdc(const ImageRgb& img, DehazeConfig cfg, SolverTrace* trace)
{
    cfg.mode = Mode::Cwdc;
    return dehaze(img, cfg, trace);
}

double resolve_message_target(const EwdcMessage& message, const ScalarMap& b)
{
    if (message.pixels.empty())
        throw MessageError("message pixel set is empty");
    double max_b = 0.0;
    for (const auto& px : message.pixels) {
        if (!b.contains(px.x, px.y)) {
            std::ostringstream msg;
            msg << "message pixel (" << px.x << "," << px.y << ") is outside the " << b.width() << "x" << b.height()
                << " frame";
            throw MessageError(msg.str());
        }
        max_b = std::max(max_b, b.at(px.x, px.y));
    }
    if (!message.target)
        return max_b;
    const double target = *message.target;
    if (!(target >= 0.0 && target <= 1.0))
        throw MessageError("message target must lie in [0,1]");
    if (target < max_b - 1e-3) {
        std::ostringstream msg;
        msg << "message target " << target << " is below the lower bound " << max_b << " of its pixels";
        throw MessageError(msg.str());
    }
    return target;
}

DehazeResult apply_messages(const ImageRgb& img, const DehazeConfig& cfg, const std::vector<EwdcMessage>& messages,
                            SolverTrace* trace)
{
    const auto start = Clock::now();
    Prepared p = prepare(img, cfg);
    for (const auto& message : messages) {
        const double target = resolve_message_target(message, p.b);
        for (const auto& px : message.pixels)
            p.t_init.at(px.x, px.y) = target;
    }
    return refine(std::move(p), cfg, trace, start);
}

std::vector<EwdcMessage> cluster_messages(const ImageRgb& img, const ScalarMap& b, double min_fraction)
{
    if (!b.same_shape(img))
        throw Error("cluster_messages: lower bound does not match the image");
    if (!(min_fraction > 0.0 && min_fraction < 1.0))
        throw Error("min_fraction must lie in (0, 1)");

    constexpr int kBins = 16;
    auto bin = [](double v) { return std::min(kBins - 1, static_cast<int>(std::floor(v * kBins))); };
    std::map<int, std::vector<PixelCoord>> cells;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Rgb p = img.pixel(x, y);
            cells[(bin(p[0]) * kBins + bin(p[1])) * kBins + bin(p[2])].push_back({x, y});
        }
    }
    const double threshold = min_fraction * static_cast<double>(img.pixel_count());
    std::vector<EwdcMessage> out;
    for (auto& [cell, pixels] : cells)
        if (static_cast<double>(pixels.size()) >= threshold)
            out.push_back({std::move(pixels), std::nullopt});
    return out;
}

} // namespace wdc
