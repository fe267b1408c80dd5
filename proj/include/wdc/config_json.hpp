#pragma once

#include "json.hpp"

#include "wdc/dehaze.hpp"

namespace wdc {

/// Keys: mode, init, radius, lambda, eps_t, gap_floor, color_floor, airlight ([r,g,b] or null),
/// airlight_top_fraction, max_side, solver {preconditioner, ic_relaxation, cg_tol, cg_max_iter,
/// al_penalty_init, al_penalty_growth, al_outer_max, kkt_tol}. Missing keys keep their defaults,
/// unknown keys are rejected. The result is validated.
DehazeConfig config_from_json(const nlohmann::json& doc, DehazeConfig base = {});
nlohmann::json config_to_json(const DehazeConfig& cfg);

nlohmann::json diagnostics_to_json(const DehazeDiagnostics& d);

} // namespace wdc
