#include "wdc/config_json.hpp"

#include <set>

namespace wdc {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const char* where)
{
    if (!obj.is_object())
        throw Error(std::string(where) + " must be a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key))
            throw Error(std::string("unknown ") + where + " key '" + key + "'");
}

std::string_view to_string(PreconditionerKind kind)
{
    return kind == PreconditionerKind::Jacobi ? "jacobi" : "ic0";
}

PreconditionerKind parse_preconditioner(const std::string& name)
{
    if (name == "jacobi")
        return PreconditionerKind::Jacobi;
    if (name == "ic0")
        return PreconditionerKind::IncompleteCholesky;
    throw Error("unknown preconditioner '" + name + "'");
}

} // namespace

DehazeConfig config_from_json(const json& doc, DehazeConfig cfg)
{
    reject_unknown(doc,
                   {"mode", "init", "radius", "lambda", "eps_t", "gap_floor", "color_floor", "airlight",
                    "airlight_top_fraction", "max_side", "solver"},
                   "config");
    try {
        if (doc.contains("mode"))
            cfg.mode = parse_mode(doc["mode"].get<std::string>());
        if (doc.contains("init"))
            cfg.initializer.kind = parse_initializer_kind(doc["init"].get<std::string>());
        if (doc.contains("radius"))
            cfg.initializer.radius = doc["radius"].get<int>();
        if (doc.contains("lambda"))
            cfg.lambda = doc["lambda"].get<double>();
        if (doc.contains("eps_t"))
            cfg.eps_t = doc["eps_t"].get<double>();
        if (doc.contains("gap_floor"))
            cfg.gap_floor = doc["gap_floor"].get<double>();
        if (doc.contains("color_floor"))
            cfg.color_floor = doc["color_floor"].get<double>();
        if (doc.contains("airlight_top_fraction"))
            cfg.airlight_top_fraction = doc["airlight_top_fraction"].get<double>();
        if (doc.contains("max_side"))
            cfg.max_side = doc["max_side"].get<int>();
        if (doc.contains("airlight")) {
            const auto& a = doc["airlight"];
            if (a.is_null()) {
                cfg.airlight.reset();
            } else {
                const auto v = a.get<std::vector<double>>();
                if (v.size() != 3)
                    throw Error("airlight must have three channels");
                for (double c : v)
                    if (!(c > 0.0 && c <= 1.0))
                        throw Error("airlight channels must lie in (0, 1]");
                cfg.airlight = AirLight(Rgb{v[0], v[1], v[2]});
            }
        }
        if (doc.contains("solver")) {
            const auto& s = doc["solver"];
            reject_unknown(s,
                           {"preconditioner", "ic_relaxation", "cg_tol", "cg_max_iter", "al_penalty_init",
                            "al_penalty_growth", "al_outer_max", "kkt_tol"},
                           "solver");
            if (s.contains("preconditioner"))
                cfg.solver.preconditioner = parse_preconditioner(s["preconditioner"].get<std::string>());
            if (s.contains("ic_relaxation"))
                cfg.solver.ic_relaxation = s["ic_relaxation"].get<double>();
            if (s.contains("cg_tol"))
                cfg.solver.cg_tol = s["cg_tol"].get<double>();
            if (s.contains("cg_max_iter"))
                cfg.solver.cg_max_iter = s["cg_max_iter"].get<std::size_t>();
            if (s.contains("al_penalty_init"))
                cfg.solver.al_penalty_init = s["al_penalty_init"].get<double>();
            if (s.contains("al_penalty_growth"))
                cfg.solver.al_penalty_growth = s["al_penalty_growth"].get<double>();
            if (s.contains("al_outer_max"))
                cfg.solver.al_outer_max = s["al_outer_max"].get<int>();
            if (s.contains("kkt_tol"))
                cfg.solver.kkt_tol = s["kkt_tol"].get<double>();
        }
    } catch (const json::exception& e) {
        throw Error(std::string("invalid config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json config_to_json(const DehazeConfig& cfg)
{
    json doc = {
        {"mode", to_string(cfg.mode)},
        {"init", to_string(cfg.initializer.kind)},
        {"radius", cfg.initializer.radius},
        {"lambda", cfg.lambda},
        {"eps_t", cfg.eps_t},
        {"gap_floor", cfg.gap_floor},
        {"color_floor", cfg.color_floor},
        {"airlight_top_fraction", cfg.airlight_top_fraction},
        {"max_side", cfg.max_side},
        {"solver",
         {
             {"preconditioner", to_string(cfg.solver.preconditioner)},
             {"ic_relaxation", cfg.solver.ic_relaxation},
             {"cg_tol", cfg.solver.cg_tol},
             {"cg_max_iter", cfg.solver.cg_max_iter},
             {"al_penalty_init", cfg.solver.al_penalty_init},
             {"al_penalty_growth", cfg.solver.al_penalty_growth},
             {"al_outer_max", cfg.solver.al_outer_max},
             {"kkt_tol", cfg.solver.kkt_tol},
         }},
    };
    doc["airlight"] = cfg.airlight ? json(cfg.airlight->rgb()) : json(nullptr);
    return doc;
}

json diagnostics_to_json(const DehazeDiagnostics& d)
{
    json doc = {
        {"airlight_estimated", d.airlight_estimated},
        {"cg_iterations", d.cg_iterations},
        {"cg_residual", d.cg_residual},
        {"qp_outer_iters", d.qp_outer_iters},
        {"qp_inner_iters", d.qp_inner_iters},
        {"kkt_residual", d.kkt_residual},
        {"cwdc_fallback", d.cwdc_fallback},
        {"seconds", d.seconds},
    };
    if (!d.warning.empty())
        doc["warning"] = d.warning;
    return doc;
}

} // namespace wdc
