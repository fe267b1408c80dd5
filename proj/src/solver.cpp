#include "wdc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace wdc {

std::size_t SolverConfig::max_iterations_for(std::size_t n) const
{
    if (cg_max_iter > 0)
        return cg_max_iter;
    const auto scaled = static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(static_cast<double>(n))));
    return std::max<std::size_t>(500, scaled);
}

void SolverConfig::validate() const
{
    if (!(cg_tol > 0.0) || !(kkt_tol > 0.0) || !(al_penalty_init > 0.0))
        throw Error("solver tolerances and penalty must be > 0");
    if (!(al_penalty_growth > 1.0))
        throw Error("al_penalty_growth must be > 1");
    if (al_outer_max < 1)
        throw Error("al_outer_max must be >= 1");
    if (!(ic_relaxation >= 0.0 && ic_relaxation <= 1.0))
        throw Error("ic_relaxation must lie in [0, 1]");
}

void SolverTrace::write_csv(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write trace '" + path.string() + "'");
    out << "phase,iteration,residual,objective\n";
    out << std::setprecision(17);
    for (const auto& row : rows)
        out << row.phase << ',' << row.iteration << ',' << row.residual << ',' << row.objective << '\n';
}

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> a)
{
    return std::sqrt(dot(a, a));
}

struct PcgResult {
    std::size_t iterations = 0;
    double residual = 0.0; // true residual 2-norm at exit
    bool converged = false;
};

// z = P^{-1} r for a Jacobi or incomplete-Cholesky preconditioner of the principal block of M
// selected by the free mask. Rows outside the block are identity rows.
class Preconditioner {
public:
    Preconditioner(const SparseSymmetric& M, std::span<const std::uint8_t> free_mask, const SolverConfig& cfg)
        : n_(M.dim())
    {
        if (cfg.preconditioner == PreconditionerKind::IncompleteCholesky && factor(M, free_mask, cfg.ic_relaxation))
            return;
        lower_ptr_.clear();
        inv_diag_ = M.diagonal();
        for (std::size_t i = 0; i < n_; ++i) {
            if (!(inv_diag_[i] > 0.0))
                throw Error("matrix diagonal must be positive for PCG");
            inv_diag_[i] = 1.0 / inv_diag_[i];
        }
    }

    void apply(std::span<const double> r, std::span<double> z) const
    {
        if (lower_ptr_.empty()) {
            for (std::size_t i = 0; i < n_; ++i)
                z[i] = r[i] * inv_diag_[i];
            return;
        }
        // L y = r, then L' z = y; the strictly lower part is stored by rows.
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = r[i];
            for (std::size_t k = lower_ptr_[i]; k < lower_ptr_[i + 1]; ++k)
                acc -= lower_val_[k] * z[lower_col_[k]];
            z[i] = acc * inv_diag_[i];
        }
        for (std::size_t i = n_; i-- > 0;) {
            z[i] *= inv_diag_[i];
            const double zi = z[i];
            for (std::size_t k = lower_ptr_[i]; k < lower_ptr_[i + 1]; ++k)
                z[lower_col_[k]] -= lower_val_[k] * zi;
        }
    }

private:
    // Right-looking IC(0) on the pattern of tril(M). Dropped fill is moved to the diagonal
    // with weight `relaxation` (0 = plain IC(0), 1 = modified IC). Returns false on breakdown.
    bool factor(const SparseSymmetric& M, std::span<const std::uint8_t> free_mask, double relaxation)
    {
        const bool masked = !free_mask.empty();
        auto is_free = [&](std::size_t i) { return !masked || free_mask[i] != 0; };
        const auto ptr = M.row_ptr();
        const auto col = M.col_index();
        const auto val = M.values();

        // Work on the upper triangle by rows (= lower by columns).
        std::vector<std::size_t> up_ptr(n_ + 1, 0);
        std::vector<std::size_t> up_col;
        std::vector<double> up_val;
        std::vector<double> diag(n_, 1.0);
        for (std::size_t i = 0; i < n_; ++i) {
            if (is_free(i)) {
                for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
                    const std::size_t j = col[k];
                    if (j == i)
                        diag[i] = val[k];
                    else if (j > i && is_free(j)) {
                        up_col.push_back(j);
                        up_val.push_back(val[k]);
                    }
                }
            }
            up_ptr[i + 1] = up_col.size();
        }
        auto find = [&](std::size_t row, std::size_t c) -> double* {
            const auto b = up_col.begin() + static_cast<std::ptrdiff_t>(up_ptr[row]);
            const auto e = up_col.begin() + static_cast<std::ptrdiff_t>(up_ptr[row + 1]);
            const auto it = std::lower_bound(b, e, c);
            return (it != e && *it == c) ? &up_val[static_cast<std::size_t>(it - up_col.begin())] : nullptr;
        };

        for (std::size_t k = 0; k < n_; ++k) {
            if (!(diag[k] > 0.0))
                return false;
            const double pivot = std::sqrt(diag[k]);
            diag[k] = pivot;
            for (std::size_t a = up_ptr[k]; a < up_ptr[k + 1]; ++a)
                up_val[a] /= pivot;
            for (std::size_t a = up_ptr[k]; a < up_ptr[k + 1]; ++a) {
                const std::size_t i = up_col[a];
                const double li = up_val[a];
                diag[i] -= li * li;
                for (std::size_t b = a + 1; b < up_ptr[k + 1]; ++b) {
                    const std::size_t j = up_col[b];
                    const double update = li * up_val[b];
                    if (double* entry = find(i, j)) {
                        *entry -= update;
                    } else if (relaxation > 0.0) {
                        diag[i] -= relaxation * update;
                        diag[j] -= relaxation * update;
                    }
                }
            }
        }

        // Transpose the factor so the forward sweep reads rows of L.
        lower_ptr_.assign(n_ + 1, 0);
        for (std::size_t c : up_col)
            ++lower_ptr_[c + 1];
        for (std::size_t i = 0; i < n_; ++i)
            lower_ptr_[i + 1] += lower_ptr_[i];
        lower_col_.resize(up_col.size());
        lower_val_.resize(up_col.size());
        std::vector<std::size_t> fill(lower_ptr_.begin(), lower_ptr_.end() - 1);
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t a = up_ptr[r]; a < up_ptr[r + 1]; ++a) {
                const std::size_t dst = fill[up_col[a]]++;
                lower_col_[dst] = r;
                lower_val_[dst] = up_val[a];
            }
        inv_diag_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i)
            inv_diag_[i] = 1.0 / diag[i];
        return true;
    }

    std::size_t n_;
    std::vector<double> inv_diag_;
    std::vector<std::size_t> lower_ptr_;
    std::vector<std::size_t> lower_col_;
    std::vector<double> lower_val_;
};

// PCG on the principal block of M selected by `free_mask` (all rows when empty).
// Entries outside the block are held at zero in x.
PcgResult pcg(const SparseSymmetric& M, std::span<const double> rhs, std::span<double> x,
              std::span<const std::uint8_t> free_mask, double target, const SolverConfig& cfg, SolverTrace* trace)
{
    const std::size_t n = M.dim();
    const std::size_t max_iter = cfg.max_iterations_for(n);
    const bool masked = !free_mask.empty();
    auto is_free = [&](std::size_t i) { return !masked || free_mask[i] != 0; };

    auto apply = [&](std::span<const double> in, std::span<double> out) {
        M.multiply(in, out);
        if (masked)
            for (std::size_t i = 0; i < n; ++i)
                if (!free_mask[i])
                    out[i] = 0.0;
    };

    for (std::size_t i = 0; i < n; ++i)
        if (!is_free(i))
            x[i] = 0.0;

    std::vector<double> r(n), z(n), p(n), q(n);
    apply(x, r);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = is_free(i) ? rhs[i] - r[i] : 0.0;

    PcgResult result;
    double res = norm2(r);
    if (res <= target) {
        result.residual = res;
        result.converged = true;
        return result;
    }
    const Preconditioner precond(M, free_mask, cfg);
    precond.apply(r, z);
    p = z;
    double rz = dot(r, z);

    while (result.iterations < max_iter) {
        apply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0))
            throw SolverError("PCG breakdown: matrix is not positive definite on the solve block", res);
        const double alpha = rz / pq;
        double rr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            rr += r[i] * r[i];
        }
        ++result.iterations;
        res = std::sqrt(rr);
        if (trace)
            trace->rows.push_back({"cg", result.iterations, res, std::numeric_limits<double>::quiet_NaN()});
        if (res <= target)
            break;
        precond.apply(r, z);
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = z[i] + beta * p[i];
    }

    // Recursive residuals drift; report the true one.
    apply(x, q);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = is_free(i) ? rhs[i] - q[i] : 0.0;
    result.residual = norm2(r);
    result.converged = result.residual <= target * 1.0001 || res <= target;
    return result;
}

double inf_norm(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

} // namespace

std::vector<double> solve_spd(const SparseSymmetric& M, std::span<const double> rhs, const SolverConfig& cfg,
                              SpdStats* stats, SolverTrace* trace)
{
    cfg.validate();
    if (rhs.size() != M.dim())
        throw Error("right-hand side length does not match matrix dimension");
    std::vector<double> x(M.dim(), 0.0);
    const double rhs_norm = norm2(rhs);
    if (rhs_norm == 0.0) {
        if (stats)
            *stats = {};
        return x;
    }
    const PcgResult res = pcg(M, rhs, x, {}, cfg.cg_tol * rhs_norm, cfg, trace);
    if (stats)
        *stats = {res.iterations, res.residual / rhs_norm};
    if (!res.converged) {
        std::ostringstream msg;
        msg << "PCG did not converge in " << res.iterations << " iterations (relative residual "
            << res.residual / rhs_norm << ")";
        throw SolverError(msg.str(), res.residual / rhs_norm);
    }
    return x;
}

double kkt_violation(const SparseQuadratic& qp, std::span<const double> x, double tol)
{
    const auto g = qp.gradient(x);
    const double comp_scale = 1.0 + inf_norm(qp.c);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        worst = std::max(worst, -x[i]);
        if (x[i] <= tol)
            worst = std::max(worst, -g[i]);
        else
            worst = std::max(worst, std::abs(g[i]));
        worst = std::max(worst, std::max(x[i], 0.0) * std::abs(g[i]) / comp_scale);
    }
    return worst;
}

namespace {

class NnqpSolver {
public:
    NnqpSolver(const SparseQuadratic& qp, const SolverConfig& cfg, SolverTrace* trace)
        : qp_(qp), cfg_(cfg), trace_(trace), n_(qp.c.size()), diag_(qp.Q.diagonal())
    {
    }

    QpSolution run()
    {
        QpSolution sol;
        sol.x = start_point(sol);
        sol.objective = qp_.objective(sol.x);
        double penalty = cfg_.al_penalty_init;

        for (sol.outer_iters = 0; sol.outer_iters < cfg_.al_outer_max; ++sol.outer_iters) {
            const auto g = qp_.gradient(sol.x);
            sol.kkt_residual = kkt_violation(qp_, sol.x, cfg_.kkt_tol);
            if (trace_)
                trace_->rows.push_back({"qp", static_cast<std::size_t>(sol.outer_iters), sol.kkt_residual, sol.objective});
            if (sol.kkt_residual <= cfg_.kkt_tol)
                return sol;

            std::vector<double> candidate;
            double candidate_obj = 0.0;
            if (!(newton_step(sol, g, penalty, candidate, candidate_obj))) {
                penalty *= cfg_.al_penalty_growth;
                gradient_step(sol.x, g, sol.objective, candidate, candidate_obj);
            }
            if (candidate_obj <= sol.objective + slack(sol.objective)) {
                sol.x = std::move(candidate);
                sol.objective = candidate_obj;
            }
            sol.objective_history.push_back(sol.objective);
        }

        sol.kkt_residual = kkt_violation(qp_, sol.x, cfg_.kkt_tol);
        if (sol.kkt_residual <= cfg_.kkt_tol)
            return sol;
        std::ostringstream msg;
        msg << "non-negative QP did not reach the KKT tolerance in " << cfg_.al_outer_max
            << " outer iterations (residual " << sol.kkt_residual << ")";
        throw QpError(msg.str(), sol);
    }

private:
    // Round-off allowance when comparing objectives.
    static double slack(double objective) { return 1e-13 * (1.0 + std::abs(objective)); }

    double inner_target(std::span<const double> rhs) const
    {
        return std::min(cfg_.cg_tol * norm2(rhs), 0.25 * cfg_.kkt_tol);
    }

    // Minimizer of the free block with the given mask, warm-started from `x`.
    std::vector<double> solve_block(const std::vector<std::uint8_t>& free_mask, std::span<const double> warm,
                                    QpSolution& sol)
    {
        std::vector<double> rhs(n_);
        for (std::size_t i = 0; i < n_; ++i)
            rhs[i] = free_mask[i] ? -qp_.c[i] : 0.0;
        std::vector<double> z(warm.begin(), warm.end());
        const auto res = pcg(qp_.Q, rhs, z, free_mask, inner_target(rhs), cfg_, nullptr);
        sol.inner_iters += res.iterations;
        return z;
    }

    std::vector<double> start_point(QpSolution& sol)
    {
        // Better of x = 0 and the projected unconstrained minimizer.
        std::vector<std::uint8_t> all(n_, 1);
        auto z = solve_block(all, std::vector<double>(n_, 0.0), sol);
        for (auto& v : z)
            v = std::max(v, 0.0);
        if (qp_.objective(z) <= 0.0)
            return z;
        return std::vector<double>(n_, 0.0);
    }

    std::vector<double> projected(std::span<const double> x, std::span<const double> dir, double alpha) const
    {
        std::vector<double> out(n_);
        for (std::size_t i = 0; i < n_; ++i)
            out[i] = std::max(0.0, x[i] + alpha * dir[i]);
        return out;
    }

    bool newton_step(QpSolution& sol, const std::vector<double>& g, double penalty, std::vector<double>& out,
                     double& out_obj)
    {
        // Multiplier estimate g_i predicts x_i stays at the bound when it exceeds penalty * Q_ii * x_i.
        std::vector<std::uint8_t> free_mask(n_);
        for (std::size_t i = 0; i < n_; ++i)
            free_mask[i] = (g[i] > 0.0 && penalty * diag_[i] * sol.x[i] <= g[i]) ? 0 : 1;

        const auto z = solve_block(free_mask, sol.x, sol);
        std::vector<double> dir(n_);
        for (std::size_t i = 0; i < n_; ++i)
            dir[i] = z[i] - sol.x[i];

        double alpha = 1.0;
        for (int k = 0; k < 12; ++k, alpha *= 0.5) {
            auto trial = projected(sol.x, dir, alpha);
            const double obj = qp_.objective(trial);
            if (obj <= sol.objective + slack(sol.objective)) {
                out = std::move(trial);
                out_obj = obj;
                return true;
            }
        }
        return false;
    }

    void gradient_step(std::span<const double> x, std::span<const double> g, double obj, std::vector<double>& out,
                       double& out_obj) const
    {
        std::vector<double> dir(n_);
        for (std::size_t i = 0; i < n_; ++i)
            dir[i] = (x[i] <= 0.0 && g[i] > 0.0) ? 0.0 : -g[i];
        const double dd = dot(dir, dir);
        const double dqd = qp_.Q.quadratic_form(dir);
        double alpha = dqd > 0.0 ? dd / dqd : 1.0;
        for (int k = 0; k < 60; ++k, alpha *= 0.5) {
            auto trial = projected(x, dir, alpha);
            const double trial_obj = qp_.objective(trial);
            if (trial_obj <= obj) {
                out = std::move(trial);
                out_obj = trial_obj;
                return;
            }
        }
        out.assign(x.begin(), x.end());
        out_obj = obj;
    }

    const SparseQuadratic& qp_;
    const SolverConfig& cfg_;
    SolverTrace* trace_;
    std::size_t n_;
    std::vector<double> diag_;
};

} // namespace

QpSolution solve_nnqp(const SparseQuadratic& qp, const SolverConfig& cfg, SolverTrace* trace)
{
    cfg.validate();
    if (qp.c.size() != qp.Q.dim())
        throw Error("QP linear term length does not match matrix dimension");
    return NnqpSolver(qp, cfg, trace).run();
}

} // namespace wdc
