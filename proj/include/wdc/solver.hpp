#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wdc/graph.hpp"

namespace wdc {

enum class PreconditionerKind {
    Jacobi,
    IncompleteCholesky, ///< zero-fill incomplete Cholesky; falls back to Jacobi on breakdown
};

struct SolverConfig {
    PreconditionerKind preconditioner = PreconditionerKind::IncompleteCholesky;
    double ic_relaxation = 1.0;     ///< share of dropped fill moved to the diagonal (1 = modified IC)
    double cg_tol = 1e-6;           ///< relative residual target ||Mt - r|| <= cg_tol ||r||
    std::size_t cg_max_iter = 0;    ///< 0 selects max(500, 10 sqrt(n))
    double al_penalty_init = 10.0;  ///< activity penalty of the bound-constrained solver
    double al_penalty_growth = 10.0;
    int al_outer_max = 30;
    double kkt_tol = 1e-5;

    std::size_t max_iterations_for(std::size_t n) const;
    void validate() const;
};

/// One row of the optional convergence trace.
struct TraceRow {
    std::string phase; ///< "cg" or "qp"
    std::size_t iteration = 0;
    double residual = 0.0;
    double objective = 0.0;
};

struct SolverTrace {
    std::vector<TraceRow> rows;

    void write_csv(const std::filesystem::path& path) const;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

struct SpdStats {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients. Throws SolverError when cg_max_iter is exhausted.
std::vector<double> solve_spd(const SparseSymmetric& M, std::span<const double> rhs, const SolverConfig& cfg = {},
                              SpdStats* stats = nullptr, SolverTrace* trace = nullptr);

struct QpSolution {
    std::vector<double> x;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int outer_iters = 0;
    std::size_t inner_iters = 0;
    std::vector<double> objective_history; ///< objective after every outer iteration
};

class QpError : public SolverError {
public:
    QpError(const std::string& what, QpSolution best)
        : SolverError(what, best.kkt_residual), best_(std::move(best)) {}
    const QpSolution& best() const { return best_; }

private:
    QpSolution best_;
};

/// KKT violation of x for min 1/2 x'Qx + c'x s.t. x >= 0, measured against tol:
/// bound violation, negative gradient at the bound, nonzero gradient off the bound,
/// and complementarity x_i |g_i| scaled by 1 + ||c||_inf. Zero means exact optimality.
double kkt_violation(const SparseQuadratic& qp, std::span<const double> x, double tol);

/// min 1/2 x'Qx + c'x s.t. x >= 0 for positive definite Q.
/// Outer iterations predict the active set from multiplier estimates g = Qx + c against a
/// diagonally scaled penalty, solve the free block with the same PCG kernel, and project back
/// onto x >= 0 along a monotone path. Throws QpError carrying the best iterate on failure.
QpSolution solve_nnqp(const SparseQuadratic& qp, const SolverConfig& cfg = {}, SolverTrace* trace = nullptr);

} // namespace wdc
