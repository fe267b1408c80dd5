#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wdc/image.hpp"

namespace wdc {

inline constexpr double kDefaultColorFloor = 1e-4;
inline constexpr double kDefaultLambda = 0.02;

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Symmetric sparse matrix in CSR form; both triangles are stored so a product is a single sweep.
class SparseSymmetric {
public:
    SparseSymmetric() = default;

    /// Duplicates are summed. Every (i,j) with i != j must be accompanied by (j,i) of equal value;
    /// an asymmetric input throws.
    static SparseSymmetric from_triplets(std::size_t n, std::vector<Triplet> triplets);
    static SparseSymmetric diagonal_matrix(std::span<const double> diag);

    std::size_t dim() const { return n_; }
    std::size_t nonzeros() const { return values_.size(); }

    /// y = M x
    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;
    double quadratic_form(std::span<const double> x) const;

    double entry(std::size_t i, std::size_t j) const;
    std::vector<double> diagonal() const;

    /// Returns scale * M + diag(d).
    SparseSymmetric scaled_plus_diagonal(double scale, std::span<const double> d) const;

    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::size_t> col_index() const { return cols_; }
    std::span<const double> values() const { return values_; }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_;
    std::vector<double> values_;
};

/// Color-weighted 4-connected graph Laplacian. Edge weight 1/max(|I(x)-I(y)|^2, color_floor);
/// each unordered neighbor pair contributes once to t'Lt.
SparseSymmetric build_laplacian(const ImageRgb& img, double color_floor = kDefaultColorFloor);

struct LinearSystem {
    SparseSymmetric matrix;
    std::vector<double> rhs;
};

/// (diag(W) + lambda L) t = W t~
LinearSystem assemble_wdc_system(const ScalarMap& weights, const ScalarMap& t_init, const SparseSymmetric& laplacian,
                                 double lambda = kDefaultLambda);

/// E(x) = 1/2 x'Qx + c'x over the gap x = t - b.
struct SparseQuadratic {
    SparseSymmetric Q;
    std::vector<double> c;

    double objective(std::span<const double> x) const;
    std::vector<double> gradient(std::span<const double> x) const;
};

/// Q = 2W + 2 lambda L, c = 2W(b - t~) + 2 lambda L b. Equals the refinement energy of t = x + b
/// up to an additive constant.
SparseQuadratic assemble_cwdc_qp(const ScalarMap& weights, const ScalarMap& t_init, const ScalarMap& b,
                                 const SparseSymmetric& laplacian, double lambda = kDefaultLambda);

/// sum_x W(x)(t(x) - t~(x))^2 + lambda t'Lt
double refinement_energy(std::span<const double> t, const ScalarMap& weights, const ScalarMap& t_init,
                         const SparseSymmetric& laplacian, double lambda);

} // namespace wdc
