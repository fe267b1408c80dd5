#include "wdc/graph.hpp"

#include <algorithm>
#include <cmath>

namespace wdc {

SparseSymmetric SparseSymmetric::from_triplets(std::size_t n, std::vector<Triplet> triplets)
{
    for (const auto& t : triplets)
        if (t.row >= n || t.col >= n)
            throw Error("sparse triplet index out of range");
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });

    SparseSymmetric m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (std::size_t k = 0; k < triplets.size();) {
        const std::size_t row = triplets[k].row;
        const std::size_t col = triplets[k].col;
        double sum = 0.0;
        for (; k < triplets.size() && triplets[k].row == row && triplets[k].col == col; ++k)
            sum += triplets[k].value;
        m.cols_.push_back(col);
        m.values_.push_back(sum);
        ++m.row_ptr_[row + 1];
    }
    for (std::size_t i = 0; i < n; ++i)
        m.row_ptr_[i + 1] += m.row_ptr_[i];

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = m.row_ptr_[i]; k < m.row_ptr_[i + 1]; ++k)
            if (m.cols_[k] != i && m.entry(m.cols_[k], i) != m.values_[k])
                throw Error("sparse matrix is not symmetric");
    return m;
}

SparseSymmetric SparseSymmetric::diagonal_matrix(std::span<const double> diag)
{
    SparseSymmetric m;
    m.n_ = diag.size();
    m.row_ptr_.resize(diag.size() + 1);
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m.cols_.push_back(i);
        m.values_.push_back(diag[i]);
        m.row_ptr_[i + 1] = i + 1;
    }
    return m;
}

void SparseSymmetric::multiply(std::span<const double> x, std::span<double> y) const
{
    if (x.size() != n_ || y.size() != n_)
        throw Error("sparse product dimension mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            acc += values_[k] * x[cols_[k]];
        y[i] = acc;
    }
}

std::vector<double> SparseSymmetric::multiply(std::span<const double> x) const
{
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
}

double SparseSymmetric::quadratic_form(std::span<const double> x) const
{
    const auto y = multiply(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        acc += x[i] * y[i];
    return acc;
}

double SparseSymmetric::entry(std::size_t i, std::size_t j) const
{
    const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(begin, end, j);
    return (it != end && *it == j) ? values_[static_cast<std::size_t>(it - cols_.begin())] : 0.0;
}

std::vector<double> SparseSymmetric::diagonal() const
{
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i)
        d[i] = entry(i, i);
    return d;
}

SparseSymmetric SparseSymmetric::scaled_plus_diagonal(double scale, std::span<const double> d) const
{
    if (d.size() != n_)
        throw Error("diagonal length does not match matrix dimension");
    SparseSymmetric out;
    out.n_ = n_;
    out.row_ptr_.assign(1, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        bool placed = false;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const std::size_t j = cols_[k];
            if (!placed && j > i) {
                out.cols_.push_back(i);
                out.values_.push_back(d[i]);
                placed = true;
            }
            double v = scale * values_[k];
            if (j == i) {
                v += d[i];
                placed = true;
            }
            out.cols_.push_back(j);
            out.values_.push_back(v);
        }
        if (!placed) {
            out.cols_.push_back(i);
            out.values_.push_back(d[i]);
        }
        out.row_ptr_.push_back(out.cols_.size());
    }
    return out;
}

SparseSymmetric build_laplacian(const ImageRgb& img, double color_floor)
{
    if (img.empty())
        throw Error("Laplacian requires an image of at least 1x1");
    if (!(color_floor > 0.0))
        throw Error("color_floor must be > 0");

    const int w = img.width();
    const int h = img.height();
    // Weights are snapped to a 2^-36 grid: every partial row sum is then exact and L*1 == 0
    // holds bit-for-bit for weights below 2^14 (color_floor >= 1e-4).
    const double grid = std::ldexp(1.0, -36);
    auto edge_weight = [&](std::size_t a, std::size_t b) {
        const Rgb p = img.pixel(a), q = img.pixel(b);
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c)
            d2 += (p[c] - q[c]) * (p[c] - q[c]);
        return std::round(1.0 / std::max(d2, color_floor) / grid) * grid;
    };

    std::vector<Triplet> triplets;
    triplets.reserve(img.pixel_count() * 5);
    std::vector<double> degree(img.pixel_count(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = img.index(x, y);
            if (x + 1 < w) {
                const std::size_t j = i + 1;
                const double a = edge_weight(i, j);
                triplets.push_back({i, j, -a});
                triplets.push_back({j, i, -a});
                degree[i] += a;
                degree[j] += a;
            }
            if (y + 1 < h) {
                const std::size_t j = i + static_cast<std::size_t>(w);
                const double a = edge_weight(i, j);
                triplets.push_back({i, j, -a});
                triplets.push_back({j, i, -a});
                degree[i] += a;
                degree[j] += a;
            }
        }
    }
    for (std::size_t i = 0; i < degree.size(); ++i)
        triplets.push_back({i, i, degree[i]});
    return SparseSymmetric::from_triplets(img.pixel_count(), std::move(triplets));
}

namespace {

void check_system_inputs(const ScalarMap& weights, const ScalarMap& t_init, const SparseSymmetric& laplacian,
                         double lambda)
{
    if (!weights.same_shape(t_init) || laplacian.dim() != weights.size())
        throw Error("system assembly dimension mismatch");
    if (!(lambda >= 0.0))
        throw Error("lambda must be >= 0");
}

} // namespace

LinearSystem assemble_wdc_system(const ScalarMap& weights, const ScalarMap& t_init, const SparseSymmetric& laplacian,
                                 double lambda)
{
    check_system_inputs(weights, t_init, laplacian, lambda);
    LinearSystem sys{laplacian.scaled_plus_diagonal(lambda, weights.values()), std::vector<double>(weights.size())};
    for (std::size_t i = 0; i < weights.size(); ++i)
        sys.rhs[i] = weights[i] * t_init[i];
    return sys;
}

double SparseQuadratic::objective(std::span<const double> x) const
{
    double lin = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        lin += c[i] * x[i];
    return 0.5 * Q.quadratic_form(x) + lin;
}

std::vector<double> SparseQuadratic::gradient(std::span<const double> x) const
{
    auto g = Q.multiply(x);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += c[i];
    return g;
}

SparseQuadratic assemble_cwdc_qp(const ScalarMap& weights, const ScalarMap& t_init, const ScalarMap& b,
                                 const SparseSymmetric& laplacian, double lambda)
{
    check_system_inputs(weights, t_init, laplacian, lambda);
    if (!b.same_shape(weights))
        throw Error("system assembly dimension mismatch");

    std::vector<double> twice_w(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        twice_w[i] = 2.0 * weights[i];

    SparseQuadratic qp{laplacian.scaled_plus_diagonal(2.0 * lambda, twice_w), laplacian.multiply(b.values())};
    for (std::size_t i = 0; i < qp.c.size(); ++i)
        qp.c[i] = 2.0 * weights[i] * (b[i] - t_init[i]) + 2.0 * lambda * qp.c[i];
    return qp;
}

double refinement_energy(std::span<const double> t, const ScalarMap& weights, const ScalarMap& t_init,
                         const SparseSymmetric& laplacian, double lambda)
{
    double data = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        data += weights[i] * (t[i] - t_init[i]) * (t[i] - t_init[i]);
    return data + lambda * laplacian.quadratic_form(t);
}

} // namespace wdc
