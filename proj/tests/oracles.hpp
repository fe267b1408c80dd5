#pragma once
// Independent reference implementations used by the unit tests and the acceptance binary.
// None of them share code with the library paths they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "wdc/graph.hpp"
#include "wdc/image.hpp"

namespace oracle {

// Patch max/min by scanning every offset of the disk.
inline wdc::ScalarMap morph(const wdc::ScalarMap& in, int r, bool take_max)
{
    wdc::ScalarMap out(in.width(), in.height());
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            double v = take_max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (dx * dx + dy * dy <= r * r && in.contains(x + dx, y + dy))
                        v = take_max ? std::max(v, in.at(x + dx, y + dy)) : std::min(v, in.at(x + dx, y + dy));
            out.at(x, y) = v;
        }
    }
    return out;
}

inline Eigen::MatrixXd dense(const wdc::SparseSymmetric& m)
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m.dim(), m.dim());
    const auto rp = m.row_ptr();
    const auto ci = m.col_index();
    const auto v = m.values();
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
            d(i, ci[k]) += v[k];
    return d;
}

inline std::vector<double> dense_solve(const wdc::SparseSymmetric& m, const std::vector<double>& rhs)
{
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size());
    Eigen::VectorXd x = dense(m).ldlt().solve(r);
    return {x.data(), x.data() + x.size()};
}

// Exhaustive active-set enumeration for min 1/2 x'Qx + c'x, x >= 0 (n <= ~20).
// Every subset F of free variables is tried: solve Q_FF x_F = -c_F, keep the feasible
// candidate with the smallest objective.
struct EnumResult {
    std::vector<double> x;
    double objective = std::numeric_limits<double>::infinity();
};

inline EnumResult enumerate_nnqp(const wdc::SparseQuadratic& qp)
{
    const Eigen::MatrixXd Q = dense(qp.Q);
    const int n = static_cast<int>(qp.c.size());
    EnumResult best;
    std::vector<int> idx;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        idx.clear();
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i))
                idx.push_back(i);
        Eigen::VectorXd xf;
        if (!idx.empty()) {
            const int k = static_cast<int>(idx.size());
            Eigen::MatrixXd qf(k, k);
            Eigen::VectorXd cf(k);
            for (int a = 0; a < k; ++a) {
                cf(a) = qp.c[idx[a]];
                for (int b = 0; b < k; ++b)
                    qf(a, b) = Q(idx[a], idx[b]);
            }
            xf = qf.llt().solve(-cf);
            if ((xf.array() < 0.0).any())
                continue;
        }
        std::vector<double> x(n, 0.0);
        for (std::size_t a = 0; a < idx.size(); ++a)
            x[idx[a]] = xf(static_cast<Eigen::Index>(a));
        Eigen::VectorXd xv = Eigen::Map<Eigen::VectorXd>(x.data(), n);
        Eigen::VectorXd cv = Eigen::Map<const Eigen::VectorXd>(qp.c.data(), n);
        const double obj = 0.5 * xv.dot(Q * xv) + cv.dot(xv);
        if (obj < best.objective) {
            best.objective = obj;
            best.x = x;
        }
    }
    return best;
}

// Random Laplacian-plus-diagonal quadratic on a small grid, in the CWDC shape
// (Q = 2 diag(w) + 2 lambda L). Offsets in c are wide enough to activate some bounds.
inline wdc::SparseQuadratic random_grid_qp(std::mt19937& rng, int w, int h)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<wdc::Triplet> trip;
    std::vector<double> diag(n, 0.0);
    auto edge = [&](std::size_t i, std::size_t j) {
        const double a = 0.05 + 2.0 * u(rng);
        trip.push_back({i, j, -a});
        trip.push_back({j, i, -a});
        diag[i] += a;
        diag[j] += a;
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (x + 1 < w)
                edge(i, i + 1);
            if (y + 1 < h)
                edge(i, i + w);
        }
    for (std::size_t i = 0; i < n; ++i)
        trip.push_back({i, i, diag[i] + 0.1 + 3.0 * u(rng)});
    wdc::SparseQuadratic qp;
    qp.Q = wdc::SparseSymmetric::from_triplets(n, std::move(trip));
    qp.c.resize(n);
    for (auto& v : qp.c)
        v = 4.0 * u(rng) - 2.0;
    return qp;
}

// Random SPD system with Laplacian-plus-diagonal structure on an arbitrary graph.
inline wdc::SparseSymmetric random_spd(std::mt19937& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<wdc::Triplet> trip;
    std::vector<double> diag(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (u(rng) < 0.3) {
                const double a = std::exp(6.0 * u(rng) - 3.0);
                trip.push_back({i, j, -a});
                trip.push_back({j, i, -a});
                diag[i] += a;
                diag[j] += a;
            }
    for (std::size_t i = 0; i < n; ++i)
        trip.push_back({i, i, diag[i] + 0.01 + u(rng)});
    return wdc::SparseSymmetric::from_triplets(n, std::move(trip));
}

// Explicit pairwise sum over 4-neighbors, each unordered pair once.
inline double pairwise_smoothness(const wdc::ImageRgb& img, const std::vector<double>& t, double floor)
{
    double s = 0.0;
    auto add = [&](int x0, int y0, int x1, int y1) {
        const auto p = img.pixel(x0, y0);
        const auto q = img.pixel(x1, y1);
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c)
            d2 += (p[c] - q[c]) * (p[c] - q[c]);
        const double a = 1.0 / std::max(d2, floor);
        const double dt = t[img.index(x0, y0)] - t[img.index(x1, y1)];
        s += a * dt * dt;
    };
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (x + 1 < img.width())
                add(x, y, x + 1, y);
            if (y + 1 < img.height())
                add(x, y, x, y + 1);
        }
    return s;
}

inline wdc::ImageRgb random_image(std::mt19937& rng, int w, int h)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(w) * h * 3);
    for (auto& s : v)
        s = u(rng);
    return wdc::ImageRgb(w, h, std::move(v));
}

inline wdc::ScalarMap random_map(std::mt19937& rng, int w, int h, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (auto& s : v)
        s = u(rng);
    return wdc::ScalarMap(w, h, std::move(v));
}

} // namespace oracle
