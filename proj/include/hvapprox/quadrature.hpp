#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hvapprox/hilbert.hpp"
#include "hvapprox/polybasis.hpp"
#include "hvapprox/random.hpp"

namespace hvapprox::quadrature {

inline constexpr std::size_t kDefaultPointCap = 2'000'000;
inline constexpr int kMaxLevel = 20;

class point_cap_error : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Number of Clenshaw-Curtis nodes at a level: 1, 3, 5, 9, 17, ...
inline int cc_size(int level)
{
    if (level < 0 || level > kMaxLevel) throw std::invalid_argument("cc_size: level out of range");
    return level == 0 ? 1 : (1 << level) + 1;
}

/// k-th extremum cos(pi k / n), written so that the nodes are exactly symmetric and the middle one is 0.
inline double cc_node(int k, int n)
{
    if (2 * k == n) return 0.0;
    if (2 * k > n) return -std::cos(std::numbers::pi * (n - k) / n);
    return std::cos(std::numbers::pi * k / n);
}

/// Nested CC nodes of a level in decreasing order: {0}, or cos(pi k / 2^level), k = 0..2^level.
inline std::vector<double> cc_points_1d(int level)
{
    if (level == 0) return {0.0};
    const int n = cc_size(level) - 1;
    std::vector<double> x(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) x[k] = cc_node(k, n);
    return x;
}

/// CC weights of a level for the uniform probability measure on [-1,1].
inline std::vector<double> cc_weights_1d(int level)
{
    if (level == 0) return {1.0};
    const int n = cc_size(level) - 1;
    std::vector<double> w(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        double s = 1.0;
        for (int j = 1; j <= n / 2; ++j) {
            const double b = (2 * j == n) ? 1.0 : 2.0;
            s -= b / (4.0 * j * j - 1.0) * std::cos(2.0 * std::numbers::pi * j * k / n);
        }
        const double c = (k == 0 || k == n) ? 1.0 : 2.0;
        w[k] = 0.5 * c * s / n;
    }
    return w;
}

/// Highest polynomial degree integrated exactly by the 1-D rule of a level.
inline int cc_exactness_degree(int level) { return level == 0 ? 1 : cc_size(level); }

/// Neumaier-compensated sum; Smolyak weights in high dimension are large and of
/// alternating sign, so plain summation loses several digits.
class CompensatedSum {
public:
    void add(double v)
    {
        const double t = sum_ + v;
        comp_ += (std::abs(sum_) >= std::abs(v)) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

inline double compensated_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    CompensatedSum s;
    for (Eigen::Index i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
    return s.value();
}

struct SparseGrid {
    int dim = 0;
    int level = 0;
    PointSet points;          // one point per row
    Eigen::VectorXd weights;  // for the uniform probability measure; sum to 1

    Eigen::Index size() const { return points.rows(); }

    double weight_sum() const { return compensated_dot(weights, Eigen::VectorXd::Ones(weights.size())); }
};

namespace detail {

/// Every node appearing up to `max_level`, with the level at which it first
/// appears and the surplus weights w_i(x) - w_{i-1}(x) for i = 0..max_level.
struct NodeTable {
    std::vector<double> x;
    std::vector<int> first_level;
    std::vector<std::vector<double>> surplus;
    std::vector<std::vector<int>> new_at_level;  // node ids first appearing at each level
};

inline NodeTable build_node_table(int max_level)
{
    NodeTable t;
    const int top = std::max(max_level, 1);
    const int n_top = 1 << top;
    // Node ids are positions k in the finest rule, k = 0..n_top.
    std::vector<int> id_of(static_cast<std::size_t>(n_top) + 1, -1);
    auto add = [&](int k, int lev) {
        id_of[k] = static_cast<int>(t.x.size());
        t.x.push_back(cc_node(k, n_top));
        t.first_level.push_back(lev);
        t.surplus.emplace_back(static_cast<std::size_t>(max_level) + 1, 0.0);
        t.new_at_level[lev].push_back(id_of[k]);
    };
    t.new_at_level.resize(static_cast<std::size_t>(max_level) + 1);
    add(n_top / 2, 0);
    for (int lev = 1; lev <= max_level; ++lev) {
        const int stride = n_top >> lev;
        for (int k = 0; k <= n_top; k += stride)
            if (id_of[k] < 0) add(k, lev);
    }
    std::vector<double> prev(t.x.size(), 0.0);
    for (int lev = 0; lev <= max_level; ++lev) {
        std::vector<double> cur(t.x.size(), 0.0);
        const auto w = cc_weights_1d(lev);
        if (lev == 0) {
            cur[id_of[n_top / 2]] = w[0];
        } else {
            const int stride = n_top >> lev;
            for (int k = 0, j = 0; k <= n_top; k += stride, ++j) cur[id_of[k]] = w[j];
        }
        for (std::size_t i = 0; i < t.x.size(); ++i) t.surplus[i][lev] = cur[i] - prev[i];
        prev = std::move(cur);
    }
    return t;
}

/// Truncated product of polynomials in t with coefficients indexed by degree.
inline void multiply_truncated(std::vector<double>& acc, const std::vector<double>& p)
{
    const std::size_t n = acc.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (acc[i] == 0.0) continue;
        for (std::size_t j = 0; i + j < n; ++j) out[i + j] += acc[i] * p[j];
    }
    acc = std::move(out);
}

} // namespace detail

/// Number of points of smolyak_grid(d, level), without building it.
inline double smolyak_point_count(int d, int level)
{
    if (d < 1 || level < 0) throw std::invalid_argument("smolyak_point_count: need d >= 1, level >= 0");
    std::vector<double> per(static_cast<std::size_t>(level) + 1, 0.0);
    per[0] = 1.0;
    for (int l = 1; l <= level; ++l) per[l] = (l == 1) ? 2.0 : std::ldexp(1.0, l - 1);
    std::vector<double> acc(static_cast<std::size_t>(level) + 1, 0.0);
    acc[0] = 1.0;
    for (int k = 0; k < d; ++k) detail::multiply_truncated(acc, per);
    double total = 0.0;
    for (double c : acc) total += c;
    return total;
}

/**
 * Smolyak combination of nested CC rules: points are those whose coordinate
 * levels sum to at most `level`; each weight is the sum over admissible level
 * multi-indices of the product of 1-D surplus weights. Points are distinct by
 * construction, so no merging is needed.
 */
inline SparseGrid smolyak_grid(int d, int level, std::size_t cap = kDefaultPointCap)
{
    if (d < 1) throw std::invalid_argument("smolyak_grid: d must be >= 1");
    if (level < 0 || level > kMaxLevel) throw std::invalid_argument("smolyak_grid: level out of range");
    const double count = smolyak_point_count(d, level);
    if (count > static_cast<double>(cap))
        throw point_cap_error("smolyak_grid: " + std::to_string(static_cast<long long>(count)) + " points exceed cap " +
                              std::to_string(cap));

    const auto table = detail::build_node_table(level);
    const auto npts = static_cast<Eigen::Index>(count);
    SparseGrid grid{d, level, PointSet(npts, d), Eigen::VectorXd(npts)};
    const int origin = table.new_at_level[0][0];

    // Coordinates left at the origin all contribute the same polynomial.
    std::vector<std::vector<double>> origin_powers(static_cast<std::size_t>(d) + 1);
    origin_powers[0].assign(static_cast<std::size_t>(level) + 1, 0.0);
    origin_powers[0][0] = 1.0;
    for (int k = 1; k <= d; ++k) {
        origin_powers[k] = origin_powers[k - 1];
        detail::multiply_truncated(origin_powers[k], table.surplus[origin]);
    }

    std::vector<int> node(static_cast<std::size_t>(d), origin);
    Eigen::Index row = 0;
    auto emit = [&] {
        std::vector<double> acc(static_cast<std::size_t>(level) + 1, 0.0);
        acc[0] = 1.0;
        int at_origin = 0;
        for (int k = 0; k < d; ++k) {
            grid.points(row, k) = table.x[node[k]];
            if (node[k] == origin)
                ++at_origin;
            else
                detail::multiply_truncated(acc, table.surplus[node[k]]);
        }
        detail::multiply_truncated(acc, origin_powers[at_origin]);
        double w = 0.0;
        for (double c : acc) w += c;
        grid.weights[row++] = w;
    };
    std::function<void(int, int)> rec = [&](int k, int budget) {
        if (k == d) {
            emit();
            return;
        }
        for (int lev = 0; lev <= budget; ++lev)
            for (int id : table.new_at_level[lev]) {
                node[k] = id;
                rec(k + 1, budget - lev);
            }
        node[k] = origin;
    };
    rec(0, level);
    if (row != npts) throw std::logic_error("smolyak_grid: point count mismatch");
    return grid;
}

/// Smallest level whose grid has at least `min_points` points.
inline int smolyak_level_for(int d, double min_points)
{
    for (int lev = 0; lev <= kMaxLevel; ++lev)
        if (smolyak_point_count(d, lev) >= min_points) return lev;
    throw std::invalid_argument("smolyak_level_for: no level reaches the requested size");
}

/// Equal-weight Monte Carlo rule from the dataset generator's seeded stream.
inline SparseGrid monte_carlo_grid(int d, Eigen::Index m, std::uint64_t seed)
{
    if (d < 1 || m < 1) throw std::invalid_argument("monte_carlo_grid: need d >= 1 and m >= 1");
    return SparseGrid{d, -1, uniform_points(m, d, seed), Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m))};
}

/// Weighted sum of f over the grid.
inline double integrate(const SparseGrid& grid, const std::function<double(std::span<const double>)>& f)
{
    CompensatedSum s;
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        s.add(grid.weights[i] * f(std::span<const double>(grid.points.row(i).data(), grid.points.cols())));
    return s.value();
}

struct BochnerError {
    double absolute = 0.0;
    double reference_norm = 0.0;
    bool clamped = false;  // a negative weighted sum was clamped to zero

    double relative() const { return reference_norm > 0.0 ? absolute / reference_norm : absolute; }
};

/**
 * sqrt(sum_i w_i ||u(y_i) - v(y_i)||_V^2) with rows of `reference` and
 * `approx` holding V-coordinates at the grid points. Negative sums, which
 * Smolyak weights allow for non-polynomial integrands, are clamped to 0.
 */
inline BochnerError bochner_error(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& approx,
                                  const SparseGrid& grid, const DiscreteHilbertSpace& space)
{
    if (reference.rows() != grid.size() || approx.rows() != grid.size() || reference.cols() != approx.cols())
        throw std::invalid_argument("bochner_error: shape mismatch");
    if (reference.cols() != space.dim()) throw std::invalid_argument("bochner_error: width differs from space dimension");
    const Eigen::VectorXd diff = space.row_norms(reference - approx).array().square().matrix();
    const Eigen::VectorXd ref = space.row_norms(reference).array().square().matrix();
    BochnerError e;
    const double se = compensated_dot(grid.weights, diff), sr = compensated_dot(grid.weights, ref);
    e.clamped = se < 0.0 || sr < 0.0;
    e.absolute = std::sqrt(std::max(se, 0.0));
    e.reference_norm = std::sqrt(std::max(sr, 0.0));
    return e;
}

} // namespace hvapprox::quadrature
