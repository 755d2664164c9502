#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hvapprox/io.hpp"
#include "hvapprox/multiindex.hpp"

namespace hvapprox {

/// Sample points, one per row, each in [-1,1]^d.
using PointSet = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kDomainTolerance = 1e-12;

class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Clamps y to [-1,1] when it lies within kDomainTolerance of the interval,
/// and throws otherwise.
inline double clamp_to_domain(double y)
{
    if (!(std::abs(y) <= 1.0 + kDomainTolerance))
        throw domain_error("parameter value " + std::to_string(y) + " outside [-1,1]");
    return std::clamp(y, -1.0, 1.0);
}

/**
 * Orthonormal Legendre values Psi_0(y), ..., Psi_max_degree(y) with respect
 * to the uniform probability measure dy/2 on [-1,1].
 *
 * Uses (k+1) P_{k+1} = (2k+1) y P_k - k P_{k-1} and Psi_k = sqrt(2k+1) P_k.
 */
inline void legendre_table(int max_degree, double y, std::span<double> out)
{
    y = clamp_to_domain(y);
    double pkm1 = 1.0, pk = y;
    out[0] = 1.0;
    if (max_degree >= 1) out[1] = std::sqrt(3.0) * y;
    for (int k = 1; k < max_degree; ++k) {
        const double pkp1 = ((2.0 * k + 1.0) * y * pk - k * pkm1) / (k + 1.0);
        pkm1 = pk;
        pk = pkp1;
        out[k + 1] = std::sqrt(2.0 * (k + 1) + 1.0) * pk;
    }
}

/// Psi_nu(y), the degree-nu orthonormal Legendre polynomial.
inline double legendre_1d(int nu, double y)
{
    if (nu < 0) throw std::invalid_argument("legendre_1d: negative degree");
    std::vector<double> tab(static_cast<std::size_t>(nu) + 1);
    legendre_table(nu, y, tab);
    return tab.back();
}

/// Tensor-product value Psi_nu(y) = prod_k Psi_{nu_k}(y_k).
inline double legendre_tensor(const MultiIndex& nu, std::span<const double> y)
{
    if (nu.size() != y.size()) throw std::invalid_argument("legendre_tensor: dimension mismatch");
    double v = 1.0;
    for (std::size_t k = 0; k < nu.size(); ++k) {
        if (nu[k] == 0) {
            clamp_to_domain(y[k]);
            continue;
        }
        v *= legendre_1d(nu[k], y[k]);
    }
    return v;
}

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // for the uniform probability measure: sum to 1
};

/// n-point Gauss-Legendre rule, exact to degree 2n - 1: Golub-Welsch nodes
/// polished by Newton steps on P_n, weights 1 / ((1 - x^2) P_n'(x)^2).
inline GaussRule gauss_legendre(int n)
{
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(jac, Eigen::EigenvaluesOnly).eigenvalues();
    GaussRule r;
    for (int i = 0; i < n; ++i) {
        double x = ev[i], dp = 1.0;
        for (int it = 0; it < 3; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 1; k < n; ++k) {
                const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            x -= p1 / dp;
        }
        r.nodes.push_back(x);
        r.weights.push_back(1.0 / ((1.0 - x * x) * dp * dp));
    }
    return r;
}

struct MeasurementMatrix {
    Eigen::MatrixXd values;   // m x N, entries Psi_{nu_j}(y_i) / sqrt(m)
    MultiIndexSet index_set;  // column order

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// Rows of Psi_{nu_j}(y_i) for j over the set, without normalization.
inline Eigen::MatrixXd evaluate_basis(const MultiIndexSet& set, const PointSet& points)
{
    if (points.cols() != set.dim()) throw std::invalid_argument("evaluate_basis: point dimension mismatch");
    const Eigen::Index m = points.rows();
    const auto n = static_cast<Eigen::Index>(set.size());
    const int d = set.dim();

    std::vector<int> max_deg(static_cast<std::size_t>(d), 0);
    for (const auto& nu : set)
        for (int k = 0; k < d; ++k) max_deg[k] = std::max(max_deg[k], nu[k]);

    Eigen::MatrixXd out(m, n);
    std::vector<std::vector<double>> tables(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) tables[k].resize(static_cast<std::size_t>(max_deg[k]) + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (int k = 0; k < d; ++k) legendre_table(max_deg[k], points(i, k), tables[k]);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& nu = set[static_cast<std::size_t>(j)];
            double v = 1.0;
            for (int k = 0; k < d; ++k)
                if (nu[k]) v *= tables[k][nu[k]];
            out(i, j) = v;
        }
    }
    return out;
}

/// A with A_ij = Psi_{nu_j}(y_i) / sqrt(m); columns follow the set's order.
inline MeasurementMatrix assemble_measurement_matrix(const MultiIndexSet& set, const PointSet& points)
{
    if (points.rows() == 0) throw std::invalid_argument("assemble_measurement_matrix: empty point list");
    MeasurementMatrix a{evaluate_basis(set, points), set};
    a.values /= std::sqrt(static_cast<double>(points.rows()));
    return a;
}

/// Theta = max_nu ||Psi_nu||_inf = max_nu prod_k sqrt(2 nu_k + 1), attained at y = 1.
inline double theta_bound(const MultiIndexSet& set)
{
    if (set.empty()) throw std::invalid_argument("theta_bound: empty index set");
    double best = 0.0;
    for (const auto& nu : set) {
        double v = 1.0;
        for (int k : nu) v *= 2.0 * k + 1.0;
        best = std::max(best, v);
    }
    return std::sqrt(best);
}

inline void write_measurement_matrix(std::ostream& os, const MeasurementMatrix& a)
{
    io::write_matrix(os, a.values, "measurement " + a.index_set.tag());
}

} // namespace hvapprox
