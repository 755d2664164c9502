#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hvapprox/hilbert.hpp"
#include "hvapprox/random.hpp"

namespace hvapprox::theory {

// ---------------------------------------------------------------------------
// Anisotropy, best s-term rates, tau <-> s
// ---------------------------------------------------------------------------

/// gamma = (1/(d+1)) (d! prod_j log rho_j / (1 + eps))^{1/d}.
inline double gamma_from_rho(std::span<const double> rho, double eps)
{
    if (rho.empty()) throw std::invalid_argument("gamma_from_rho: empty rho");
    if (!(eps > 0.0)) throw std::invalid_argument("gamma_from_rho: eps must be positive");
    const double d = static_cast<double>(rho.size());
    double log_prod = std::lgamma(d + 1.0) - std::log1p(eps);
    for (double r : rho) {
        if (!(r > 1.0)) throw std::invalid_argument("gamma_from_rho: every rho_j must exceed 1");
        log_prod += std::log(std::log(r));
    }
    return std::exp(log_prod / d) / (d + 1.0);
}

struct AnisotropyProfile {
    std::vector<double> rho;
    double epsilon = 0.1;

    int dim() const { return static_cast<int>(rho.size()); }
    double gamma() const { return gamma_from_rho(rho, epsilon); }
};

/// exp(-gamma s^{1/d}) with gamma from the profile.
inline double best_s_term_bound(const AnisotropyProfile& p, double s)
{
    if (!(s >= 1.0)) throw std::invalid_argument("best_s_term_bound: s must be >= 1");
    return std::exp(-p.gamma() * std::pow(s, 1.0 / p.dim()));
}

/// Largest Bernstein ellipse parameter of y -> 1/(c - y) for c > 1.
inline double bernstein_parameter(double c)
{
    if (!(c > 1.0)) throw std::invalid_argument("bernstein_parameter: need c > 1");
    return c + std::sqrt(c * c - 1.0);
}

/// Solves s = prod_j (log(1/tau) / log rho_j + 1) for tau in (0,1) by bisection on t = log(1/tau).
inline double tau_for_sparsity(std::span<const double> rho, double s)
{
    if (!(s >= 2.0)) throw std::invalid_argument("tau_for_sparsity: s must be >= 2");
    if (rho.empty()) throw std::invalid_argument("tau_for_sparsity: empty rho");
    for (double r : rho)
        if (!(r > 1.0)) throw std::invalid_argument("tau_for_sparsity: every rho_j must exceed 1");
    auto count = [&](double t) {
        double v = 1.0;
        for (double r : rho) v *= t / std::log(r) + 1.0;
        return v;
    };
    double lo = 0.0, hi = 1.0;
    while (count(hi) < s) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (count(mid) < s ? lo : hi) = mid;
    }
    return std::exp(-0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// Sample complexity and network size bounds
// ---------------------------------------------------------------------------

/// L = c0 log(2m) (log(2m) min{log(2m) + d, log(2m) log(2d)} + log(1/eps)).
inline double log_factor(double m, int d, double eps, double c0 = 1.0)
{
    if (!(m >= 1.0) || d < 1) throw std::invalid_argument("log_factor: need m >= 1 and d >= 1");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("log_factor: eps must lie in (0,1)");
    if (!(c0 > 0.0)) throw std::invalid_argument("log_factor: c0 must be positive");
    const double l2m = std::log(2.0 * m);
    return c0 * l2m * (l2m * std::min(l2m + d, l2m * std::log(2.0 * d)) + std::log(1.0 / eps));
}

struct UniversalConstants {
    double c0 = 1.0, c1 = 1.0, c2 = 1.0;
};

/// Outputs hold up to the universal constants c0, c1, c2.
struct TheoremBounds {
    double m = 0, eps = 0, gamma = 0, K = 0;
    int d = 0;
    UniversalConstants constants;

    double log_factor = 0;  // L
    double m_tilde = 0;     // m / L
    double s = 0;           // ceil((m_tilde / 2^d)^{1/2})
    double delta = 0;       // Delta, the minimum of three counts
    double depth = 0;
    double size = 0;
    double params = 0;      // K Delta
    double e1 = 0;          // exp(-gamma m_tilde^{1/(2d)} / sqrt 2)
    bool sample_regime = false;  // m_tilde >= 1; outside this regime logarithms are clamped at 0
};

inline TheoremBounds theorem_bounds(double m, int d, double eps, double gamma, double K, UniversalConstants c = {})
{
    if (!(gamma >= 0.0)) throw std::invalid_argument("theorem_bounds: gamma must be >= 0");
    if (!(K >= 1.0)) throw std::invalid_argument("theorem_bounds: K must be >= 1");
    TheoremBounds b;
    b.m = m;
    b.d = d;
    b.eps = eps;
    b.gamma = gamma;
    b.K = K;
    b.constants = c;
    b.log_factor = log_factor(m, d, eps, c.c0);
    b.m_tilde = m / b.log_factor;
    b.sample_regime = b.m_tilde >= 1.0;

    const double dd = d, mt = b.m_tilde;
    const double log_mt = std::max(0.0, std::log(mt));
    const double ratio = mt / std::pow(2.0, dd);
    b.s = std::max(1.0, std::ceil(std::sqrt(ratio)));

    const double delta1 = 2.0 * std::pow(mt, 1.5) * std::pow(2.0, dd / 2.0);
    const double delta2 = std::exp(2.0) * std::pow(ratio, 1.0 + std::log(dd) / (2.0 * std::log(2.0)));
    const double log_delta3 = 0.5 * std::log(mt) + (dd - 1.0) * std::log(log_mt + (dd + 1.0) * std::log(2.0)) -
                              (dd / 2.0 - 1.0) * std::log(2.0) - std::lgamma(dd);
    b.delta = std::min({delta1, delta2, std::exp(log_delta3)});

    const double log_delta = std::max(0.0, std::log(b.delta));
    const double root = std::pow(mt, 1.0 / (2.0 * dd));
    b.depth = c.c1 * (1.0 + dd * std::log(dd)) * (1.0 + log_mt) * (std::sqrt(ratio) + log_delta + gamma * root);
    b.params = K * b.delta;
    b.size = c.c2 * dd * (dd * ratio + (std::sqrt(ratio) + dd * b.delta) * (log_mt + log_delta + gamma * root)) +
             b.params;
    b.e1 = std::exp(-gamma * root / std::sqrt(2.0));
    return b;
}

// ---------------------------------------------------------------------------
// RIP, rNSP and the perturbation argument
// ---------------------------------------------------------------------------

inline constexpr int kExactRipMaxColumns = 16;
inline constexpr int kExactRipMaxOrder = 4;
inline constexpr int kRandomRipSupports = 10'000;

struct RipEstimate {
    double delta = 0.0;
    bool exact = false;  // false: lower bound from sampled supports
    long supports = 0;
};

namespace detail {

inline double support_deviation(const Eigen::MatrixXd& gram, const std::vector<int>& idx)
{
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = gram(idx[a], idx[b]);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sub, Eigen::EigenvaluesOnly).eigenvalues();
    return std::max(std::abs(ev.maxCoeff() - 1.0), std::abs(1.0 - ev.minCoeff()));
}

} // namespace detail

/// Exact restricted isometry constant of order s: the largest deviation of the
/// spectrum of A_S^T A_S from 1 over all supports of size min(s, N); smaller
/// supports are covered by eigenvalue interlacing.
inline RipEstimate exact_rip(const Eigen::MatrixXd& a, int s)
{
    const int n = static_cast<int>(a.cols());
    if (s < 1) throw std::invalid_argument("exact_rip: s must be >= 1");
    if (n > kExactRipMaxColumns || s > kExactRipMaxOrder)
        throw std::invalid_argument("exact_rip: combinatorial cap exceeded (N <= 16, s <= 4)");
    const int k = std::min(s, n);
    const Eigen::MatrixXd gram = a.transpose() * a;
    RipEstimate r{0.0, true, 0};
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        r.delta = std::max(r.delta, detail::support_deviation(gram, idx));
        ++r.supports;
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return r;
}

/// Lower bound on the RIP constant from uniformly sampled supports of size s.
inline RipEstimate sampled_rip(const Eigen::MatrixXd& a, int s, int supports = kRandomRipSupports, std::uint64_t seed = 0)
{
    const int n = static_cast<int>(a.cols());
    if (s < 1 || s > n) throw std::invalid_argument("sampled_rip: need 1 <= s <= N");
    const Eigen::MatrixXd gram = a.transpose() * a;
    std::mt19937_64 rng(seed);
    std::vector<int> perm(static_cast<std::size_t>(n));
    RipEstimate r{0.0, false, supports};
    for (int t = 0; t < supports; ++t) {
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = 0; i < s; ++i) {
            const int j = i + static_cast<int>(unit_uniform(rng) * (n - i));
            std::swap(perm[i], perm[j]);
        }
        r.delta = std::max(r.delta, detail::support_deviation(gram, std::vector<int>(perm.begin(), perm.begin() + s)));
    }
    return r;
}

/// Exact mode when N <= 16 and s <= 4, otherwise a sampled lower bound.
inline RipEstimate empirical_rip(const Eigen::MatrixXd& a, int s, std::uint64_t seed = 0)
{
    if (a.cols() <= kExactRipMaxColumns && s <= kExactRipMaxOrder) return exact_rip(a, s);
    return sampled_rip(a, s, kRandomRipSupports, seed);
}

struct RnspConstants {
    double rho;
    double tau;
};

/// rho = sqrt2 delta / (1 - delta), tau = sqrt(1 + delta) / (1 - delta), valid for delta < sqrt2 - 1.
inline RnspConstants rip_to_rnsp_constants(double delta_2s)
{
    if (!(delta_2s >= 0.0 && delta_2s < std::sqrt(2.0) - 1.0))
        throw std::domain_error("rip_to_rnsp_constants: delta must lie in [0, sqrt2 - 1)");
    return {std::sqrt(2.0) * delta_2s / (1.0 - delta_2s), std::sqrt(1.0 + delta_2s) / (1.0 - delta_2s)};
}

/// Largest admissible perturbation size (exclusive): (1 - rho) / (tau (sqrt s + 1)).
inline double max_perturbation(RnspConstants c, double s) { return (1.0 - c.rho) / (c.tau * (std::sqrt(s) + 1.0)); }

/// rNSP constants of A + E when the perturbation satisfies ||E||_2 <= delta.
inline RnspConstants rnsp_perturbation(RnspConstants c, double s, double delta)
{
    if (!(c.rho >= 0.0 && c.rho < 1.0) || !(c.tau > 0.0)) throw std::domain_error("rnsp_perturbation: invalid (rho, tau)");
    if (!(s >= 1.0)) throw std::domain_error("rnsp_perturbation: s must be >= 1");
    if (!(delta >= 0.0 && delta < max_perturbation(c, s)))
        throw std::domain_error("rnsp_perturbation: delta outside [0, (1-rho)/(tau(sqrt s + 1)))");
    const double td = c.tau * delta;
    return {(c.rho + td * std::sqrt(s)) / (1.0 - td), c.tau / (1.0 - td)};
}

/// (9 - 4 sqrt2) / (2 sqrt5 (3 + 4 sqrt s)): the perturbation that maps (sqrt2/3, 2 sqrt5/3) to rho' = 3/4.
inline double binding_perturbation(double s)
{
    return (9.0 - 4.0 * std::sqrt(2.0)) / (2.0 * std::sqrt(5.0) * (3.0 + 4.0 * std::sqrt(s)));
}

/// delta = N^{-1/2} min{binding_perturbation(s), exp(-gamma s^{1/d})}.
inline double delta_rule(double n, double s, double gamma, int d)
{
    if (!(n >= 1.0) || !(s >= 1.0) || d < 1) throw std::invalid_argument("delta_rule: need N, s, d >= 1");
    return std::min(binding_perturbation(s), std::exp(-gamma * std::pow(s, 1.0 / d))) / std::sqrt(n);
}

/// max_i ||u(y_i) - v(y_i)||_V over sample points: an estimate of the uniform error.
inline double uniform_error_estimate(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& approx,
                                     const DiscreteHilbertSpace& space)
{
    if (reference.rows() == 0 || reference.rows() != approx.rows() || reference.cols() != approx.cols())
        throw std::invalid_argument("uniform_error_estimate: shape mismatch");
    return space.row_norms(reference - approx).maxCoeff();
}

} // namespace hvapprox::theory
