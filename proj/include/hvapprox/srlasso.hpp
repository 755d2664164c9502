#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hvapprox/hilbert.hpp"
#include "hvapprox/multiindex.hpp"
#include "hvapprox/polybasis.hpp"

namespace hvapprox {

// ---------------------------------------------------------------------------
// Regularization parameter rule
// ---------------------------------------------------------------------------

/// Constants of the SR-LASSO error bound for a matrix with the robust null
/// space property (rho, tau):
///   C1 = (3 rho + 1)(rho + 1) / (2 (1 - rho)),  C2 = (3 rho + 5) tau / (2 (1 - rho)).
struct SrlassoConstants {
    double c1;
    double c2;

    /// Largest lambda for which the error bound holds at sparsity s.
    double max_lambda(double s) const { return c1 / (c2 * std::sqrt(s)); }

    /// 2 C1 sigma_s / sqrt(s) + (C1 / (sqrt(s) lambda) + C2) ||e||
    double error_bound(double sigma_s, double noise, double s, double lambda) const
    {
        return 2.0 * c1 * sigma_s / std::sqrt(s) + (c1 / (std::sqrt(s) * lambda) + c2) * noise;
    }
};

inline SrlassoConstants srlasso_constants(double rho, double tau)
{
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("srlasso_constants: rho must lie in [0,1)");
    if (!(tau > 0.0)) throw std::invalid_argument("srlasso_constants: tau must be positive");
    return {(3.0 * rho + 1.0) * (rho + 1.0) / (2.0 * (1.0 - rho)),
            (3.0 * rho + 5.0) * tau / (2.0 * (1.0 - rho))};
}

/// rNSP constants of the perturbed measurement matrix used by the lambda rule.
inline constexpr double kRulePerturbedRho = 0.75;

/// Upper bound 3 sqrt(5) / 2 on the perturbed tau, valid for every s.
inline double rule_tau_upper_bound() { return 1.5 * std::sqrt(5.0); }

/// Exact perturbed tau at sparsity s: sqrt(5)(3 + 4 sqrt s) / (2 (sqrt 2 + 3 sqrt s)).
inline double rule_tau_exact(double s)
{
    const double rs = std::sqrt(s);
    return std::sqrt(5.0) * (3.0 + 4.0 * rs) / (2.0 * (std::sqrt(2.0) + 3.0 * rs));
}

/// lambda = C1' / (C2' sqrt(s)) with rho' = 3/4 and tau' = 3 sqrt(5)/2.
/// Depends on s only, never on the target function or the noise.
inline double lambda_rule(double s)
{
    if (!(s >= 1.0)) throw std::invalid_argument("lambda_rule: s must be >= 1");
    return srlasso_constants(kRulePerturbedRho, rule_tau_upper_bound()).max_lambda(s);
}

/// Same rule with the s-dependent tau' instead of its upper bound.
inline double lambda_rule_exact_tau(double s)
{
    if (!(s >= 1.0)) throw std::invalid_argument("lambda_rule_exact_tau: s must be >= 1");
    return srlasso_constants(kRulePerturbedRho, rule_tau_exact(s)).max_lambda(s);
}

/// Sparsity used by the automatic lambda: ceil(sqrt(m / 2^d)), at least 1.
inline double auto_sparsity(Eigen::Index m, int d)
{
    const double s = std::ceil(std::sqrt(static_cast<double>(m) / std::pow(2.0, d)));
    return std::max(1.0, s);
}

// ---------------------------------------------------------------------------
// Problem, configuration, result
// ---------------------------------------------------------------------------

struct RecoveryProblem {
    Eigen::MatrixXd a;  // m x N
    Eigen::MatrixXd b;  // m x K, rows are coordinates of b_i (1/sqrt(m) already applied)
    SpacePtr space;
    double lambda = 0.0;

    void validate() const
    {
        if (!space) throw std::invalid_argument("RecoveryProblem: missing space");
        if (a.rows() != b.rows()) throw std::invalid_argument("RecoveryProblem: rows(A) != rows(b)");
        if (b.cols() != space->dim()) throw std::invalid_argument("RecoveryProblem: width of b differs from space dimension");
        if (!(lambda > 0.0)) throw std::invalid_argument("RecoveryProblem: lambda must be positive");
        if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("RecoveryProblem: empty matrix");
    }
};

struct SolverConfig {
    int max_iters = 200000;
    /// Stop when |F_k - F_{k-window}| <= rel_objective_tol * F_k ...
    double rel_objective_tol = 1e-10;
    int objective_window = 50;
    /// ... or when the relative primal-dual gap drops below this (SR-LASSO only).
    double rel_gap_tol = 1e-10;
    /// Stop ISTA stages when the relative iterate change falls below this.
    double rel_iterate_tol = 1e-12;

    /// Primal and dual steps are step_scale / ||A||, so sigma tau ||A||^2 < 1.
    double step_scale = 0.99;
    int power_iters = 100;
    std::uint64_t power_seed = 0;
    double norm_overestimate = 1.01;

    /// LASSO: continuation over lambda_k = lambda * factor^(stages-1-k), k = 0..stages-1.
    int continuation_stages = 6;
    double continuation_factor = 4.0;
    /// LASSO: number of outer Bregman passes (1 means none).
    int bregman_passes = 1;

    /// Keep at most this many trace points; older points are decimated.
    std::size_t max_trace_points = 1000;

    void validate() const
    {
        if (max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
        if (!(step_scale > 0.0 && step_scale <= 1.0)) throw std::invalid_argument("SolverConfig: step_scale must lie in (0,1]");
        if (!(norm_overestimate >= 1.0)) throw std::invalid_argument("SolverConfig: norm_overestimate must be >= 1");
        if (continuation_stages < 1 || bregman_passes < 1) throw std::invalid_argument("SolverConfig: stages/passes must be >= 1");
        if (!(continuation_factor >= 1.0)) throw std::invalid_argument("SolverConfig: continuation_factor must be >= 1");
        if (objective_window < 1) throw std::invalid_argument("SolverConfig: objective_window must be >= 1");
    }
};

/// Objective values sampled during a solve. Keeps every `stride`-th value and
/// doubles the stride whenever the capacity is reached.
class ObjectiveTrace {
public:
    explicit ObjectiveTrace(std::size_t capacity = 1000) : capacity_(std::max<std::size_t>(capacity, 2)) {}

    void push(double v)
    {
        if (count_++ % stride_ == 0) values_.push_back(v);
        if (values_.size() >= capacity_) {
            std::vector<double> kept;
            for (std::size_t i = 0; i < values_.size(); i += 2) kept.push_back(values_[i]);
            values_ = std::move(kept);
            stride_ *= 2;
        }
    }

    const std::vector<double>& values() const { return values_; }
    std::size_t stride() const { return stride_; }

private:
    std::size_t capacity_;
    std::size_t stride_ = 1;
    std::size_t count_ = 0;
    std::vector<double> values_;
};

struct RecoveryResult {
    HilbertVector solution;
    std::vector<double> objective_trace;
    std::size_t trace_stride = 1;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
    double residual = 0.0;  // ||A z - b||_{V,2}
};

class solver_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Power iteration estimate of the spectral norm ||A||_2.
inline double spectral_norm(const Eigen::MatrixXd& a, int iters = 100, std::uint64_t seed = 0)
{
    if (a.size() == 0) return 0.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    v.normalize();
    double est = 0.0;
    for (int k = 0; k < iters; ++k) {
        const Eigen::VectorXd av = a * v;
        Eigen::VectorXd w = a.transpose() * av;
        const double nw = w.norm();
        if (nw == 0.0) return std::sqrt(std::max(est, 0.0));
        est = nw;
        v = w / nw;
    }
    return std::sqrt(est);
}

/// ||A||_2 for step sizes. Exact (eigenvalues of the smaller Gram matrix)
/// when min(m, N) <= exact_limit, otherwise the power-iteration estimate.
inline double operator_norm(const Eigen::MatrixXd& a, int power_iters, std::uint64_t seed,
                            Eigen::Index exact_limit = 2000)
{
    if (a.size() == 0) return 0.0;
    if (std::min(a.rows(), a.cols()) <= exact_limit) {
        const Eigen::MatrixXd g = a.rows() < a.cols() ? Eigen::MatrixXd(a * a.transpose())
                                                      : Eigen::MatrixXd(a.transpose() * a);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
        return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
    }
    return spectral_norm(a, power_iters, seed);
}

/// Proximal map of t ||.||_V: v * max(0, 1 - t / ||v||_V). Returns zero when
/// ||v||_V <= t, including the tie.
inline Eigen::VectorXd block_soft_threshold(const DiscreteHilbertSpace& space, const Eigen::VectorXd& v, double threshold)
{
    if (threshold < 0.0) throw std::invalid_argument("block_soft_threshold: negative threshold");
    const double nv = space.norm(v);
    if (nv <= threshold) return Eigen::VectorXd::Zero(v.size());
    return v * (1.0 - threshold / nv);
}

namespace detail {

/// Row-wise Euclidean shrinkage in place.
inline void shrink_rows(Eigen::MatrixXd& w, double t)
{
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
        const double n = w.row(j).norm();
        if (n <= t)
            w.row(j).setZero();
        else
            w.row(j) *= 1.0 - t / n;
    }
}

inline double sum_row_norms(const Eigen::MatrixXd& w) { return w.rowwise().norm().sum(); }

inline void check_finite(double v, const char* where, int iter)
{
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << where << ": non-finite objective at iteration " << iter;
        throw solver_error(msg.str());
    }
}

/// Coordinates in which every block V-norm becomes a Euclidean row norm:
/// W = Z R^T for a factor R^T R = G.
struct FactorCoordinates {
    Eigen::MatrixXd b;   // m x r
    Eigen::MatrixXd basis;  // r x K orthonormal rows, or empty if no reduction
};

/// Maps b to factor coordinates and, when the row count is below the width,
/// restricts to the row space of b; all iterates of both solvers stay there.
inline FactorCoordinates to_factor_coordinates(const RecoveryProblem& p)
{
    Eigen::MatrixXd bt = p.space->apply_factor(p.b.transpose()).transpose();  // m x K
    FactorCoordinates fc;
    if (bt.rows() < bt.cols()) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(bt.transpose());  // K x m = Q T
        const Eigen::Index r = bt.rows();
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(bt.cols(), r);  // K x r
        fc.b = bt * q;  // m x r
        fc.basis = q.transpose();
    } else {
        fc.b = std::move(bt);
    }
    return fc;
}

inline HilbertVector from_factor_coordinates(const RecoveryProblem& p, const FactorCoordinates& fc,
                                             const Eigen::MatrixXd& w)
{
    Eigen::MatrixXd full = fc.basis.size() ? Eigen::MatrixXd(w * fc.basis) : w;  // N x K
    Eigen::MatrixXd z = p.space->apply_factor_inverse(full.transpose()).transpose();
    return HilbertVector{p.space, std::move(z)};
}

} // namespace detail

/// lambda ||z||_{V,1} + ||A z - b||_{V,2}
inline double srlasso_objective(const RecoveryProblem& p, const HilbertVector& z)
{
    HilbertVector r{p.space, p.a * z.coeffs - p.b};
    return p.lambda * norm_vp(z, BlockNorm::One) + norm_vp(r, BlockNorm::Two);
}

/// lambda ||z||_{V,1} + ||A z - b||^2_{V,2}
inline double lasso_objective(const RecoveryProblem& p, const HilbertVector& z)
{
    HilbertVector r{p.space, p.a * z.coeffs - p.b};
    const double res = norm_vp(r, BlockNorm::Two);
    return p.lambda * norm_vp(z, BlockNorm::One) + res * res;
}

// ---------------------------------------------------------------------------
// SR-LASSO
// ---------------------------------------------------------------------------

/**
 * Minimizes lambda ||z||_{V,1} + ||A z - b||_{V,2} over z in V_h^N.
 *
 * Primal-dual iteration on the saddle problem
 *   min_W max_{||Y||_F <= 1} lambda ||W||_{2,1} + <Y, A W - B>
 * in factor coordinates (W = Z R^T, B = b R^T), where the dual step is a
 * projection onto the Frobenius unit ball and the primal step is row-wise
 * block soft thresholding. Steps satisfy sigma tau ||A||^2 < 1.
 *
 * The dual iterate, rescaled to satisfy max_j ||(A^T Y)_j|| <= lambda, gives
 * the lower bound -<Y, B>; the loop stops when the relative gap or the
 * windowed objective change falls below tolerance. The iterate with the
 * lowest objective seen is returned.
 */
inline RecoveryResult solve_srlasso(const RecoveryProblem& p, const SolverConfig& cfg = {})
{
    p.validate();
    cfg.validate();
    const auto fc = detail::to_factor_coordinates(p);
    const Eigen::MatrixXd& b = fc.b;
    const Eigen::MatrixXd& a = p.a;
    const Eigen::Index n = a.cols(), m = a.rows(), r = b.cols();

    RecoveryResult res;
    ObjectiveTrace trace(cfg.max_trace_points);

    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.solution = HilbertVector{p.space, Eigen::MatrixXd::Zero(n, p.space->dim())};
        res.objective_trace = {0.0};
        res.converged = true;
        return res;
    }

    const double anorm = operator_norm(a, cfg.power_iters, cfg.power_seed) * cfg.norm_overestimate;
    const double step = cfg.step_scale / anorm;
    const double sigma = step, tau = step;

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, r);
    Eigen::MatrixXd aw = Eigen::MatrixXd::Zero(m, r);
    Eigen::MatrixXd aw_bar = aw;
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m, r);
    Eigen::MatrixXd w_new(n, r), aw_new(m, r), aty(n, r);

    Eigen::MatrixXd best_w = w;
    double best_obj = bnorm;  // objective at z = 0
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);
    history.push_back(best_obj);
    trace.push(best_obj);

    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        // Dual: Y <- proj_{||.||_F <= 1}(Y + sigma (A W_bar - B))
        y += sigma * (aw_bar - b);
        const double yn = y.norm();
        if (yn > 1.0) y /= yn;

        // Primal: W <- shrink(W - tau A^T Y, tau lambda)
        aty.noalias() = a.transpose() * y;
        w_new = w - tau * aty;
        detail::shrink_rows(w_new, tau * p.lambda);
        aw_new.noalias() = a * w_new;

        aw_bar = 2.0 * aw_new - aw;
        w.swap(w_new);
        aw.swap(aw_new);

        const double obj = p.lambda * detail::sum_row_norms(w) + (aw - b).norm();
        detail::check_finite(obj, "solve_srlasso", it);
        history.push_back(obj);
        trace.push(obj);
        if (obj < best_obj) {
            best_obj = obj;
            best_w = w;
        }

        // Dual certificate from the current dual iterate.
        const double max_row = aty.rowwise().norm().maxCoeff();
        const double scale = (max_row > p.lambda) ? p.lambda / max_row : 1.0;
        const double dual = -scale * (y.cwiseProduct(b)).sum();
        const double gap = best_obj - dual;
        if (gap <= cfg.rel_gap_tol * std::max(best_obj, std::numeric_limits<double>::min())) {
            res.converged = true;
            ++it;
            break;
        }
        const auto k = history.size() - 1;
        if (k >= static_cast<std::size_t>(cfg.objective_window)) {
            const double prev = history[k - static_cast<std::size_t>(cfg.objective_window)];
            if (std::abs(obj - prev) <= cfg.rel_objective_tol * std::max(obj, std::numeric_limits<double>::min()) &&
                std::abs(obj - best_obj) <= cfg.rel_objective_tol * std::max(best_obj, std::numeric_limits<double>::min())) {
                res.converged = true;
                ++it;
                break;
            }
        }
    }

    res.iterations = it;
    res.solution = detail::from_factor_coordinates(p, fc, best_w);
    res.objective = best_obj;
    res.residual = (a * best_w - b).norm();
    res.objective_trace = trace.values();
    res.trace_stride = trace.stride();
    return res;
}

// ---------------------------------------------------------------------------
// LASSO (squared data term)
// ---------------------------------------------------------------------------

/**
 * Minimizes lambda ||z||_{V,1} + ||A z - b||^2_{V,2} by proximal gradient
 * with fixed-point continuation on lambda and optional outer Bregman passes.
 *
 * The gradient of the squared data term is 2 A^T (A z - b), so the step is
 * 1 / (2 ||A||^2) with ||A|| over-estimated by norm_overestimate. Each
 * proximal-gradient step decreases the stage objective.
 */
inline RecoveryResult solve_lasso(const RecoveryProblem& p, const SolverConfig& cfg = {})
{
    p.validate();
    cfg.validate();
    const auto fc = detail::to_factor_coordinates(p);
    const Eigen::MatrixXd& b0 = fc.b;
    const Eigen::MatrixXd& a = p.a;
    const Eigen::Index n = a.cols(), r = b0.cols();

    RecoveryResult res;
    ObjectiveTrace trace(cfg.max_trace_points);

    const double anorm = operator_norm(a, cfg.power_iters, cfg.power_seed) * cfg.norm_overestimate;
    const double step = 1.0 / (2.0 * anorm * anorm);

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, r);
    Eigen::MatrixXd b = b0;
    Eigen::MatrixXd resid = -b;  // A w - b
    Eigen::MatrixXd grad(n, r), w_new(n, r);
    int total = 0;
    bool converged = true;

    auto objective = [&](const Eigen::MatrixXd& ww, const Eigen::MatrixXd& rr, double lam) {
        return lam * detail::sum_row_norms(ww) + rr.squaredNorm();
    };

    for (int pass = 0; pass < cfg.bregman_passes; ++pass) {
        for (int stage = 0; stage < cfg.continuation_stages; ++stage) {
            const double lam = p.lambda * std::pow(cfg.continuation_factor, cfg.continuation_stages - 1 - stage);
            bool stage_done = false;
            double obj = objective(w, resid, lam);
            for (int it = 0; it < cfg.max_iters; ++it, ++total) {
                grad.noalias() = 2.0 * (a.transpose() * resid);
                w_new = w - step * grad;
                detail::shrink_rows(w_new, step * lam);
                const double change = (w_new - w).norm();
                w.swap(w_new);
                resid.noalias() = a * w;
                resid -= b;
                const double next = objective(w, resid, lam);
                detail::check_finite(next, "solve_lasso", total);
                trace.push(next);
                const bool small_step = change <= cfg.rel_iterate_tol * std::max(w.norm(), std::numeric_limits<double>::min());
                const bool flat = std::abs(obj - next) <= cfg.rel_objective_tol * std::max(next, std::numeric_limits<double>::min());
                obj = next;
                if (small_step || (flat && change <= std::sqrt(cfg.rel_objective_tol) * std::max(w.norm(), 1e-300))) {
                    stage_done = true;
                    ++total;
                    break;
                }
            }
            if (!stage_done) converged = false;
        }
        if (pass + 1 < cfg.bregman_passes) {
            // Add back the residual of the original data.
            const Eigen::MatrixXd aw = a * w;
            b += b0 - aw;
            resid = aw - b;
        }
    }

    res.iterations = total;
    res.converged = converged;
    res.solution = detail::from_factor_coordinates(p, fc, w);
    const Eigen::MatrixXd final_res = a * w - b0;
    res.residual = final_res.norm();
    res.objective = objective(w, final_res, p.lambda);
    res.objective_trace = trace.values();
    res.trace_stride = trace.stride();
    return res;
}

// ---------------------------------------------------------------------------
// Coefficient recovery from samples
// ---------------------------------------------------------------------------

/// lambda given explicitly, or chosen by lambda_rule(auto_sparsity(m, d)).
struct LambdaChoice {
    std::optional<double> value;

    static LambdaChoice automatic() { return {}; }
    static LambdaChoice fixed(double v) { return {v}; }

    double resolve(Eigen::Index m, int d) const { return value ? *value : lambda_rule(auto_sparsity(m, d)); }
};

enum class RecoveryMethod { SrLasso, Lasso };

/**
 * Fits Legendre coefficients c_nu in V_h over the index set from samples
 * (y_i, d_i): assembles A = (Psi_{nu_j}(y_i)/sqrt(m)) and b = (d_i/sqrt(m)),
 * then solves the selected recovery problem.
 *
 * `values` holds one sample per row in the coordinates of `space`.
 */
inline RecoveryResult recover_coefficients(const PointSet& points, const Eigen::MatrixXd& values, const SpacePtr& space,
                                           const MultiIndexSet& set, LambdaChoice lambda, const SolverConfig& cfg = {},
                                           RecoveryMethod method = RecoveryMethod::SrLasso)
{
    if (points.rows() != values.rows()) throw std::invalid_argument("recover_coefficients: point and value counts differ");
    if (points.cols() != set.dim()) throw std::invalid_argument("recover_coefficients: point dimension differs from index set");
    RecoveryProblem p;
    const auto mm = assemble_measurement_matrix(set, points);
    p.a = mm.values;
    p.b = values / std::sqrt(static_cast<double>(points.rows()));
    p.space = space;
    p.lambda = lambda.resolve(points.rows(), set.dim());
    return method == RecoveryMethod::SrLasso ? solve_srlasso(p, cfg) : solve_lasso(p, cfg);
}

/// Evaluates sum_j c_j Psi_{nu_j}(y) at every point; returns one row per point.
inline Eigen::MatrixXd evaluate_expansion(const MultiIndexSet& set, const Eigen::MatrixXd& coeffs, const PointSet& points)
{
    if (coeffs.rows() != static_cast<Eigen::Index>(set.size()))
        throw std::invalid_argument("evaluate_expansion: coefficient count differs from index set size");
    return evaluate_basis(set, points) * coeffs;
}

} // namespace hvapprox
