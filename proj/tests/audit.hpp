#pragma once

#include <cmath>
#include <random>

#include "hvapprox/random.hpp"
#include "hvapprox/srlasso.hpp"
#include "hvapprox/theory.hpp"
#include "test_util.hpp"

namespace testutil {

struct BoundAudit {
    int certified = 0;
    int held = 0;
    int attempts = 0;
    double worst_ratio = 0.0;  // max of error / bound
};

// Random instances in d = 2 with N = 14 Legendre columns, s = 2 and a random
// SPD Gram of size 3. Instances whose exact RIP constant of order 2s falls
// below sqrt2 - 1 are solved with lambda = C1 / (C2 sqrt s) and compared with
// 2 C1 sigma_s(x)_{V,1} / sqrt s + (C1 / (sqrt s lambda) + C2) ||e||_{V,2}.
inline BoundAudit recovery_bound_audit(int instances, std::uint64_t seed, int max_attempts = 1000)
{
    using namespace hvapprox;
    const auto set = hyperbolic_cross(2, 6);
    const auto n = static_cast<Eigen::Index>(set.size());
    const int s = 2, k = 3;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> msize(150, 400);
    std::uniform_real_distribution<double> logu(std::log(1e-4), std::log(1e-1));
    BoundAudit out;
    while (out.certified < instances && out.attempts < max_attempts) {
        ++out.attempts;
        const int m = msize(rng);
        const Eigen::MatrixXd a = assemble_measurement_matrix(set, uniform_points(m, 2, rng())).values;
        const double d2s = theory::exact_rip(a, 2 * s).delta;
        if (!(d2s < std::sqrt(2.0) - 1.0)) continue;
        ++out.certified;

        const auto rn = theory::rip_to_rnsp_constants(d2s);
        const auto c = srlasso_constants(rn.rho, rn.tau);
        const double lambda = c.max_lambda(s);
        const auto sp = random_space(k, rng);

        // s dominant rows plus a small dense tail.
        Eigen::MatrixXd x = 1e-3 * gaussian(n, k, rng);
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int j = 0; j < s; ++j) x.row(idx[j]) = gaussian(1, k, rng);
        Eigen::MatrixXd e = gaussian(m, k, rng);
        const double eta = std::exp(logu(rng));
        e *= eta / norm_vp(HilbertVector{sp, e}, BlockNorm::Two);

        RecoveryProblem p{a, a * x + e, sp, lambda};
        SolverConfig cfg;
        cfg.max_iters = 50000;
        const auto r = solve_srlasso(p, cfg);
        const double err = norm_vp(HilbertVector{sp, r.solution.coeffs - x}, BlockNorm::Two);
        const double sigma = best_s_term_error(HilbertVector{sp, x}, s, BlockNorm::One);
        const double bound = c.error_bound(sigma, eta, s, lambda);
        out.worst_ratio = std::max(out.worst_ratio, err / bound);
        out.held += err <= bound;
    }
    return out;
}

} // namespace testutil
