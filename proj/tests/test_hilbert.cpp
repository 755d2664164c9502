#include <algorithm>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "hvapprox/hilbert.hpp"
#include "test_util.hpp"

using namespace hvapprox;
using testutil::gaussian;

TEST(DiscreteHilbertSpace, RejectsBadGram)
{
    Eigen::MatrixXd nonsym(2, 2);
    nonsym << 2, 1, 0, 2;
    EXPECT_THROW(DiscreteHilbertSpace(nonsym, "x"), std::invalid_argument);
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1, 2, 2, 1;
    EXPECT_THROW(DiscreteHilbertSpace(indefinite, "x"), std::invalid_argument);
    EXPECT_THROW(DiscreteHilbertSpace(Eigen::MatrixXd(0, 0), "x"), std::invalid_argument);
}

TEST(DiscreteHilbertSpace, FactorReproducesGramAndNorms)
{
    std::mt19937_64 rng(3);
    for (int k : {1, 4, 17}) {
        const auto sp = testutil::random_space(k, rng);
        const Eigen::MatrixXd r = sp->factor();
        const Eigen::MatrixXd g = sp->gram();
        EXPECT_LE((r.transpose() * r - g).norm(), 1e-12 * g.norm());
        for (int t = 0; t < 20; ++t) {
            const Eigen::VectorXd x = gaussian(k, 1, rng);
            EXPECT_NEAR(sp->norm(x), sp->norm_via_factor(x), 1e-12 * sp->norm(x));
            EXPECT_LE((sp->apply_factor_inverse(sp->apply_factor(x)) - x).norm(), 1e-12 * x.norm());
        }
    }
}

TEST(NormVp, ZeroAndUnitRows)
{
    std::mt19937_64 rng(1);
    const auto sp = testutil::random_space(3, rng);
    const HilbertVector zero{sp, Eigen::MatrixXd::Zero(5, 3)};
    for (auto p : {BlockNorm::One, BlockNorm::Two, BlockNorm::Inf}) EXPECT_EQ(norm_vp(zero, p), 0.0);

    const int n = 6;
    const HilbertVector eye{testutil::euclidean(n), Eigen::MatrixXd::Identity(n, n)};
    EXPECT_NEAR(norm_vp(eye, BlockNorm::One), n, 1e-14);
    EXPECT_NEAR(norm_vp(eye, BlockNorm::Two), std::sqrt(n), 1e-14);
    EXPECT_NEAR(norm_vp(eye, BlockNorm::Inf), 1.0, 1e-14);
}

TEST(NormVp, MatchesMatrixNormOfFactorTimesTranspose)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const auto sp = testutil::random_space(7, rng);
        const HilbertVector v{sp, gaussian(11, 7, rng)};
        const Eigen::MatrixXd rz = sp->apply_factor(v.coeffs.transpose());
        EXPECT_NEAR(norm_vp(v, BlockNorm::One), matrix_lpq_norm(rz, 2, 1), 1e-12 * norm_vp(v, BlockNorm::One));
        EXPECT_NEAR(norm_vp(v, BlockNorm::Two), matrix_lpq_norm(rz, 2, 2), 1e-12 * norm_vp(v, BlockNorm::Two));
        double sq = 0, l1 = 0;
        const Eigen::MatrixXd g = sp->gram();
        for (Eigen::Index j = 0; j < v.coeffs.rows(); ++j) {
            const double q = v.coeffs.row(j) * g * v.coeffs.row(j).transpose();
            sq += q;
            l1 += std::sqrt(q);
        }
        EXPECT_NEAR(std::pow(norm_vp(v, BlockNorm::Two), 2), sq, 1e-10 * sq);
        EXPECT_NEAR(norm_vp(v, BlockNorm::One), l1, 1e-10 * l1);
    }
}

TEST(NormVp, NormAxiomsAndEquivalence)
{
    std::mt19937_64 rng(8);
    const auto sp = testutil::random_space(4, rng);
    std::uniform_real_distribution<double> u(-3, 3);
    const int n = 9;
    for (int t = 0; t < 1000; ++t) {
        const HilbertVector x{sp, gaussian(n, 4, rng)}, y{sp, gaussian(n, 4, rng)};
        const HilbertVector sum{sp, x.coeffs + y.coeffs};
        const double a = u(rng);
        const HilbertVector ax{sp, a * x.coeffs};
        for (auto p : {BlockNorm::One, BlockNorm::Two, BlockNorm::Inf}) {
            EXPECT_LE(norm_vp(sum, p), norm_vp(x, p) + norm_vp(y, p) + 1e-10);
            EXPECT_NEAR(norm_vp(ax, p), std::abs(a) * norm_vp(x, p), 1e-10 * (1 + norm_vp(ax, p)));
        }
        const double n1 = norm_vp(x, BlockNorm::One), n2 = norm_vp(x, BlockNorm::Two);
        EXPECT_LE(n2, n1 + 1e-12);
        EXPECT_LE(n1, std::sqrt(n) * n2 + 1e-12);
    }
}

TEST(Support, PlantedRows)
{
    std::mt19937_64 rng(2);
    const auto sp = testutil::random_space(3, rng);
    HilbertVector v{sp, Eigen::MatrixXd::Zero(10, 3)};
    EXPECT_TRUE(support(v, 1e-12).empty());
    v.coeffs.row(4) = gaussian(1, 3, rng);
    EXPECT_EQ(support(v, 1e-12), (std::vector<Eigen::Index>{4}));
    v.coeffs.row(1) = gaussian(1, 3, rng);
    v.coeffs.row(8) = gaussian(1, 3, rng);
    v.coeffs.row(9).setConstant(1e-16);
    EXPECT_EQ(support(v, 1e-12), (std::vector<Eigen::Index>{1, 4, 8}));
    EXPECT_THROW(support(v, -1.0), std::invalid_argument);
}

TEST(BestSTermError, EdgeCasesAndBruteForce)
{
    std::mt19937_64 rng(4);
    const auto sp = testutil::random_space(2, rng);
    const int n = 9;
    for (int t = 0; t < 5; ++t) {
        const HilbertVector v{sp, gaussian(n, 2, rng)};
        for (auto p : {BlockNorm::One, BlockNorm::Two}) {
            EXPECT_EQ(best_s_term_error(v, n, p), 0.0);
            EXPECT_NEAR(best_s_term_error(v, 0, p), norm_vp(v, p), 1e-14);
            for (int s = 1; s < n; ++s) {
                double best = std::numeric_limits<double>::infinity();
                std::vector<int> mask(n, 0);
                std::fill(mask.end() - s, mask.end(), 1);
                do {
                    HilbertVector rest = v;
                    for (int j = 0; j < n; ++j)
                        if (mask[j]) rest.coeffs.row(j).setZero();
                    best = std::min(best, norm_vp(rest, p));
                } while (std::next_permutation(mask.begin(), mask.end()));
                EXPECT_NEAR(best_s_term_error(v, s, p), best, 1e-12);
            }
        }
    }
    const HilbertVector v{sp, Eigen::MatrixXd::Ones(3, 2)};
    EXPECT_THROW(best_s_term_error(v, 4, BlockNorm::One), std::invalid_argument);
}

TEST(Project, IdentityOnSubspaceAndLinear)
{
    std::mt19937_64 rng(6);
    const auto sp = testutil::random_space(8, rng);
    const Eigen::MatrixXd g = sp->gram();
    const Eigen::VectorXd c = gaussian(8, 1, rng);
    EXPECT_LE((project(sp, g * c).coeffs - c).norm(), 1e-10);

    const Eigen::VectorXd f = gaussian(8, 1, rng), h = gaussian(8, 1, rng);
    const double a = 1.7, b = -0.4;
    const Eigen::VectorXd lhs = project(sp, a * f + b * h).coeffs;
    const Eigen::VectorXd rhs = a * project(sp, f).coeffs + b * project(sp, h).coeffs;
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * (1 + lhs.norm()));
}

TEST(Project, OrthogonalComplementMapsToZero)
{
    // V_h = span of the first 4 coordinates inside a 9-dimensional space with
    // Gram G; f is orthogonalized against V_h, so its load vector vanishes.
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd big = testutil::random_spd(9, rng);
    const Eigen::MatrixXd gh = big.topLeftCorner(4, 4);
    const auto sp = std::make_shared<const DiscreteHilbertSpace>(gh, "sub");
    Eigen::VectorXd f = gaussian(9, 1, rng);
    const Eigen::VectorXd coef = gh.ldlt().solve(big.topRows(4) * f);
    f.head(4) -= coef;
    const Eigen::VectorXd rhs = big.topRows(4) * f;
    EXPECT_LE(project(sp, rhs).coeffs.norm(), 1e-10 * f.norm());
}

TEST(HilbertVector, BinaryRoundTrip)
{
    std::mt19937_64 rng(9);
    const auto sp = testutil::random_space(5, rng);
    const HilbertVector v{sp, gaussian(12, 5, rng)};
    std::stringstream ss;
    write_hilbert_vector(ss, v);
    const auto back = read_hilbert_vector(ss, sp);
    EXPECT_EQ(back.coeffs, v.coeffs);

    std::stringstream ss2;
    write_hilbert_vector(ss2, v);
    const auto other = std::make_shared<const DiscreteHilbertSpace>(DiscreteHilbertSpace::identity(5, "L2"));
    EXPECT_THROW(read_hilbert_vector(ss2, other), io::format_error);
}

TEST(LossReformulation, VNormMatchesGramWeightedCoordinates)
{
    std::mt19937_64 rng(10);
    const int k = 6, m = 40;
    const auto sp = testutil::random_space(k, rng);
    const Eigen::MatrixXd phi = gaussian(m, k, rng), d = gaussian(m, k, rng);
    const Eigen::MatrixXd g = sp->gram();
    double vsum = 0, wsum = 0;
    for (int i = 0; i < m; ++i) {
        const Eigen::VectorXd r = (phi.row(i) - d.row(i)).transpose();
        vsum += std::pow(sp->norm_via_factor(r), 2);
        wsum += r.dot(g * r);
    }
    EXPECT_NEAR(std::sqrt(vsum / m), std::sqrt(wsum / m), 1e-12 * std::sqrt(wsum / m));
}
