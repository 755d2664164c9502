#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hvapprox/polybasis.hpp"
#include "hvapprox/random.hpp"

using namespace hvapprox;

namespace {

double classical_legendre(int n, double y)
{
    switch (n) {
    case 0: return 1.0;
    case 1: return y;
    case 2: return (3 * y * y - 1) / 2;
    case 3: return (5 * y * y * y - 3 * y) / 2;
    case 4: return (35 * std::pow(y, 4) - 30 * y * y + 3) / 8;
    case 5: return (63 * std::pow(y, 5) - 70 * y * y * y + 15 * y) / 8;
    }
    return NAN;
}

} // namespace

TEST(Legendre, AnchorValues)
{
    EXPECT_DOUBLE_EQ(legendre_1d(0, 0.3), 1.0);
    for (int nu = 0; nu <= 20; ++nu) EXPECT_NEAR(legendre_1d(nu, 1.0), std::sqrt(2.0 * nu + 1), 1e-12);
    EXPECT_NEAR(legendre_1d(2, 0.0), -std::sqrt(5.0) / 2, 1e-15);
}

TEST(Legendre, MatchesClosedForms)
{
    for (int nu = 0; nu <= 5; ++nu)
        for (double y = -1.0; y <= 1.0; y += 0.01)
            EXPECT_NEAR(legendre_1d(nu, y), std::sqrt(2.0 * nu + 1) * classical_legendre(nu, y), 1e-13);
}

TEST(Legendre, GaussQuadratureOrthonormality)
{
    const auto rule = gauss_legendre(21);
    double wsum = 0;
    for (double w : rule.weights) wsum += w;
    EXPECT_NEAR(wsum, 1.0, 1e-14);
    std::vector<std::vector<double>> tab(rule.nodes.size(), std::vector<double>(21));
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) legendre_table(20, rule.nodes[q], tab[q]);
    double worst = 0;
    for (int a = 0; a <= 20; ++a)
        for (int b = 0; b <= 20; ++b) {
            double s = 0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) s += rule.weights[q] * tab[q][a] * tab[q][b];
            worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
        }
    EXPECT_LE(worst, 1e-12);
}

TEST(Legendre, MaximumAtEndpoint)
{
    for (int nu = 0; nu <= 20; ++nu)
        for (int i = 0; i <= 1000; ++i) {
            const double y = -1.0 + 2.0 * i / 1000;
            EXPECT_LE(std::abs(legendre_1d(nu, y)), legendre_1d(nu, 1.0) + 1e-12);
        }
}

TEST(Legendre, DomainHandling)
{
    EXPECT_NEAR(legendre_1d(3, 1.0 + 5e-13), legendre_1d(3, 1.0), 0.0);
    EXPECT_THROW(legendre_1d(3, 1.0 + 1e-9), domain_error);
    EXPECT_THROW(legendre_1d(-1, 0.0), std::invalid_argument);
}

TEST(Legendre, TensorProducts)
{
    const double y0[] = {0.4, -0.9, 0.1};
    EXPECT_DOUBLE_EQ(legendre_tensor({0, 0, 0}, y0), 1.0);
    const double y1[] = {1.0, 1.0};
    EXPECT_NEAR(legendre_tensor({1, 1}, y1), 3.0, 1e-14);
    const double y2[] = {0.0, 0.7};
    EXPECT_NEAR(legendre_tensor({2, 0}, y2), -std::sqrt(5.0) / 2, 1e-15);
    EXPECT_THROW(legendre_tensor({1}, y2), std::invalid_argument);
}

TEST(MeasurementMatrix, SinglePoint)
{
    PointSet p(1, 2);
    p << 0.3, -0.2;
    const auto a = assemble_measurement_matrix(MultiIndexSet(2, {{0, 0}}), p);
    ASSERT_EQ(a.rows(), 1);
    ASSERT_EQ(a.cols(), 1);
    EXPECT_DOUBLE_EQ(a.values(0, 0), 1.0);
    EXPECT_THROW(assemble_measurement_matrix(hyperbolic_cross(2, 3), PointSet(0, 2)), std::invalid_argument);
}

TEST(MeasurementMatrix, RepeatedPointColumnNorms)
{
    const auto set = hyperbolic_cross(2, 6);
    PointSet p(4, 2);
    for (int i = 0; i < 4; ++i) p.row(i) << 0.35, -0.8;
    const auto a = assemble_measurement_matrix(set, p);
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double y[] = {0.35, -0.8};
        EXPECT_NEAR(a.values.col(j).norm(), std::abs(legendre_tensor(set[j], y)), 1e-13);
    }
}

TEST(MeasurementMatrix, EntriesAndColumnOrder)
{
    const auto set = hyperbolic_cross(3, 8);
    const auto pts = uniform_points(7, 3, 4);
    const auto a = assemble_measurement_matrix(set, pts);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            EXPECT_NEAR(a.values(i, j),
                        legendre_tensor(set[j], std::span<const double>(pts.row(i).data(), 3)) / std::sqrt(7.0), 1e-13);
}

TEST(MeasurementMatrix, EmpiricalGramApproachesIdentity)
{
    const auto set = hyperbolic_cross(2, 4);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto a = assemble_measurement_matrix(set, uniform_points(20000, 2, seed));
        const Eigen::MatrixXd g = a.values.transpose() * a.values;
        EXPECT_LE((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 0.08);
    }
}

TEST(ThetaBound, ValuesAndBounds)
{
    EXPECT_NEAR(theta_bound(hyperbolic_cross(1, 3)), std::sqrt(5.0), 1e-15);
    for (int d = 1; d <= 4; ++d)
        for (long s = 1; s <= 30; ++s) {
            const double t2 = std::pow(theta_bound(hyperbolic_cross(d, s)), 2);
            EXPECT_LE(t2, std::pow(2.0, d) * s + 1e-9);
            EXPECT_LE(t2, std::pow(static_cast<double>(s), std::log(3.0) / std::log(2.0)) + 1e-9);
        }
}

TEST(ThetaBound, MatchesGridMaximum)
{
    for (int d = 1; d <= 2; ++d) {
        const auto set = hyperbolic_cross(d, 10);
        double grid_max = 0;
        const int n = 201;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < (d == 2 ? n : 1); ++j) {
                const double y[] = {-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1)};
                for (const auto& nu : set)
                    grid_max = std::max(grid_max, std::abs(legendre_tensor(nu, std::span<const double>(y, d))));
            }
        EXPECT_NEAR(theta_bound(set), grid_max, 1e-10);
    }
}
