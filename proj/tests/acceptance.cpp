#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "audit.hpp"
#include "dnn_check.hpp"
#include "hvapprox/dnn.hpp"
#include "hvapprox/multiindex.hpp"
#include "hvapprox/pde.hpp"
#include "hvapprox/polybasis.hpp"
#include "hvapprox/quadrature.hpp"
#include "hvapprox/random.hpp"
#include "hvapprox/srlasso.hpp"
#include "hvapprox/theory.hpp"
#include "test_util.hpp"

using namespace hvapprox;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome mesh_fidelity()
{
    const auto m = pde::build_mesh(33);
    const bool ok = m.num_vertices() == 1089 && m.num_triangles() == 2048 && m.h() == std::sqrt(2.0) / 32;
    return {ok, fmt("K=%ld triangles=%zu h=%.17g", static_cast<long>(m.num_vertices()), m.num_triangles(), m.h())};
}

Outcome index_set_fidelity()
{
    const auto s = hyperbolic_cross(30, 7);
    return {s.size() == 1486 && is_lower(s),
            fmt("order p=6 read as products prod(nu_k+1) <= p+1 = 7: N=%zu", s.size())};
}

Outcome legendre_orthonormality()
{
    const auto rule = gauss_legendre(21);
    std::vector<std::vector<double>> tab(rule.nodes.size(), std::vector<double>(21));
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) legendre_table(20, rule.nodes[q], tab[q]);
    double worst = 0;
    for (int a = 0; a <= 20; ++a)
        for (int b = 0; b <= 20; ++b) {
            double s = 0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) s += rule.weights[q] * tab[q][a] * tab[q][b];
            worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
        }
    return {worst <= 1e-12, fmt("max |Gram - I| = %.3e over degrees 0..20, 21-point Gauss rule", worst)};
}

Outcome fem_order()
{
    const double pi = std::numbers::pi;
    auto exact = [pi](double x1, double x2) { return std::sin(pi * x1) * std::sin(pi * x2) / 3.0; };
    double err[2];
    int k = 0;
    for (int n : {17, 33}) {
        const auto mesh = pde::build_mesh(n);
        const double y[] = {0.0, 0.0};  // affine coefficient a = 3
        err[k++] = pde::l2_error(mesh, pde::solve_pde(pde::ParametricCoefficient::affine(), pde::Forcing::manufactured_sine(), mesh, y),
                                 exact);
    }
    const double ratio = err[0] / err[1];
    return {ratio >= 3.6 && ratio <= 4.4, fmt("L2 errors %.4e (n=17), %.4e (n=33), ratio %.4f", err[0], err[1], ratio)};
}

Outcome sparse_recovery()
{
    const auto set = hyperbolic_cross(2, 11);
    const auto n = static_cast<Eigen::Index>(set.size());
    const int m = 200, k = 5, s = 3;
    const double lambda = lambda_rule(s);
    double worst_clean = 0;
    int clean_ok = 0;
    double worst_ratio = 0;
    bool noisy_ok = true;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const auto sp = testutil::random_space(k, rng);
        Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, k);
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int j = 0; j < s; ++j) z.row(idx[j]) = testutil::gaussian(1, k, rng);
        const Eigen::MatrixXd a = assemble_measurement_matrix(set, uniform_points(m, 2, 1000 + seed)).values;
        const Eigen::MatrixXd b = a * z;
        const auto r = solve_srlasso(RecoveryProblem{a, b, sp, lambda});
        const double e = norm_vp(HilbertVector{sp, r.solution.coeffs - z}, BlockNorm::Two);
        worst_clean = std::max(worst_clean, e);
        clean_ok += e <= 1e-4;
        for (double eta : {1e-3, 1e-2, 1e-1}) {
            Eigen::MatrixXd noise = testutil::gaussian(m, k, rng);
            noise *= eta / norm_vp(HilbertVector{sp, noise}, BlockNorm::Two);
            const auto rn = solve_srlasso(RecoveryProblem{a, b + noise, sp, lambda});
            const double en = norm_vp(HilbertVector{sp, rn.solution.coeffs - z}, BlockNorm::Two);
            worst_ratio = std::max(worst_ratio, en / eta);
            noisy_ok = noisy_ok && en <= 50 * eta;
        }
    }
    return {clean_ok == 10 && noisy_ok,
            fmt("N=%ld K=5 m=200 s=3: noiseless %d/10 within 1e-4 (worst %.2e); noisy worst error/eta %.2f (limit 50)",
                static_cast<long>(n), clean_ok, worst_clean, worst_ratio)};
}

Outcome recovery_bound_audit()
{
    const auto r = testutil::recovery_bound_audit(100, 2024);
    return {r.certified == 100 && r.held == 100,
            fmt("%d certified instances (of %d drawn), bound held on %d, worst error/bound %.3f", r.certified, r.attempts,
                r.held, r.worst_ratio)};
}

Outcome exponential_rate()
{
    const double c1 = 1.5, c2 = 2.0;
    auto f = [&](const PointSet& p) {
        Eigen::MatrixXd v(p.rows(), 1);
        for (Eigen::Index i = 0; i < p.rows(); ++i) v(i, 0) = 1.0 / ((c1 - p(i, 0)) * (c2 - p(i, 1)));
        return v;
    };
    const auto set = hyperbolic_cross(2, 60);
    const auto sp = testutil::euclidean(1);
    const auto test = uniform_points(5000, 2, 999);
    const Eigen::MatrixXd ft = f(test);
    const std::vector<int> ms{50, 100, 200, 400, 800};
    const int trials = 5;
    std::vector<double> err;
    for (int m : ms) {
        double mean = 0;
        for (int t = 0; t < trials; ++t) {
            const auto pts = uniform_points(m, 2, static_cast<std::uint64_t>(t));
            const auto r = recover_coefficients(pts, f(pts), sp, set, LambdaChoice::automatic());
            mean += (evaluate_expansion(set, r.solution.coeffs, test) - ft).norm() / ft.norm() / trials;
        }
        err.push_back(mean);
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < err.size(); ++i) decreasing = decreasing && err[i] < err[i - 1];
    // least squares of log(err) on m^{1/4}
    const auto n = static_cast<double>(ms.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const double x = std::pow(ms[i], 0.25), y = std::log(err[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double r2 = std::pow(n * sxy - sx * sy, 2) / ((n * sxx - sx * sx) * (n * syy - sy * sy));
    std::string errs;
    for (double e : err) errs += fmt("%.2e ", e);
    return {decreasing && slope < 0 && r2 >= 0.9,
            fmt("rho=(%.3f, %.3f), mean rel. L2 errors [%s] slope %.3f R^2 %.4f", theory::bernstein_parameter(c1),
                theory::bernstein_parameter(c2), errs.c_str(), slope, r2)};
}

Outcome constant_fidelity()
{
    const auto c = theory::rip_to_rnsp_constants(0.25);
    const double drho = std::abs(c.rho - std::sqrt(2.0) / 3), dtau = std::abs(c.tau - 2 * std::sqrt(5.0) / 3);
    double worst = 0;
    for (double s : {1.0, 2.0, 9.0, 100.0, 1e4, 1e6})
        worst = std::max(worst, std::abs(theory::rnsp_perturbation(c, s, theory::binding_perturbation(s)).rho - 0.75));
    return {drho <= 1e-15 && dtau <= 1e-15 && worst <= 1e-12,
            fmt("|rho - sqrt2/3| = %.1e, |tau - 2sqrt5/3| = %.1e, max |rho' - 3/4| = %.1e over s in [1, 1e6]", drho, dtau,
                worst)};
}

Outcome gradient_check()
{
    using namespace hvapprox::dnn;
    double worst = 0;
    bool ok = true;
    for (auto act : {Activation::Tanh, Activation::Relu, Activation::LeakyRelu})
        for (auto loss : {Loss::Mse, Loss::Mvnse}) {
            const auto r = testutil::gradient_check(act, loss, 200, 99);
            worst = std::max(worst, r.worst);
            ok = ok && r.probes == 200 && r.worst <= 1e-5;
        }
    return {ok, fmt("6 activation/loss pairs x 200 probes, worst relative error %.2e", worst)};
}

Outcome dnn_training()
{
    using namespace hvapprox::dnn;
    auto mesh = std::make_shared<const pde::StructuredMesh>(pde::build_mesh(33));
    const auto coef = pde::ParametricCoefficient::affine();
    const auto forcing = pde::Forcing::constant(pde::kDefaultForcing);
    const auto ds = pde::generate_dataset(coef, forcing, mesh, 400, 0);
    pde::DiffusionSolver solver(mesh, coef, forcing);
    const auto grid = quadrature::smolyak_grid(2, quadrature::smolyak_level_for(2, 1000));
    const Eigen::MatrixXd ref = pde::solve_at(solver, grid.points);
    const auto l2 = pde::l2_space(*mesh);
    const auto h10 = pde::h10_space(*mesh);
    const GramMatrix<double> g = h10->gram();

    const auto x = samples_as_columns<double>(ds.points), c = samples_as_columns<double>(ds.values);
    const auto m0 = Mlp<double>::initialized(architecture(2, 5, 50, 1089), Activation::Tanh, 0);
    TrainConfig cfg;
    cfg.epochs = 50000;
    const auto mse = train(m0, x, c, cfg);
    cfg.loss = Loss::Mvnse;
    const auto mvnse = train(m0, x, c, cfg, &g);
    const double e_mse = quadrature::bochner_error(ref, predict(mse.model, grid.points), grid, *l2).relative();
    const double e_mvnse = quadrature::bochner_error(ref, predict(mvnse.model, grid.points), grid, *l2).relative();
    return {e_mse <= 1e-2 && e_mvnse >= e_mse,
            fmt("relative L2 test error on %ld Smolyak points: MSE %.3e (%d epochs), MVNSE %.3e (%d epochs)",
                static_cast<long>(grid.size()), e_mse, mse.history.epochs_run, e_mvnse, mvnse.history.epochs_run)};
}

Outcome loss_equivalence()
{
    using namespace hvapprox::dnn;
    const auto mesh = pde::build_mesh(17);
    const auto h10 = pde::h10_space(mesh);
    const auto l2 = pde::l2_space(mesh);
    const auto k = mesh.num_vertices();
    const auto model = Mlp<double>::initialized(architecture(3, 2, 10, static_cast<int>(k)), Activation::Tanh, 5);
    std::mt19937_64 rng(6);
    double worst = 0;
    for (int batch = 0; batch < 10; ++batch) {
        const auto pts = uniform_points(16, 3, rng());
        const auto x = samples_as_columns<double>(pts);
        Eigen::MatrixXd c = testutil::gaussian(k, 16, rng);
        Eigen::MatrixXd r = model.forward(x) - c;
        for (Eigen::Index v = 0; v < k; ++v)
            if (mesh.on_boundary[v]) {
                c.row(v) = model.forward(x).row(v);
                r.row(v).setZero();
            }
        // V-norms of the residual functions, integrated element by element.
        double h1 = 0, ltwo = 0;
        for (Eigen::Index i = 0; i < r.cols(); ++i) {
            for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
                const auto gr = pde::barycentric_gradients(mesh, t);
                const auto& tri = mesh.triangles[t];
                Eigen::Vector2d grad = Eigen::Vector2d::Zero();
                for (int a = 0; a < 3; ++a) grad += r(tri[a], i) * gr.row(a).transpose();
                h1 += grad.squaredNorm() * pde::signed_area(mesh, t);
            }
            ltwo += std::pow(pde::l2_error(mesh, r.col(i), [](double, double) { return 0.0; }), 2);
        }
        h1 /= 16;
        ltwo /= 16;
        const double a1 = loss_mvnse(model, x, c, GramMatrix<double>(h10->gram()));
        const double a2 = loss_mvnse(model, x, c, GramMatrix<double>(l2->gram()));
        worst = std::max({worst, std::abs(std::sqrt(a1) - std::sqrt(h1)) / std::sqrt(h1),
                          std::abs(std::sqrt(a2) - std::sqrt(ltwo)) / std::sqrt(ltwo)});
    }
    return {worst <= 1e-12, fmt("max relative difference %.2e over 10 batches, H1_0 and L2", worst)};
}

Outcome quadrature_exactness()
{
    using namespace hvapprox::quadrature;
    auto moment = [](int a) { return a % 2 ? 0.0 : 1.0 / (a + 1); };
    double worst_exact = 0;
    int monomials = 0;
    for (int level = 0; level <= 3; ++level) {
        const auto g = smolyak_grid(2, level);
        for (int a = 0; a <= 12; ++a)
            for (int b = 0; b <= 12; ++b) {
                bool covered = false;
                for (int l1 = 0; l1 <= level; ++l1)
                    covered = covered || (a <= cc_exactness_degree(l1) && b <= cc_exactness_degree(level - l1));
                if (!covered) continue;
                ++monomials;
                const double q = integrate(g, [a, b](std::span<const double> y) { return std::pow(y[0], a) * std::pow(y[1], b); });
                worst_exact = std::max(worst_exact, std::abs(q - moment(a) * moment(b)));
            }
    }
    double worst_sum = 0;
    for (int d = 1; d <= 30; ++d)
        for (int l = 0; l <= 4; ++l) worst_sum = std::max(worst_sum, std::abs(smolyak_grid(d, l).weight_sum() - 1.0));
    return {worst_exact <= 1e-12 && worst_sum <= 1e-12,
            fmt("%d exactness-set monomials, max error %.2e; max |sum w - 1| = %.2e for d <= 30, level <= 4", monomials,
                worst_exact, worst_sum)};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {1, "mesh fidelity", 1, mesh_fidelity},
        {2, "index-set fidelity", 10, index_set_fidelity},
        {3, "Legendre orthonormality", 1, legendre_orthonormality},
        {4, "FEM order of accuracy", 5, fem_order},
        {5, "sparse recovery oracle", 120, sparse_recovery},
        {6, "recovery-bound audit", 300, recovery_bound_audit},
        {7, "exponential-rate property", 600, exponential_rate},
        {8, "constant fidelity", 1, constant_fidelity},
        {9, "DNN gradient check", 60, gradient_check},
        {10, "DNN desk-scale training", 1800, dnn_training},
        {11, "loss-equivalence identity", 1, loss_equivalence},
        {12, "quadrature exactness", 10, quadrature_exactness},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = sec < c.budget_seconds;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("%s  %2d %-28s %s [%.2f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), sec,
                    c.budget_seconds, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
