// Approximates the parametric solution map of the affine diffusion problem
// in d=2 from m random samples, once with SR-LASSO on a hyperbolic cross
// and once with a small tanh network, and reports Bochner test errors.
#include <cstdlib>
#include <iostream>

#include "hvapprox/dnn.hpp"
#include "hvapprox/multiindex.hpp"
#include "hvapprox/pde.hpp"
#include "hvapprox/quadrature.hpp"
#include "hvapprox/srlasso.hpp"

using namespace hvapprox;

int main(int argc, char** argv)
{
    const int m = argc > 1 ? std::atoi(argv[1]) : 100;
    const int epochs = argc > 2 ? std::atoi(argv[2]) : 2000;

    auto mesh = std::make_shared<const pde::StructuredMesh>(pde::build_mesh(17));
    const auto coef = pde::ParametricCoefficient::affine();
    const auto forcing = pde::Forcing::constant(pde::kDefaultForcing);
    const auto ds = pde::generate_dataset(coef, forcing, mesh, m, 0);

    pde::DiffusionSolver solver(mesh, coef, forcing);
    const auto grid = quadrature::smolyak_grid(2, 6);
    const Eigen::MatrixXd ref = pde::solve_at(solver, grid.points);
    const auto h10 = pde::h10_space(*mesh);
    const auto l2 = pde::l2_space(*mesh);

    const auto set = hyperbolic_cross(2, 20);
    const auto fit = recover_coefficients(ds.points, ds.values, h10, set, LambdaChoice::automatic());
    const Eigen::MatrixXd u_scs = evaluate_expansion(set, fit.solution.coeffs, grid.points);
    std::cout << "samples " << m << ", test points " << grid.size() << "\n";
    std::cout << "srlasso  N=" << set.size() << "  rel. L2 error "
              << quadrature::bochner_error(ref, u_scs, grid, *l2).relative() << "  rel. H1_0 error "
              << quadrature::bochner_error(ref, u_scs, grid, *h10).relative() << "\n";

    dnn::TrainConfig cfg;
    cfg.epochs = epochs;
    const auto model = dnn::Mlp<double>::initialized(
        dnn::architecture(2, 3, 30, static_cast<int>(mesh->num_vertices())), dnn::Activation::Tanh, 0);
    const auto trained = dnn::train(model, dnn::samples_as_columns<double>(ds.points),
                                    dnn::samples_as_columns<double>(ds.values), cfg);
    const Eigen::MatrixXd u_dnn = dnn::predict(trained.model, grid.points);
    std::cout << "dnn      3x30 tanh, " << trained.history.epochs_run << " epochs  rel. L2 error "
              << quadrature::bochner_error(ref, u_dnn, grid, *l2).relative() << "  rel. H1_0 error "
              << quadrature::bochner_error(ref, u_dnn, grid, *h10).relative() << "\n";
}
