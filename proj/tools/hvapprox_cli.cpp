#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hvapprox/dnn.hpp"
#include "hvapprox/hilbert.hpp"
#include "hvapprox/multiindex.hpp"
#include "hvapprox/pde.hpp"
#include "hvapprox/quadrature.hpp"
#include "hvapprox/srlasso.hpp"
#include "hvapprox/study.hpp"
#include "hvapprox/theory.hpp"

namespace fs = std::filesystem;
using namespace hvapprox;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::string out;
    int threads = 1;
    std::optional<std::uint64_t> seed;
};

study::ExperimentConfig load(const Common& c)
{
    study::ExperimentConfig cfg = c.config.empty() ? study::ExperimentConfig{} : study::load_config(c.config);
    if (c.seed) cfg.seed_base = *c.seed;
    if (!c.out.empty()) cfg.output = c.out;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* app, Common& c, bool out_required)
{
    app->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
    auto* o = app->add_option("--out", c.out, "output path");
    if (out_required) o->required();
    app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--seed", c.seed, "seed (overrides seed_base)");
}

study::StoredDataset read_data(const std::string& path)
{
    auto in = io::open_in(path);
    return study::read_dataset(in);
}

int gen_data(const Common& c, long m, bool grid)
{
    const auto cfg = load(c);
    const auto prob = study::make_problem(cfg.problem);
    auto out = io::open_out(c.out);
    if (grid) {
        const auto g = study::make_test_grid(cfg.testing, prob.dim());
        pde::DiffusionSolver solver(prob.mesh, prob.coefficient, prob.forcing);
        study::write_dataset(out, g.points, pde::solve_at(solver, g.points),
                             json{{"kind", "test_grid"}, {"level", g.level}, {"coefficient", prob.coefficient.descriptor()},
                                  {"forcing", prob.forcing.descriptor}});
        const fs::path wpath = fs::path(c.out).concat(".weights");
        auto wout = io::open_out(wpath.string());
        study::write_grid(wout, g);
        std::cout << "wrote " << g.size() << " test points to " << c.out << " and weights to " << wpath.string() << "\n";
    } else {
        const auto ds = pde::generate_dataset(prob.coefficient, prob.forcing, prob.mesh, m, cfg.seed_base);
        study::write_dataset(out, ds);
        std::cout << "wrote " << ds.size() << " samples (seed " << ds.seed << ") to " << c.out << "\n";
    }
    return 0;
}

int run_scs(const Common& c, const std::string& data_path, long m, const std::string& method)
{
    const auto cfg = load(c);
    const auto prob = study::make_problem(cfg.problem);
    auto data = read_data(data_path);
    if (m <= 0) m = data.points.rows();
    if (m > data.points.rows()) throw std::invalid_argument("run-scs: dataset has fewer than m samples");
    RecoveryResult res;
    const auto s = study::fit_scs(data.points.topRows(m), data.values.topRows(m), prob, cfg.scs,
                                  method == "srlasso" ? RecoveryMethod::SrLasso : RecoveryMethod::Lasso, &res);
    fs::create_directories(c.out);
    {
        std::ofstream f(fs::path(c.out) / "index_set.txt");
        write_index_set(f, study::scs_index_set(prob.dim(), cfg.scs.order));
    }
    {
        auto f = io::open_out((fs::path(c.out) / "coefficients.bin").string());
        write_hilbert_vector(f, res.solution);
    }
    const json summary{{"method", method},       {"m", m},
                       {"N", res.solution.size()}, {"iterations", res.iterations},
                       {"converged", res.converged}, {"objective", res.objective},
                       {"residual", res.residual}, {"seconds", s.seconds},
                       {"space", cfg.scs.space}};
    std::ofstream(fs::path(c.out) / "summary.json") << summary.dump(2) << '\n';
    std::cout << summary.dump(2) << "\n";
    if (!res.converged) std::cerr << "warning: solver stopped at max_iters, best iterate written\n";
    return 0;
}

int train_dnn(const Common& c, const std::string& data_path, long m)
{
    const auto cfg = load(c);
    const auto prob = study::make_problem(cfg.problem);
    auto data = read_data(data_path);
    if (m <= 0) m = data.points.rows();
    if (m > data.points.rows()) throw std::invalid_argument("train-dnn: dataset has fewer than m samples");
    dnn::TrainHistory hist;
    dnn::Mlp<double> model;
    study::fit_dnn(data.points.topRows(m), data.values.topRows(m), prob, cfg.dnn, &hist, &model);
    fs::create_directories(c.out);
    {
        auto f = io::open_out((fs::path(c.out) / "model.bin").string());
        dnn::write_model(f, model, json{{"seed", 0}, {"train", cfg.dnn.train}, {"m", m}});
    }
    std::ofstream h(fs::path(c.out) / "history.csv");
    h << "epoch,loss,checkpoint\n" << std::setprecision(17);
    std::size_t k = 0;
    for (std::size_t e = 0; e < hist.epoch_loss.size(); ++e) {
        const bool ck = k < hist.checkpoints.size() && hist.checkpoints[k].epoch == static_cast<int>(e + 1);
        if (ck) ++k;
        h << e + 1 << ',' << hist.epoch_loss[e] << ',' << (ck ? 1 : 0) << '\n';
    }
    const json summary{{"epochs", hist.epochs_run},          {"final_loss", hist.final_loss},
                       {"checkpoints", hist.checkpoints.size()}, {"reached_tolerance", hist.reached_tolerance},
                       {"clipped_steps", hist.clipped_steps},   {"skipped_steps", hist.skipped_steps},
                       {"seconds", hist.seconds}};
    if (hist.clipped_steps || hist.skipped_steps)
        std::cerr << "warning: " << hist.clipped_steps << " clipped and " << hist.skipped_steps << " skipped steps\n";
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int test_error(const Common& c, const std::string& model_path, const std::string& coeff_dir)
{
    const auto cfg = load(c);
    const auto prob = study::make_problem(cfg.problem);
    const auto grid = study::make_test_grid(cfg.testing, prob.dim());
    pde::DiffusionSolver solver(prob.mesh, prob.coefficient, prob.forcing);
    const Eigen::MatrixXd reference = pde::solve_at(solver, grid.points);
    Eigen::MatrixXd approx;
    if (!model_path.empty()) {
        auto in = io::open_in(model_path);
        approx = dnn::predict(dnn::read_model(in).model, grid.points);
    } else {
        std::ifstream sf(fs::path(coeff_dir) / "index_set.txt");
        if (!sf) throw std::invalid_argument("test-error: missing index_set.txt in " + coeff_dir);
        const auto set = read_index_set(sf);
        auto cf = io::open_in((fs::path(coeff_dir) / "coefficients.bin").string());
        const auto label = io::read_matrix(cf);
        approx = evaluate_expansion(set, label.values, grid.points);
    }
    const auto e = study::test_errors(reference, approx, grid, prob);
    const json out{{"test_points", grid.size()}, {"relative_error_l2", e.l2}, {"relative_error_h10", e.h10},
                   {"clamped", e.clamped}};
    if (e.clamped) std::cerr << "warning: negative quadrature sum clamped to zero\n";
    std::cout << out.dump(2) << "\n";
    return 0;
}

int bounds(double m, int d, double eps, double gamma, double k, theory::UniversalConstants uc)
{
    const auto b = theory::theorem_bounds(m, d, eps, gamma, k, uc);
    const json out{{"note", "all bounds hold up to the universal constants c0, c1, c2"},
                   {"inputs", {{"m", m}, {"d", d}, {"eps", eps}, {"gamma", gamma}, {"K", k},
                               {"c0", uc.c0}, {"c1", uc.c1}, {"c2", uc.c2}}},
                   {"log_factor", b.log_factor},
                   {"m_tilde", b.m_tilde},
                   {"s", b.s},
                   {"Delta", b.delta},
                   {"depth_bound", b.depth},
                   {"size_bound", b.size},
                   {"param_bound", b.params},
                   {"E1", b.e1},
                   {"sample_regime", b.sample_regime},
                   {"lambda_rule", lambda_rule(b.s)},
                   {"delta_rule_N1486", theory::delta_rule(1486, b.s, gamma, d)}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hilbert-valued sparse polynomial and neural network surrogates for parametric PDEs"};
    app.require_subcommand(1);

    Common gen_c;
    long gen_m = 100;
    bool gen_grid = false;
    auto* gen = app.add_subcommand("gen-data", "solve the PDE at uniform samples (or the test grid) and store a dataset");
    add_common(gen, gen_c, true);
    gen->add_option("--m", gen_m, "number of samples")->check(CLI::PositiveNumber);
    gen->add_flag("--grid", gen_grid, "use the configured test grid instead of random samples");

    Common scs_c;
    std::string scs_data, scs_method = "scs";
    long scs_m = 0;
    auto* scs = app.add_subcommand("run-scs", "recover Hilbert-valued Legendre coefficients from a dataset");
    add_common(scs, scs_c, true);
    scs->add_option("--data", scs_data, "dataset file")->required()->check(CLI::ExistingFile);
    scs->add_option("--m", scs_m, "use the first m samples (default: all)");
    scs->add_option("--method", scs_method, "scs (LASSO) or srlasso")->check(CLI::IsMember({"scs", "srlasso"}));

    Common dnn_c;
    std::string dnn_data;
    long dnn_m = 0;
    auto* trn = app.add_subcommand("train-dnn", "train a fully connected network on a dataset");
    add_common(trn, dnn_c, true);
    trn->add_option("--data", dnn_data, "dataset file")->required()->check(CLI::ExistingFile);
    trn->add_option("--m", dnn_m, "use the first m samples (default: all)");

    Common te_c;
    std::string te_model, te_coeffs;
    auto* te = app.add_subcommand("test-error", "relative Bochner test errors of a trained model or coefficient set");
    add_common(te, te_c, false);
    auto* om = te->add_option("--model", te_model, "model file from train-dnn")->check(CLI::ExistingFile);
    auto* oc = te->add_option("--coeffs", te_coeffs, "output directory of run-scs")->check(CLI::ExistingDirectory);
    om->excludes(oc);
    te->callback([&] {
        if (te_model.empty() && te_coeffs.empty()) throw CLI::ValidationError("test-error", "give --model or --coeffs");
    });

    Common b_c;
    double b_m = 1000, b_eps = 0.1, b_gamma = 1.0, b_k = 1089;
    int b_d = 2;
    theory::UniversalConstants uc;
    auto* bnd = app.add_subcommand("bounds", "print the sample-complexity and network-size bounds as JSON");
    add_common(bnd, b_c, false);
    bnd->add_option("--m", b_m, "number of samples")->check(CLI::PositiveNumber);
    bnd->add_option("--d", b_d, "parameter dimension")->check(CLI::PositiveNumber);
    bnd->add_option("--eps", b_eps, "failure probability")->check(CLI::Range(1e-300, 1.0));
    bnd->add_option("--gamma", b_gamma, "anisotropy rate gamma")->check(CLI::NonNegativeNumber);
    bnd->add_option("--K", b_k, "spatial dimension K")->check(CLI::PositiveNumber);
    bnd->add_option("--c0", uc.c0, "universal constant c0")->check(CLI::PositiveNumber);
    bnd->add_option("--c1", uc.c1, "universal constant c1")->check(CLI::PositiveNumber);
    bnd->add_option("--c2", uc.c2, "universal constant c2")->check(CLI::PositiveNumber);

    Common st_c;
    auto* st = app.add_subcommand("study", "run a convergence study (trials x m schedule x methods)");
    add_common(st, st_c, false);

    Common pl_c;
    std::string pl_agg;
    auto* pl = app.add_subcommand("plots", "write a plotting script and its data from an aggregate CSV");
    add_common(pl, pl_c, true);
    pl->add_option("--aggregate", pl_agg, "aggregate.csv from a study")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return gen_data(gen_c, gen_m, gen_grid);
        if (*scs) return run_scs(scs_c, scs_data, scs_m, scs_method);
        if (*trn) return train_dnn(dnn_c, dnn_data, dnn_m);
        if (*te) return test_error(te_c, te_model, te_coeffs);
        if (*bnd) return bounds(b_m, b_d, b_eps, b_gamma, b_k, uc);
        if (*st) {
            const auto cfg = load(st_c);
            const auto rep = study::run_convergence_study(cfg, cfg.output, st_c.threads, &std::cout);
            std::cout << "wrote " << rep.runs.size() << " runs to " << cfg.output << (rep.all_ok ? "" : " (some cells failed)")
                      << "\n";
            return rep.all_ok ? 0 : 1;
        }
        if (*pl) {
            for (const auto& p : study::emit_plots(pl_agg, pl_c.out)) std::cout << "wrote " << p.string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
