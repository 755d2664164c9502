#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "hvapprox/study.hpp"

using namespace hvapprox;
using namespace hvapprox::study;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config()
{
    ExperimentConfig c = parse_config(R"({
        "problem": {"coefficient": "affine", "mesh_n": 9},
        "methods": ["all"],
        "scs": {"order": 7},
        "dnn": {"hidden_layers": 1, "width": 8, "train": {"epochs": 40}},
        "m_schedule": [15, 30],
        "trials": 2,
        "testing": {"kind": "smolyak", "level": 3}
    })");
    return c;
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("hvapprox_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// runs.csv with the wall-time column dropped.
std::vector<std::vector<std::string>> timeless_rows(const fs::path& p)
{
    auto t = read_csv(p);
    const auto cs = t.column("seconds");
    for (auto& r : t.rows) r.erase(r.begin() + static_cast<long>(cs));
    return t.rows;
}

} // namespace

TEST(Config, DefaultsAndRoundTrip)
{
    const auto c = parse_config("{}");
    EXPECT_EQ(c.problem.coefficient, "logkl");
    EXPECT_EQ(c.problem.d, 30);
    EXPECT_EQ(c.m_schedule.back(), 675);
    EXPECT_EQ(c.dnn.train.seed, 0u);
    EXPECT_FALSE(c.scs.srlasso_lambda.has_value());

    auto t = tiny_config();
    t.scs.srlasso_lambda = 0.25;
    t.dnn.train.loss = dnn::Loss::Mvnse;
    const std::string once = serialize_config(t);
    const auto back = parse_config(once);
    EXPECT_EQ(serialize_config(back), once);
    EXPECT_EQ(back.methods, (std::vector<std::string>{"scs", "srlasso", "dnn"}));
    EXPECT_EQ(*back.scs.srlasso_lambda, 0.25);
    EXPECT_EQ(back.problem.d, 2);
}

TEST(Config, Rejections)
{
    EXPECT_THROW(parse_config(R"({"bogus": 1})"), config_error);
    EXPECT_THROW(parse_config(R"({"m_schedule": [10, 10]})"), config_error);
    EXPECT_THROW(parse_config(R"({"m_schedule": [20, 10]})"), config_error);
    EXPECT_THROW(parse_config(R"({"trials": 0})"), config_error);
    EXPECT_THROW(parse_config(R"({"methods": ["svm"]})"), config_error);
    EXPECT_THROW(parse_config(R"({"scs": {"srlasso_lambda": "sometimes"}})"), config_error);
    EXPECT_THROW(parse_config(R"({"problem": {"coefficient": "affine", "d": 3}})"), config_error);
    EXPECT_THROW(parse_config("{not json"), config_error);
    EXPECT_THROW(load_config("/nonexistent/config.json"), config_error);
}

TEST(Problem, DefaultIndexSetAndTestGrid)
{
    EXPECT_EQ(scs_index_set(30, 6).size(), 1486u);
    TestingConfig t;
    EXPECT_EQ(make_test_grid(t, 30).size(), 1861);
    t.kind = "monte_carlo";
    t.count = 123;
    EXPECT_EQ(make_test_grid(t, 4).size(), 123);
    ProblemConfig p;
    p.mesh_n = 5;
    const auto prob = make_problem(p);
    EXPECT_EQ(prob.dim(), 30);
    EXPECT_EQ(prob.space("L2")->label(), "L2");
    EXPECT_EQ(prob.space("H1_0")->label(), "H1_0");
}

TEST(DatasetFile, RoundTripAndCorruption)
{
    PointSet pts = uniform_points(6, 3, 1);
    Eigen::MatrixXd vals = Eigen::MatrixXd::Random(6, 4);
    std::stringstream ss;
    write_dataset(ss, pts, vals, {{"seed", 1}});
    const auto back = read_dataset(ss);
    EXPECT_EQ(back.points, pts);
    EXPECT_EQ(back.values, vals);
    EXPECT_EQ(back.header["seed"], 1);

    std::stringstream cut(ss.str().substr(0, 40));
    EXPECT_THROW(read_dataset(cut), io::format_error);
}

TEST(Fit, ScsAndDnnOnAffineProblem)
{
    auto cfg = tiny_config();
    const auto prob = make_problem(cfg.problem);
    const auto ds = pde::generate_dataset(prob.coefficient, prob.forcing, prob.mesh, 40, 0);
    const auto grid = make_test_grid(cfg.testing, 2);
    pde::DiffusionSolver solver(prob.mesh, prob.coefficient, prob.forcing);
    const Eigen::MatrixXd ref = pde::solve_at(solver, grid.points);

    const auto scs = fit_scs(ds.points, ds.values, prob, cfg.scs, RecoveryMethod::Lasso);
    const auto e1 = test_errors(ref, scs.predict(grid.points), grid, prob);
    EXPECT_LT(e1.l2, 1e-2);
    EXPECT_LT(e1.h10, 1e-2);
    const auto sr = fit_scs(ds.points, ds.values, prob, cfg.scs, RecoveryMethod::SrLasso);
    EXPECT_LT(test_errors(ref, sr.predict(grid.points), grid, prob).l2, 5e-2);

    dnn::TrainHistory h;
    const auto net = fit_dnn(ds.points, ds.values, prob, cfg.dnn, &h);
    EXPECT_EQ(h.epochs_run, 40);
    const auto e3 = test_errors(ref, net.predict(grid.points), grid, prob);
    EXPECT_TRUE(std::isfinite(e3.l2));
    EXPECT_EQ(test_errors(ref, ref, grid, prob).l2, 0.0);
}

TEST(Study, OutputsAggregatesAndDeterminism)
{
    const auto cfg = tiny_config();
    const auto out = fresh_dir("study");
    const auto rep = run_convergence_study(cfg, out, 1);
    EXPECT_TRUE(rep.all_ok);
    EXPECT_EQ(rep.runs.size(), 3u * 2u * 2u);
    for (const char* f : {"config.json", "runs.csv", "aggregate.csv"}) EXPECT_TRUE(fs::exists(out / f)) << f;
    for (const char* m : {"scs", "srlasso", "dnn"})
        for (int t = 0; t < 2; ++t) EXPECT_TRUE(fs::exists(out / m / ("trial_" + std::to_string(t)) / "runs.csv"));
    EXPECT_EQ(serialize_config(load_config((out / "config.json").string())), serialize_config(cfg));

    const auto runs = read_csv(out / "runs.csv");
    EXPECT_EQ(runs.columns.size(), 10u);
    for (const char* c : {"trial", "m", "method", "seed"}) EXPECT_NO_THROW(runs.column(c));
    for (const auto& r : runs.rows) EXPECT_EQ(r[runs.column("seed")], r[runs.column("trial")]);

    std::map<std::pair<std::string, long>, std::vector<double>> groups;
    for (const auto& r : runs.rows)
        groups[{r[runs.column("method")], std::stol(r[runs.column("m")])}].push_back(std::stod(r[runs.column("error_l2")]));
    const auto agg = read_csv(out / "aggregate.csv");
    ASSERT_EQ(agg.rows.size(), 6u);
    for (const auto& r : agg.rows) {
        EXPECT_EQ(r[agg.column("trial")], "mean");
        const auto& v = groups[{r[agg.column("method")], std::stol(r[agg.column("m")])}];
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        EXPECT_NEAR(std::stod(r[agg.column("error_l2")]), mean, 1e-12 * std::max(1.0, mean));
        EXPECT_EQ(r[agg.column("trials_ok")], "2");
    }

    const auto out2 = fresh_dir("study2");
    run_convergence_study(cfg, out2, 2);
    EXPECT_EQ(timeless_rows(out / "runs.csv"), timeless_rows(out2 / "runs.csv"));
    fs::remove_all(out2);

    const auto plots = fresh_dir("plots");
    const auto files = emit_plots(out / "aggregate.csv", plots);
    ASSERT_EQ(files.size(), 2u);
    const auto data = read_csv(files[0]);
    EXPECT_EQ(data.rows.size(), 6u);
    const std::string script = slurp(files[1]);
    EXPECT_NE(script.find("error_h10"), std::string::npos);
    EXPECT_NE(script.find("seconds"), std::string::npos);
    fs::remove_all(plots);
    fs::remove_all(out);
}

TEST(Plots, EmptyOrIncompleteAggregate)
{
    const auto dir = fresh_dir("plots_empty");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "aggregate.csv");
        f << kAggregateCsvHeader << '\n';
    }
    {
        std::ofstream f(dir / "broken.csv");
        f << "m,method\n10,scs\n";
    }
    EXPECT_THROW(emit_plots(dir / "aggregate.csv", dir / "out"), io::format_error);
    EXPECT_THROW(emit_plots(dir / "broken.csv", dir / "out"), io::format_error);
    EXPECT_FALSE(fs::exists(dir / "out"));
    fs::remove_all(dir);
}
