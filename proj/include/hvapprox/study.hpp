#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "hvapprox/dnn.hpp"
#include "hvapprox/hilbert.hpp"
#include "hvapprox/io.hpp"
#include "hvapprox/multiindex.hpp"
#include "hvapprox/pde.hpp"
#include "hvapprox/polybasis.hpp"
#include "hvapprox/quadrature.hpp"
#include "hvapprox/srlasso.hpp"

namespace hvapprox::study {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kCsvVersion = 1;

class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ProblemConfig {
    std::string coefficient = "logkl";  // "logkl" or "affine"
    int d = 30;
    int mesh_n = 33;
    double forcing = pde::kDefaultForcing;
};

struct ScsConfig {
    int order = 6;                  // hyperbolic cross order p; products (nu_k + 1) <= p + 1
    std::string space = "H1_0";     // inner product used for recovery: "H1_0" or "L2"
    double lasso_lambda = 1e-5;     // method "scs"
    std::optional<double> srlasso_lambda;  // method "srlasso"; empty selects the sparsity-based rule
    int max_iters = 200000;
};

struct DnnConfig {
    int hidden_layers = 5;
    int width = 50;
    std::string activation = "tanh";
    std::string precision = "double";  // "double" or "single"
    dnn::TrainConfig train;
};

struct TestingConfig {
    std::string kind = "smolyak";  // "smolyak" or "monte_carlo"
    int level = 2;
    long count = 2000;
    std::uint64_t seed = 1'000'000;
};

struct ExperimentConfig {
    ProblemConfig problem;
    std::vector<std::string> methods{"scs", "dnn"};
    ScsConfig scs;
    DnnConfig dnn;
    std::vector<long> m_schedule{50, 100, 200, 400, 675};
    int trials = 10;
    std::uint64_t seed_base = 0;  // trial t uses seed seed_base + t
    TestingConfig testing;
    std::string output = "study_output";

    void validate() const
    {
        if (problem.coefficient != "logkl" && problem.coefficient != "affine")
            throw config_error("problem.coefficient must be 'logkl' or 'affine'");
        if (problem.coefficient == "affine" && problem.d != 2) throw config_error("the affine coefficient has d = 2");
        if (problem.d < 1) throw config_error("problem.d must be >= 1");
        if (problem.mesh_n < 3) throw config_error("problem.mesh_n must be >= 3");
        if (methods.empty()) throw config_error("methods must be nonempty");
        for (const auto& m : methods)
            if (m != "scs" && m != "srlasso" && m != "dnn") throw config_error("unknown method '" + m + "'");
        if (m_schedule.empty()) throw config_error("m_schedule must be nonempty");
        for (std::size_t i = 0; i < m_schedule.size(); ++i) {
            if (m_schedule[i] < 1) throw config_error("m_schedule entries must be >= 1");
            if (i && m_schedule[i] <= m_schedule[i - 1]) throw config_error("m_schedule must be strictly increasing");
        }
        if (trials < 1) throw config_error("trials must be >= 1");
        if (scs.order < 0) throw config_error("scs.order must be >= 0");
        if (scs.space != "H1_0" && scs.space != "L2") throw config_error("scs.space must be 'H1_0' or 'L2'");
        if (!(scs.lasso_lambda > 0.0)) throw config_error("scs.lasso_lambda must be positive");
        if (scs.srlasso_lambda && !(*scs.srlasso_lambda > 0.0)) throw config_error("scs.srlasso_lambda must be positive");
        if (dnn.hidden_layers < 0 || dnn.width < 1) throw config_error("dnn architecture invalid");
        dnn::activation_from_string(dnn.activation);
        if (dnn.precision != "double" && dnn.precision != "single") throw config_error("dnn.precision must be 'double' or 'single'");
        dnn.train.validate();
        if (testing.kind != "smolyak" && testing.kind != "monte_carlo")
            throw config_error("testing.kind must be 'smolyak' or 'monte_carlo'");
        if (testing.level < 0 || testing.count < 1) throw config_error("testing level/count invalid");
    }
};

inline void to_json(json& j, const ExperimentConfig& c)
{
    j = json{{"problem", {{"coefficient", c.problem.coefficient}, {"d", c.problem.d}, {"mesh_n", c.problem.mesh_n},
                          {"forcing", c.problem.forcing}}},
             {"methods", c.methods},
             {"scs", {{"order", c.scs.order}, {"space", c.scs.space}, {"lasso_lambda", c.scs.lasso_lambda},
                      {"srlasso_lambda", c.scs.srlasso_lambda ? json(*c.scs.srlasso_lambda) : json("auto")},
                      {"max_iters", c.scs.max_iters}}},
             {"dnn", {{"hidden_layers", c.dnn.hidden_layers}, {"width", c.dnn.width}, {"activation", c.dnn.activation},
                      {"precision", c.dnn.precision}, {"train", c.dnn.train}}},
             {"m_schedule", c.m_schedule},
             {"trials", c.trials},
             {"seed_base", c.seed_base},
             {"testing", {{"kind", c.testing.kind}, {"level", c.testing.level}, {"count", c.testing.count},
                          {"seed", c.testing.seed}}},
             {"output", c.output}};
}

inline void from_json(const json& j, ExperimentConfig& c)
{
    static const std::vector<std::string> known{"problem", "methods", "scs", "dnn", "m_schedule", "trials",
                                                "seed_base", "testing", "output"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw config_error("unknown config field '" + it.key() + "'");
    const ExperimentConfig d;
    c = d;
    if (j.contains("problem")) {
        const auto& p = j.at("problem");
        c.problem.coefficient = p.value("coefficient", d.problem.coefficient);
        c.problem.d = p.value("d", c.problem.coefficient == "affine" ? 2 : d.problem.d);
        c.problem.mesh_n = p.value("mesh_n", d.problem.mesh_n);
        c.problem.forcing = p.value("forcing", d.problem.forcing);
    }
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods")) {
            const auto s = m.get<std::string>();
            if (s == "all")
                c.methods.insert(c.methods.end(), {"scs", "srlasso", "dnn"});
            else
                c.methods.push_back(s);
        }
    }
    if (j.contains("scs")) {
        const auto& s = j.at("scs");
        c.scs.order = s.value("order", d.scs.order);
        c.scs.space = s.value("space", d.scs.space);
        c.scs.lasso_lambda = s.value("lasso_lambda", d.scs.lasso_lambda);
        c.scs.max_iters = s.value("max_iters", d.scs.max_iters);
        if (s.contains("srlasso_lambda") && !s.at("srlasso_lambda").is_string())
            c.scs.srlasso_lambda = s.at("srlasso_lambda").get<double>();
        else if (s.contains("srlasso_lambda") && s.at("srlasso_lambda").get<std::string>() != "auto")
            throw config_error("scs.srlasso_lambda must be a number or \"auto\"");
    }
    if (j.contains("dnn")) {
        const auto& n = j.at("dnn");
        c.dnn.hidden_layers = n.value("hidden_layers", d.dnn.hidden_layers);
        c.dnn.width = n.value("width", d.dnn.width);
        c.dnn.activation = n.value("activation", d.dnn.activation);
        c.dnn.precision = n.value("precision", d.dnn.precision);
        if (n.contains("train")) c.dnn.train = n.at("train").get<dnn::TrainConfig>();
    }
    c.m_schedule = j.value("m_schedule", d.m_schedule);
    c.trials = j.value("trials", d.trials);
    c.seed_base = j.value("seed_base", d.seed_base);
    if (j.contains("testing")) {
        const auto& t = j.at("testing");
        c.testing.kind = t.value("kind", d.testing.kind);
        c.testing.level = t.value("level", d.testing.level);
        c.testing.count = t.value("count", d.testing.count);
        c.testing.seed = t.value("seed", d.testing.seed);
    }
    c.output = j.value("output", d.output);
}

inline ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig c;
    try {
        c = json::parse(text).get<ExperimentConfig>();
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline std::string serialize_config(const ExperimentConfig& c) { return json(c).dump(2); }

// ---------------------------------------------------------------------------
// Problem setup
// ---------------------------------------------------------------------------

struct Problem {
    std::shared_ptr<const pde::StructuredMesh> mesh;
    pde::ParametricCoefficient coefficient;
    pde::Forcing forcing;
    SpacePtr l2;
    SpacePtr h10;

    int dim() const { return coefficient.dim(); }
    SpacePtr space(const std::string& name) const { return name == "L2" ? l2 : h10; }
};

inline Problem make_problem(const ProblemConfig& p)
{
    auto mesh = std::make_shared<const pde::StructuredMesh>(pde::build_mesh(p.mesh_n));
    auto coef = p.coefficient == "affine" ? pde::ParametricCoefficient::affine() : pde::ParametricCoefficient::log_kl(p.d);
    return Problem{mesh, coef, pde::Forcing::constant(p.forcing), pde::l2_space(*mesh), pde::h10_space(*mesh)};
}

inline quadrature::SparseGrid make_test_grid(const TestingConfig& t, int d)
{
    return t.kind == "smolyak" ? quadrature::smolyak_grid(d, t.level)
                               : quadrature::monte_carlo_grid(d, t.count, t.seed);
}

/// Index set of the coefficient expansions: hyperbolic cross of order p, i.e. prod (nu_k + 1) <= p + 1.
inline MultiIndexSet scs_index_set(int d, int order) { return hyperbolic_cross(d, order + 1); }

// ---------------------------------------------------------------------------
// Dataset container: magic, JSON header, points block, values block
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 8> kDatasetMagic{'H', 'V', 'D', 'S', 'E', 'T', '0', '1'};

inline void write_dataset(std::ostream& os, const PointSet& points, const Eigen::MatrixXd& values, const json& meta)
{
    if (points.rows() != values.rows()) throw std::invalid_argument("write_dataset: row counts differ");
    json header = meta;
    header["m"] = points.rows();
    header["d"] = points.cols();
    header["K"] = values.cols();
    io::write_magic(os, kDatasetMagic);
    io::write_string(os, header.dump());
    io::write_block(os, points);
    io::write_block(os, values);
    if (!os) throw io::format_error("write_dataset: stream failure");
}

inline void write_dataset(std::ostream& os, const pde::Dataset& ds)
{
    write_dataset(os, ds.points, ds.values,
                  json{{"kind", "samples"}, {"seed", ds.seed}, {"coefficient", ds.coefficient}, {"forcing", ds.forcing}});
}

/// A quadrature grid in the dataset layout, with the weights as a single value column.
inline void write_grid(std::ostream& os, const quadrature::SparseGrid& g)
{
    write_dataset(os, g.points, g.weights, json{{"kind", "quadrature"}, {"level", g.level}});
}

struct StoredDataset {
    PointSet points;
    Eigen::MatrixXd values;
    json header;
};

inline StoredDataset read_dataset(std::istream& is)
{
    io::expect_magic(is, kDatasetMagic);
    StoredDataset s;
    try {
        s.header = json::parse(io::read_string(is));
    } catch (const json::exception& e) {
        throw io::format_error(std::string("read_dataset: bad header: ") + e.what());
    }
    const auto m = s.header.at("m").get<std::uint64_t>();
    const auto d = s.header.at("d").get<std::uint64_t>();
    const auto k = s.header.at("K").get<std::uint64_t>();
    s.points = io::read_block(is, m, d);
    s.values = io::read_block(is, m, k);
    return s;
}

// ---------------------------------------------------------------------------
// Fitting and evaluation
// ---------------------------------------------------------------------------

/// A fitted surrogate that maps parameter points (rows) to nodal vectors (rows).
struct Surrogate {
    std::function<Eigen::MatrixXd(const PointSet&)> predict;
    long iterations = 0;
    bool converged = true;
    double seconds = 0.0;
};

inline Surrogate fit_scs(const PointSet& points, const Eigen::MatrixXd& values, const Problem& prob, const ScsConfig& cfg,
                         RecoveryMethod method, RecoveryResult* out = nullptr)
{
    const auto t0 = std::chrono::steady_clock::now();
    auto set = std::make_shared<const MultiIndexSet>(scs_index_set(prob.dim(), cfg.order));
    SolverConfig sc;
    sc.max_iters = cfg.max_iters;
    const LambdaChoice lam = method == RecoveryMethod::Lasso ? LambdaChoice::fixed(cfg.lasso_lambda)
                                                            : (cfg.srlasso_lambda ? LambdaChoice::fixed(*cfg.srlasso_lambda)
                                                                                  : LambdaChoice::automatic());
    RecoveryResult res = recover_coefficients(points, values, prob.space(cfg.space), *set, lam, sc, method);
    Surrogate s;
    s.iterations = res.iterations;
    s.converged = res.converged;
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto coeffs = std::make_shared<const Eigen::MatrixXd>(res.solution.coeffs);
    s.predict = [set, coeffs](const PointSet& y) { return evaluate_expansion(*set, *coeffs, y); };
    if (out) *out = std::move(res);
    return s;
}

template <typename Scalar>
Surrogate fit_dnn_impl(const PointSet& points, const Eigen::MatrixXd& values, const Problem& prob, const DnnConfig& cfg,
                       dnn::TrainHistory* history, dnn::Mlp<double>* model_out)
{
    const auto widths = dnn::architecture(prob.dim(), cfg.hidden_layers, cfg.width, static_cast<int>(values.cols()));
    auto model = dnn::Mlp<Scalar>::initialized(widths, dnn::activation_from_string(cfg.activation), 0);
    dnn::GramMatrix<Scalar> g;
    if (cfg.train.loss == dnn::Loss::Mvnse) g = prob.h10->gram().template cast<Scalar>();
    auto r = dnn::train(model, dnn::samples_as_columns<Scalar>(points), dnn::samples_as_columns<Scalar>(values), cfg.train,
                        cfg.train.loss == dnn::Loss::Mvnse ? &g : nullptr);
    Surrogate s;
    s.iterations = r.history.epochs_run;
    s.converged = r.history.reached_tolerance;
    s.seconds = r.history.seconds;
    auto m = std::make_shared<const dnn::Mlp<Scalar>>(std::move(r.model));
    s.predict = [m](const PointSet& y) { return dnn::predict(*m, y); };
    if (model_out) *model_out = m->template cast<double>();
    if (history) *history = std::move(r.history);
    return s;
}

inline Surrogate fit_dnn(const PointSet& points, const Eigen::MatrixXd& values, const Problem& prob, const DnnConfig& cfg,
                         dnn::TrainHistory* history = nullptr, dnn::Mlp<double>* model_out = nullptr)
{
    return cfg.precision == "single" ? fit_dnn_impl<float>(points, values, prob, cfg, history, model_out)
                                     : fit_dnn_impl<double>(points, values, prob, cfg, history, model_out);
}

struct TestErrors {
    double l2 = 0.0;   // relative L2_rho(U; L2(Omega)) error
    double h10 = 0.0;  // relative L2_rho(U; H1_0(Omega)) error
    bool clamped = false;
};

inline TestErrors test_errors(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& approx,
                              const quadrature::SparseGrid& grid, const Problem& prob)
{
    const auto a = quadrature::bochner_error(reference, approx, grid, *prob.l2);
    const auto b = quadrature::bochner_error(reference, approx, grid, *prob.h10);
    return {a.relative(), b.relative(), a.clamped || b.clamped};
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

struct RunRecord {
    int trial = 0;
    long m = 0;
    std::string method;
    std::uint64_t seed = 0;
    bool ok = false;
    double error_l2 = 0.0, error_h10 = 0.0, seconds = 0.0;
    long iterations = 0;
    std::string message;
};

struct AggregateRecord {
    std::string method;
    long m = 0;
    int trials_ok = 0;
    double error_l2 = 0.0, error_h10 = 0.0, seconds = 0.0;
};

struct StudyReport {
    std::vector<RunRecord> runs;
    std::vector<AggregateRecord> aggregate;
    bool all_ok = true;
};

inline std::string csv_safe(std::string s)
{
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

inline const char* kRunCsvHeader = "trial,m,method,seed,status,error_l2,error_h10,seconds,iterations,message";
inline const char* kAggregateCsvHeader = "trial,m,method,seed,trials_ok,error_l2,error_h10,seconds";

inline void write_run_row(std::ostream& os, const RunRecord& r)
{
    os << r.trial << ',' << r.m << ',' << r.method << ',' << r.seed << ',' << (r.ok ? "ok" : "error") << ','
       << std::setprecision(17) << r.error_l2 << ',' << r.error_h10 << ',' << r.seconds << ',' << r.iterations << ','
       << csv_safe(r.message) << '\n';
}

/// Trial means over successful runs, per (method, m), in config order.
inline std::vector<AggregateRecord> aggregate_runs(const std::vector<RunRecord>& runs, const ExperimentConfig& cfg)
{
    std::vector<AggregateRecord> out;
    for (const auto& method : cfg.methods)
        for (long m : cfg.m_schedule) {
            AggregateRecord a{method, m};
            for (const auto& r : runs)
                if (r.ok && r.method == method && r.m == m) {
                    ++a.trials_ok;
                    a.error_l2 += r.error_l2;
                    a.error_h10 += r.error_h10;
                    a.seconds += r.seconds;
                }
            if (a.trials_ok) {
                a.error_l2 /= a.trials_ok;
                a.error_h10 /= a.trials_ok;
                a.seconds /= a.trials_ok;
            }
            out.push_back(a);
        }
    return out;
}

/**
 * For every trial t (data seed seed_base + t) and m in the schedule, fits each
 * method on the first m samples and evaluates both relative Bochner errors on
 * the shared test grid. Trials run as a job pool of `threads` workers; each
 * job is single-threaded, and records are sorted before output, so the files
 * do not depend on scheduling. Failures are recorded per cell.
 *
 * Layout: <out>/config.json, runs.csv, aggregate.csv, <method>/trial_<t>/runs.csv.
 */
inline StudyReport run_convergence_study(const ExperimentConfig& cfg, const fs::path& out, int threads = 1,
                                         std::ostream* log = nullptr)
{
    cfg.validate();
    if (threads < 1) throw config_error("threads must be >= 1");
    fs::create_directories(out);
    {
        std::ofstream f(out / "config.json");
        f << serialize_config(cfg) << '\n';
    }
    const Problem prob = make_problem(cfg.problem);
    const auto grid = make_test_grid(cfg.testing, prob.dim());
    Eigen::MatrixXd reference;
    {
        pde::DiffusionSolver solver(prob.mesh, prob.coefficient, prob.forcing);
        reference = pde::solve_at(solver, grid.points);
    }
    std::mutex mu;
    auto say = [&](const std::string& s) {
        if (!log) return;
        std::lock_guard lock(mu);
        *log << s << std::endl;
    };
    say("test grid: " + std::to_string(grid.size()) + " points");

    std::vector<RunRecord> runs;
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int t = next++; t < cfg.trials; t = next++) {
            const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(t);
            std::vector<RunRecord> local;
            std::optional<pde::Dataset> data;
            std::string data_error;
            try {
                data = pde::generate_dataset(prob.coefficient, prob.forcing, prob.mesh, cfg.m_schedule.back(), seed);
            } catch (const std::exception& e) {
                data_error = std::string("data generation failed: ") + e.what();
            }
            for (const auto& method : cfg.methods)
                for (long m : cfg.m_schedule) {
                    RunRecord r{t, m, method, seed};
                    try {
                        if (!data) throw std::runtime_error(data_error);
                        const PointSet pts = data->points.topRows(m);
                        const Eigen::MatrixXd vals = data->values.topRows(m);
                        Surrogate s = method == "dnn" ? fit_dnn(pts, vals, prob, cfg.dnn)
                                                      : fit_scs(pts, vals, prob, cfg.scs,
                                                                method == "scs" ? RecoveryMethod::Lasso : RecoveryMethod::SrLasso);
                        const auto e = test_errors(reference, s.predict(grid.points), grid, prob);
                        r.ok = std::isfinite(e.l2) && std::isfinite(e.h10);
                        r.error_l2 = e.l2;
                        r.error_h10 = e.h10;
                        r.seconds = s.seconds;
                        r.iterations = s.iterations;
                        if (!s.converged) r.message = "iteration limit";
                        if (e.clamped) r.message += (r.message.empty() ? "" : "; ") + std::string("negative quadrature sum clamped");
                        if (!r.ok) r.message = "non-finite test error";
                    } catch (const std::exception& e) {
                        r.ok = false;
                        r.message = e.what();
                    }
                    std::ostringstream msg;
                    msg << "trial " << t << " m " << m << " " << method << ": "
                        << (r.ok ? "L2 " + std::to_string(r.error_l2) + " H1_0 " + std::to_string(r.error_h10)
                                 : "FAILED " + r.message);
                    say(msg.str());
                    local.push_back(std::move(r));
                }
            std::lock_guard lock(mu);
            runs.insert(runs.end(), local.begin(), local.end());
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < std::min(threads, cfg.trials); ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    auto method_rank = [&](const std::string& m) {
        return std::find(cfg.methods.begin(), cfg.methods.end(), m) - cfg.methods.begin();
    };
    std::sort(runs.begin(), runs.end(), [&](const RunRecord& a, const RunRecord& b) {
        return std::tuple(method_rank(a.method), a.trial, a.m) < std::tuple(method_rank(b.method), b.trial, b.m);
    });

    StudyReport rep;
    rep.runs = std::move(runs);
    rep.aggregate = aggregate_runs(rep.runs, cfg);
    rep.all_ok = std::all_of(rep.runs.begin(), rep.runs.end(), [](const RunRecord& r) { return r.ok; });

    std::ofstream all(out / "runs.csv");
    all << kRunCsvHeader << '\n';
    std::map<std::pair<std::string, int>, std::ofstream> per;
    for (const auto& r : rep.runs) {
        write_run_row(all, r);
        auto key = std::pair(r.method, r.trial);
        auto it = per.find(key);
        if (it == per.end()) {
            const fs::path dir = out / r.method / ("trial_" + std::to_string(r.trial));
            fs::create_directories(dir);
            it = per.emplace(key, std::ofstream(dir / "runs.csv")).first;
            it->second << kRunCsvHeader << '\n';
        }
        write_run_row(it->second, r);
    }
    std::ofstream agg(out / "aggregate.csv");
    agg << kAggregateCsvHeader << '\n' << std::setprecision(17);
    for (const auto& a : rep.aggregate)
        agg << "mean," << a.m << ',' << a.method << ',' << cfg.seed_base << ',' << a.trials_ok << ',' << a.error_l2 << ','
            << a.error_h10 << ',' << a.seconds << '\n';
    return rep;
}

// ---------------------------------------------------------------------------
// CSV reading and plot emission
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const
    {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw io::format_error("missing column '" + name + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline CsvTable read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw io::format_error("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw io::format_error("empty CSV '" + path.string() + "'");
    t.columns = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.columns.size()) throw io::format_error("ragged CSV row in '" + path.string() + "'");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

/**
 * Writes <out>/plot_data.csv (method, m, error_l2, error_h10, seconds) and
 * <out>/plot_study.py, a matplotlib script with three log-scale panels: L2
 * error, H1_0 error and training time against m, one series per method.
 * Nothing is written if the aggregate is empty or lacks a column.
 */
inline std::vector<fs::path> emit_plots(const fs::path& aggregate_csv, const fs::path& out)
{
    const CsvTable t = read_csv(aggregate_csv);
    const std::size_t cm = t.column("m"), cmeth = t.column("method"), cl2 = t.column("error_l2"),
                      ch1 = t.column("error_h10"), cs = t.column("seconds"), cok = t.column("trials_ok");
    if (t.rows.empty()) throw io::format_error("aggregate '" + aggregate_csv.string() + "' has no rows");

    fs::create_directories(out);
    const fs::path data = out / "plot_data.csv", script = out / "plot_study.py";
    {
        std::ofstream f(data);
        f << "method,m,error_l2,error_h10,seconds\n";
        for (const auto& r : t.rows)
            if (r[cok] != "0") f << r[cmeth] << ',' << r[cm] << ',' << r[cl2] << ',' << r[ch1] << ',' << r[cs] << '\n';
    }
    std::ofstream f(script);
    f << R"PY(import csv
import os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
series = {}
with open(os.path.join(here, "plot_data.csv")) as fh:
    for row in csv.DictReader(fh):
        series.setdefault(row["method"], []).append(row)

panels = [("error_l2", "relative L2 test error"),
          ("error_h10", "relative H1_0 test error"),
          ("seconds", "training time (s)")]
fig, axes = plt.subplots(1, 3, figsize=(15, 4.5))
for ax, (key, title) in zip(axes, panels):
    for method, rows in series.items():
        rows = sorted(rows, key=lambda r: int(r["m"]))
        ax.semilogy([int(r["m"]) for r in rows], [float(r[key]) for r in rows], "o-", label=method)
    ax.set_xlabel("m")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "study.png"), dpi=150)
)PY";
    return {data, script};
}

} // namespace hvapprox::study
