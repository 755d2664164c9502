#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <numeric>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "json.hpp"

#include "hvapprox/hilbert.hpp"
#include "hvapprox/io.hpp"
#include "hvapprox/random.hpp"

namespace hvapprox::dnn {

enum class Activation { Tanh, Relu, LeakyRelu };
enum class Loss { Mse, Mvnse };

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kInitStdDev = 0.1;  // variance 0.01
inline constexpr std::array<char, 8> kModelMagic{'H', 'V', 'M', 'L', 'P', '0', '0', '1'};

inline std::string to_string(Activation a)
{
    switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s)
{
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    if (s == "leaky_relu") return Activation::LeakyRelu;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

inline std::string to_string(Loss l) { return l == Loss::Mse ? "mse" : "mvnse"; }

inline Loss loss_from_string(const std::string& s)
{
    if (s == "mse") return Loss::Mse;
    if (s == "mvnse") return Loss::Mvnse;
    throw std::invalid_argument("unknown loss '" + s + "'");
}

/// Standard normal via Box-Muller on the portable uniform stream.
inline double standard_normal(std::mt19937_64& rng)
{
    const double u1 = 1.0 - unit_uniform(rng);
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Widths {d, M, ..., M, K} with `hidden_layers` hidden layers of width M.
inline std::vector<int> architecture(int input, int hidden_layers, int width, int output)
{
    if (input < 1 || output < 1 || hidden_layers < 0 || (hidden_layers > 0 && width < 1))
        throw std::invalid_argument("architecture: invalid widths");
    std::vector<int> w{input};
    for (int l = 0; l < hidden_layers; ++l) w.push_back(width);
    w.push_back(output);
    return w;
}

/**
 * Fully connected network y -> A_n(s(A_{n-1}(... s(A_1 y)))) with affine A_l
 * and no activation after the last layer. All weights and biases live in one
 * flat parameter vector; layer l stores W_l (column-major, out x in) then b_l.
 */
template <typename Scalar = double>
class Mlp {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using MatrixMap = Eigen::Map<Matrix>;
    using ConstMatrixMap = Eigen::Map<const Matrix>;
    using VectorMap = Eigen::Map<Vector>;
    using ConstVectorMap = Eigen::Map<const Vector>;

    Mlp() = default;

    Mlp(std::vector<int> widths, Activation act) : widths_(std::move(widths)), act_(act)
    {
        if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
        for (int w : widths_)
            if (w < 1) throw std::invalid_argument("Mlp: widths must be positive");
        offsets_.push_back(0);
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l)
            offsets_.push_back(offsets_.back() + static_cast<Eigen::Index>(widths_[l + 1]) * (widths_[l] + 1));
        params_ = Vector::Zero(offsets_.back());
    }

    /// Every weight and bias drawn i.i.d. from N(0, 0.01).
    static Mlp initialized(std::vector<int> widths, Activation act, std::uint64_t seed = 0)
    {
        Mlp m(std::move(widths), act);
        std::mt19937_64 rng(seed);
        for (Eigen::Index i = 0; i < m.params_.size(); ++i)
            m.params_[i] = static_cast<Scalar>(kInitStdDev * standard_normal(rng));
        return m;
    }

    const std::vector<int>& widths() const { return widths_; }
    Activation activation() const { return act_; }
    int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
    int input_dim() const { return widths_.front(); }
    int output_dim() const { return widths_.back(); }
    Eigen::Index num_params() const { return params_.size(); }

    Vector& params() { return params_; }
    const Vector& params() const { return params_; }

    MatrixMap weight(int l) { return MatrixMap(params_.data() + offsets_[l], widths_[l + 1], widths_[l]); }
    ConstMatrixMap weight(int l) const { return ConstMatrixMap(params_.data() + offsets_[l], widths_[l + 1], widths_[l]); }
    VectorMap bias(int l) { return VectorMap(params_.data() + bias_offset(l), widths_[l + 1]); }
    ConstVectorMap bias(int l) const { return ConstVectorMap(params_.data() + bias_offset(l), widths_[l + 1]); }

    /// Same layout, applied to a gradient vector.
    MatrixMap weight_in(Vector& flat, int l) const
    {
        return MatrixMap(flat.data() + offsets_[l], widths_[l + 1], widths_[l]);
    }
    VectorMap bias_in(Vector& flat, int l) const { return VectorMap(flat.data() + bias_offset(l), widths_[l + 1]); }

    Scalar activate(Scalar z) const
    {
        switch (act_) {
        case Activation::Tanh: return std::tanh(z);
        case Activation::Relu: return z > 0 ? z : Scalar(0);
        case Activation::LeakyRelu: return z > 0 ? z : Scalar(kLeakySlope) * z;
        }
        return z;
    }

    /// Derivative expressed through the activated value a = s(z) (all three activations allow this).
    Scalar activate_derivative_from_output(Scalar a) const
    {
        switch (act_) {
        case Activation::Tanh: return Scalar(1) - a * a;
        case Activation::Relu: return a > 0 ? Scalar(1) : Scalar(0);
        case Activation::LeakyRelu: return a > 0 ? Scalar(1) : Scalar(kLeakySlope);
        }
        return Scalar(1);
    }

    /// Outputs for the columns of x (input_dim x B); returns output_dim x B.
    Matrix forward(const Matrix& x) const
    {
        std::vector<Matrix> acts;
        return forward_cached(x, acts);
    }

    Vector forward_one(std::span<const double> y) const
    {
        if (static_cast<int>(y.size()) != input_dim()) throw std::invalid_argument("Mlp::forward_one: dimension mismatch");
        Matrix x(input_dim(), 1);
        for (int k = 0; k < input_dim(); ++k) x(k, 0) = static_cast<Scalar>(y[k]);
        return forward(x).col(0);
    }

    /// Forward pass keeping the input and every hidden activation for backprop.
    Matrix forward_cached(const Matrix& x, std::vector<Matrix>& acts) const
    {
        if (x.rows() != input_dim()) throw std::invalid_argument("Mlp::forward: input dimension mismatch");
        acts.clear();
        acts.push_back(x);
        for (int l = 0; l < num_layers(); ++l) {
            Matrix z = weight(l) * acts.back();
            z.colwise() += bias(l);
            if (l + 1 == num_layers()) return z;
            z = z.unaryExpr([this](Scalar v) { return activate(v); });
            acts.push_back(std::move(z));
        }
        return acts.back();
    }

    template <typename Other>
    Mlp<Other> cast() const
    {
        Mlp<Other> m(widths_, act_);
        m.params() = params_.template cast<Other>();
        return m;
    }

private:
    Eigen::Index bias_offset(int l) const { return offsets_[l] + static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l]; }

    std::vector<int> widths_;
    Activation act_ = Activation::Tanh;
    std::vector<Eigen::Index> offsets_;
    Vector params_;
};

// ---------------------------------------------------------------------------
// Losses and gradients
// ---------------------------------------------------------------------------

/// Gram matrix used by the MVNSE loss, in the network's scalar type.
template <typename Scalar>
using GramMatrix = Eigen::SparseMatrix<Scalar>;

/// (1/B) sum_i ||r_i||^2 for residual columns r_i.
template <typename Derived>
typename Derived::Scalar mse_from_residual(const Eigen::MatrixBase<Derived>& r)
{
    return r.squaredNorm() / static_cast<typename Derived::Scalar>(r.cols());
}

/// (1/B) sum_i r_i^T G r_i.
template <typename Scalar, typename Derived>
Scalar mvnse_from_residual(const GramMatrix<Scalar>& g, const Eigen::MatrixBase<Derived>& r)
{
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gr = g * r;
    return gr.cwiseProduct(r).sum() / static_cast<Scalar>(r.cols());
}

/// Targets are stored one sample per column (K x B), matching the network output.
template <typename Scalar>
Scalar loss_mse(const Mlp<Scalar>& model, const typename Mlp<Scalar>::Matrix& x, const typename Mlp<Scalar>::Matrix& c)
{
    if (c.rows() != model.output_dim() || c.cols() != x.cols() || x.cols() == 0)
        throw std::invalid_argument("loss_mse: batch shape mismatch");
    return mse_from_residual(c - model.forward(x));
}

template <typename Scalar>
Scalar loss_mvnse(const Mlp<Scalar>& model, const typename Mlp<Scalar>::Matrix& x, const typename Mlp<Scalar>::Matrix& c,
                  const GramMatrix<Scalar>& g)
{
    if (c.rows() != model.output_dim() || c.cols() != x.cols() || x.cols() == 0)
        throw std::invalid_argument("loss_mvnse: batch shape mismatch");
    if (g.rows() != model.output_dim() || g.cols() != model.output_dim())
        throw std::invalid_argument("loss_mvnse: Gram size differs from output width");
    return mvnse_from_residual(g, c - model.forward(x));
}

template <typename Scalar>
struct LossAndGradient {
    Scalar loss;
    typename Mlp<Scalar>::Vector gradient;
};

/// Exact reverse-mode gradient of the selected loss; `g` is required for MVNSE.
template <typename Scalar>
LossAndGradient<Scalar> loss_and_gradient(const Mlp<Scalar>& model, const typename Mlp<Scalar>::Matrix& x,
                                          const typename Mlp<Scalar>::Matrix& c, Loss loss,
                                          const GramMatrix<Scalar>* g = nullptr)
{
    using Matrix = typename Mlp<Scalar>::Matrix;
    if (c.rows() != model.output_dim() || c.cols() != x.cols() || x.cols() == 0)
        throw std::invalid_argument("loss_and_gradient: batch shape mismatch");
    if (loss == Loss::Mvnse && (g == nullptr || g->rows() != model.output_dim()))
        throw std::invalid_argument("loss_and_gradient: MVNSE needs a Gram matrix of the output width");

    std::vector<Matrix> acts;
    const Matrix r = model.forward_cached(x, acts) - c;
    const Scalar scale = Scalar(2) / static_cast<Scalar>(x.cols());
    LossAndGradient<Scalar> out;
    Matrix delta;
    if (loss == Loss::Mse) {
        out.loss = mse_from_residual(r);
        delta = scale * r;
    } else {
        const Matrix gr = (*g) * r;
        out.loss = gr.cwiseProduct(r).sum() / static_cast<Scalar>(x.cols());
        delta = scale * gr;
    }

    out.gradient = Mlp<Scalar>::Vector::Zero(model.num_params());
    for (int l = model.num_layers() - 1; l >= 0; --l) {
        model.weight_in(out.gradient, l).noalias() = delta * acts[l].transpose();
        model.bias_in(out.gradient, l) = delta.rowwise().sum();
        if (l == 0) break;
        Matrix back = model.weight(l).transpose() * delta;
        back.array() *= acts[l].unaryExpr([&model](Scalar a) { return model.activate_derivative_from_output(a); }).array();
        delta = std::move(back);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    Loss loss = Loss::Mse;
    int epochs = 50000;
    double tolerance = 5e-7;
    int max_batch = 256;  // batch size min{m, max_batch}
    double learning_rate = 1e-3;
    double decay_rate = 0.99;  // multiplicative per decay_steps optimizer steps
    int decay_steps = 1000;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double checkpoint_factor = 16.0;
    double max_gradient_norm = 1e3;
    std::uint64_t seed = 0;
    double time_limit_seconds = 0.0;  // 0: none

    void validate() const
    {
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (!(tolerance >= 0.0)) throw std::invalid_argument("TrainConfig: tolerance must be >= 0");
        if (max_batch < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be positive");
        if (!(decay_rate > 0.0 && decay_rate <= 1.0)) throw std::invalid_argument("TrainConfig: decay must lie in (0,1]");
        if (decay_steps < 1) throw std::invalid_argument("TrainConfig: decay steps must be >= 1");
        if (!(checkpoint_factor > 1.0)) throw std::invalid_argument("TrainConfig: checkpoint factor must exceed 1");
    }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c)
{
    j = {{"loss", to_string(c.loss)},
         {"epochs", c.epochs},
         {"tolerance", c.tolerance},
         {"max_batch", c.max_batch},
         {"learning_rate", c.learning_rate},
         {"decay_rate", c.decay_rate},
         {"decay_steps", c.decay_steps},
         {"beta1", c.beta1},
         {"beta2", c.beta2},
         {"adam_eps", c.adam_eps},
         {"checkpoint_factor", c.checkpoint_factor},
         {"max_gradient_norm", c.max_gradient_norm},
         {"seed", c.seed},
         {"time_limit_seconds", c.time_limit_seconds}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c)
{
    TrainConfig d;
    c.loss = loss_from_string(j.value("loss", to_string(d.loss)));
    c.epochs = j.value("epochs", d.epochs);
    c.tolerance = j.value("tolerance", d.tolerance);
    c.max_batch = j.value("max_batch", d.max_batch);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.decay_rate = j.value("decay_rate", d.decay_rate);
    c.decay_steps = j.value("decay_steps", d.decay_steps);
    c.beta1 = j.value("beta1", d.beta1);
    c.beta2 = j.value("beta2", d.beta2);
    c.adam_eps = j.value("adam_eps", d.adam_eps);
    c.checkpoint_factor = j.value("checkpoint_factor", d.checkpoint_factor);
    c.max_gradient_norm = j.value("max_gradient_norm", d.max_gradient_norm);
    c.seed = j.value("seed", d.seed);
    c.time_limit_seconds = j.value("time_limit_seconds", d.time_limit_seconds);
}

struct Checkpoint {
    int epoch;
    double loss;  // full training loss of the saved parameters
};

struct TrainHistory {
    std::vector<double> epoch_loss;  // batch-size-weighted mean of minibatch losses
    std::vector<Checkpoint> checkpoints;
    double final_loss = 0.0;     // full training loss of the returned model
    int best_checkpoint = -1;    // index into checkpoints, or -1 for the final iterate
    int epochs_run = 0;
    bool reached_tolerance = false;
    bool hit_time_limit = false;
    long clipped_steps = 0;
    long skipped_steps = 0;      // steps whose gradient had non-finite entries
    double seconds = 0.0;
};

class training_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct TrainResult {
    Mlp<Scalar> model;
    TrainHistory history;
};

/// Full-data loss of the selected kind (columns are samples).
template <typename Scalar>
Scalar full_loss(const Mlp<Scalar>& model, const typename Mlp<Scalar>::Matrix& x, const typename Mlp<Scalar>::Matrix& c,
                 Loss loss, const GramMatrix<Scalar>* g, Eigen::Index chunk = 1024)
{
    double total = 0.0;
    for (Eigen::Index start = 0; start < x.cols(); start += chunk) {
        const Eigen::Index n = std::min(chunk, x.cols() - start);
        const typename Mlp<Scalar>::Matrix r = model.forward(x.middleCols(start, n)) - c.middleCols(start, n);
        total += static_cast<double>(loss == Loss::Mse ? r.squaredNorm() : ((*g) * r).cwiseProduct(r).sum());
    }
    return static_cast<Scalar>(total / static_cast<double>(x.cols()));
}

/**
 * Seeded mini-batch Adam with an exponentially decaying step
 * lr * decay_rate^(step / decay_steps). The sample order is reshuffled every
 * epoch. A checkpoint is saved whenever the full training loss has dropped to
 * 1/checkpoint_factor of the last checkpoint; the returned model is the
 * lowest-loss one among the checkpoints and the final iterate.
 *
 * Samples are the columns of x (d x m) and c (K x m).
 */
template <typename Scalar>
TrainResult<Scalar> train(Mlp<Scalar> model, const typename Mlp<Scalar>::Matrix& x, const typename Mlp<Scalar>::Matrix& c,
                          const TrainConfig& cfg, const GramMatrix<Scalar>* g = nullptr)
{
    using Vector = typename Mlp<Scalar>::Vector;
    using Matrix = typename Mlp<Scalar>::Matrix;
    cfg.validate();
    const Eigen::Index m = x.cols();
    if (m == 0 || c.cols() != m || x.rows() != model.input_dim() || c.rows() != model.output_dim())
        throw std::invalid_argument("train: data shape mismatch");
    if (cfg.loss == Loss::Mvnse && g == nullptr) throw std::invalid_argument("train: MVNSE needs a Gram matrix");

    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::Index batch = std::min<Eigen::Index>(m, cfg.max_batch);
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    Vector mom = Vector::Zero(model.num_params()), var = Vector::Zero(model.num_params());
    long step = 0;
    TrainHistory hist;
    std::optional<Vector> best_params;
    double last_ckpt = std::numeric_limits<double>::infinity();

    Matrix xb(x.rows(), batch), cb(c.rows(), batch);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (Eigen::Index i = m - 1; i > 0; --i) {
            const auto j = static_cast<Eigen::Index>(unit_uniform(shuffle_rng) * static_cast<double>(i + 1));
            std::swap(order[i], order[j]);
        }
        double epoch_sum = 0.0;
        for (Eigen::Index start = 0; start < m; start += batch) {
            const Eigen::Index n = std::min(batch, m - start);
            xb.resize(x.rows(), n);
            cb.resize(c.rows(), n);
            for (Eigen::Index k = 0; k < n; ++k) {
                xb.col(k) = x.col(order[start + k]);
                cb.col(k) = c.col(order[start + k]);
            }
            auto lg = loss_and_gradient(model, xb, cb, cfg.loss, g);
            if (!std::isfinite(static_cast<double>(lg.loss))) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << ", step " << step << " (lr "
                    << cfg.learning_rate * std::pow(cfg.decay_rate, static_cast<double>(step) / cfg.decay_steps) << ")";
                throw training_error(msg.str());
            }
            epoch_sum += static_cast<double>(lg.loss) * static_cast<double>(n);
            if (!lg.gradient.allFinite()) {
                ++hist.skipped_steps;
                continue;
            }
            const double gnorm = static_cast<double>(lg.gradient.norm());
            if (gnorm > cfg.max_gradient_norm) {
                lg.gradient *= static_cast<Scalar>(cfg.max_gradient_norm / gnorm);
                ++hist.clipped_steps;
            }
            ++step;
            const double lr = cfg.learning_rate * std::pow(cfg.decay_rate, static_cast<double>(step - 1) / cfg.decay_steps);
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            const auto b1 = static_cast<Scalar>(cfg.beta1), b2 = static_cast<Scalar>(cfg.beta2);
            mom = b1 * mom + (Scalar(1) - b1) * lg.gradient;
            var = b2 * var + (Scalar(1) - b2) * lg.gradient.cwiseAbs2();
            const auto a = static_cast<Scalar>(lr / bc1), sb = static_cast<Scalar>(std::sqrt(bc2));
            const auto eps = static_cast<Scalar>(cfg.adam_eps);
            model.params().array() -= a * mom.array() / (var.array().sqrt() / sb + eps);
        }
        const double epoch_loss = epoch_sum / static_cast<double>(m);
        hist.epoch_loss.push_back(epoch_loss);
        hist.epochs_run = epoch + 1;

        if (epoch_loss <= last_ckpt / cfg.checkpoint_factor) {
            const double exact = static_cast<double>(full_loss(model, x, c, cfg.loss, g));
            if (exact <= last_ckpt / cfg.checkpoint_factor) {
                hist.checkpoints.push_back({epoch + 1, exact});
                best_params = model.params();
                last_ckpt = exact;
            }
        }
        if (epoch_loss < cfg.tolerance) {
            hist.reached_tolerance = true;
            break;
        }
        if (cfg.time_limit_seconds > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > cfg.time_limit_seconds) {
            hist.hit_time_limit = true;
            break;
        }
    }

    const double final_exact = static_cast<double>(full_loss(model, x, c, cfg.loss, g));
    hist.final_loss = final_exact;
    if (best_params && last_ckpt < final_exact) {
        model.params() = *best_params;
        hist.final_loss = last_ckpt;
        hist.best_checkpoint = static_cast<int>(hist.checkpoints.size()) - 1;
    }
    hist.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(model), std::move(hist)};
}

/// Row-major sample arrays (m x d, m x K) to the column-per-sample layout used by training.
template <typename Scalar>
typename Mlp<Scalar>::Matrix samples_as_columns(const Eigen::Ref<const Eigen::MatrixXd>& rows)
{
    return rows.transpose().template cast<Scalar>();
}

/// Network outputs at the rows of `points`, returned as an m x K array.
template <typename Scalar>
Eigen::MatrixXd predict(const Mlp<Scalar>& model, const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Index chunk = 1024)
{
    Eigen::MatrixXd out(points.rows(), model.output_dim());
    for (Eigen::Index start = 0; start < points.rows(); start += chunk) {
        const Eigen::Index n = std::min(chunk, points.rows() - start);
        out.middleRows(start, n) =
            model.forward(samples_as_columns<Scalar>(points.middleRows(start, n))).transpose().template cast<double>();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model files: magic, JSON header, raw little-endian double parameters
// ---------------------------------------------------------------------------

template <typename Scalar>
void write_model(std::ostream& os, const Mlp<Scalar>& model, const nlohmann::json& extra = {})
{
    nlohmann::json header = {{"widths", model.widths()},
                             {"activation", to_string(model.activation())},
                             {"num_params", model.num_params()}};
    if (!extra.is_null()) header["meta"] = extra;
    io::write_magic(os, kModelMagic);
    io::write_string(os, header.dump());
    io::write_block(os, model.params().template cast<double>().transpose());
    if (!os) throw io::format_error("write_model: stream failure");
}

struct LoadedModel {
    Mlp<double> model;
    nlohmann::json header;
};

inline LoadedModel read_model(std::istream& is)
{
    io::expect_magic(is, kModelMagic);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(io::read_string(is));
    } catch (const nlohmann::json::exception& e) {
        throw io::format_error(std::string("read_model: bad header: ") + e.what());
    }
    Mlp<double> m(header.at("widths").get<std::vector<int>>(), activation_from_string(header.at("activation")));
    if (header.at("num_params").get<Eigen::Index>() != m.num_params())
        throw io::format_error("read_model: parameter count does not match the widths");
    m.params() = io::read_block(is, 1, static_cast<std::uint64_t>(m.num_params())).transpose();
    if (!m.params().allFinite()) throw io::format_error("read_model: non-finite parameters");
    return {std::move(m), std::move(header)};
}

} // namespace hvapprox::dnn
