#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "hvapprox/dnn.hpp"

namespace testutil {

// Smallest |pre-activation| over all hidden units and samples.
inline double min_abs_preactivation(const hvapprox::dnn::Mlp<double>& m, const Eigen::MatrixXd& x)
{
    double out = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd a = x;
    for (int l = 0; l + 1 < m.num_layers(); ++l) {
        Eigen::MatrixXd z = (m.weight(l) * a).colwise() + m.bias(l);
        out = std::min(out, z.cwiseAbs().minCoeff());
        a = z.unaryExpr([&m](double v) { return m.activate(v); });
    }
    return out;
}

struct GradCheck {
    double worst = 0.0;
    int probes = 0;
};

// Central differences (step 1e-5) against the reverse-mode gradient on a
// 2x8x3 network. Each probe draws fresh parameters, a fresh batch and one
// parameter coordinate; kink-adjacent draws are redrawn for relu/leaky relu.
inline GradCheck gradient_check(hvapprox::dnn::Activation act, hvapprox::dnn::Loss loss, int probes, std::uint64_t seed)
{
    using namespace hvapprox::dnn;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd gd(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) gd(i, j) = u(rng);
    gd = gd * gd.transpose() + Eigen::MatrixXd::Identity(3, 3);
    const GramMatrix<double> g = gd.sparseView();
    auto eval = [&](const Mlp<double>& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
        return loss == Loss::Mse ? loss_mse(m, x, c) : loss_mvnse(m, x, c, g);
    };

    GradCheck res;
    const double h = 1e-5;
    while (res.probes < probes) {
        auto m = Mlp<double>::initialized({2, 8, 3}, act, rng());
        m.params() *= 10.0;  // unit-scale parameters give gradients well above roundoff
        Eigen::MatrixXd x(2, 6), c(3, 6);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
        for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
        if (act != Activation::Tanh && min_abs_preactivation(m, x) <= 1e-3) continue;
        const auto lg = loss_and_gradient(m, x, c, loss, &g);
        const auto p = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m.num_params()));
        auto mp = m, mm = m;
        mp.params()[p] += h;
        mm.params()[p] -= h;
        const double fd = (eval(mp, x, c) - eval(mm, x, c)) / (2 * h);
        const double denom = std::max(std::abs(fd) + std::abs(lg.gradient[p]), 1e-4);
        res.worst = std::max(res.worst, std::abs(fd - lg.gradient[p]) / denom);
        ++res.probes;
    }
    return res;
}

} // namespace testutil
