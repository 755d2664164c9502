#pragma once

#include <memory>
#include <random>

#include <Eigen/Dense>

#include "hvapprox/hilbert.hpp"

namespace testutil {

inline Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

// Well-conditioned random SPD matrix.
inline Eigen::MatrixXd random_spd(Eigen::Index k, std::mt19937_64& rng)
{
    const Eigen::MatrixXd b = gaussian(k, k, rng);
    return b * b.transpose() / static_cast<double>(k) + Eigen::MatrixXd::Identity(k, k);
}

inline hvapprox::SpacePtr random_space(Eigen::Index k, std::mt19937_64& rng)
{
    return std::make_shared<const hvapprox::DiscreteHilbertSpace>(random_spd(k, rng), "custom");
}

inline hvapprox::SpacePtr euclidean(Eigen::Index k)
{
    return std::make_shared<const hvapprox::DiscreteHilbertSpace>(hvapprox::DiscreteHilbertSpace::identity(k));
}

} // namespace testutil
