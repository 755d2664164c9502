#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace hvapprox {

/// Uniform double in [0,1) from the top 53 bits of a 64-bit draw. Unlike
/// std::uniform_real_distribution this is identical across standard libraries.
inline double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// m i.i.d. points uniform on [-1,1]^d, one per row.
inline Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
uniform_points(Eigen::Index m, Eigen::Index d, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts(m, d);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index k = 0; k < d; ++k) pts(i, k) = 2.0 * unit_uniform(rng) - 1.0;
    return pts;
}

} // namespace hvapprox
