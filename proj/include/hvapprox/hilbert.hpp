#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hvapprox/io.hpp"

namespace hvapprox {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Block norms at or below this level count as zero when computing supports.
inline constexpr double kSupportNoiseFloor = 1e-14;

enum class BlockNorm { One, Two, Inf };

/**
 * A finite-dimensional subspace V_h described in coordinates.
 *
 * The Gram matrix G_jk = <phi_j, phi_k>_V turns coordinate vectors into
 * V-norms. A factor R with R^T R = G is kept alongside; norms computed via G
 * or via R agree, and no code depends on which factor is used. R is built
 * from a sparse Cholesky factorization P G P^T = L L^T as R = L^T P.
 */
class DiscreteHilbertSpace {
public:
    DiscreteHilbertSpace(SparseMatrix gram, std::string label)
        : gram_(std::move(gram)), label_(std::move(label))
    {
        if (gram_.rows() != gram_.cols() || gram_.rows() == 0)
            throw std::invalid_argument("DiscreteHilbertSpace: Gram matrix must be square and nonempty");
        gram_.makeCompressed();
        const SparseMatrix asym = gram_ - SparseMatrix(gram_.transpose());
        const double scale = std::max(gram_.norm(), std::numeric_limits<double>::min());
        if (asym.norm() > 1e-12 * scale)
            throw std::invalid_argument("DiscreteHilbertSpace: Gram matrix is not symmetric");

        auto llt = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(gram_);
        if (llt->info() != Eigen::Success)
            throw std::invalid_argument("DiscreteHilbertSpace: Gram matrix is not positive definite");
        SparseMatrix lower = llt->matrixL();
        for (Eigen::Index j = 0; j < lower.cols(); ++j)
            if (!(lower.coeff(j, j) > 0.0))
                throw std::invalid_argument("DiscreteHilbertSpace: nonpositive Cholesky pivot");
        upper_ = lower.transpose();
        upper_.makeCompressed();
        perm_ = llt->permutationP();
        factor_ = upper_ * perm_;
        factor_.makeCompressed();
        solver_ = std::move(llt);
    }

    DiscreteHilbertSpace(const Eigen::MatrixXd& gram, std::string label)
        : DiscreteHilbertSpace(SparseMatrix(gram.sparseView(0.0, 0.0)), std::move(label))
    {
    }

    static DiscreteHilbertSpace identity(Eigen::Index k, std::string label = "euclidean")
    {
        SparseMatrix eye(k, k);
        eye.setIdentity();
        return DiscreteHilbertSpace(std::move(eye), std::move(label));
    }

    Eigen::Index dim() const { return gram_.rows(); }
    const SparseMatrix& gram() const { return gram_; }
    const SparseMatrix& factor() const { return factor_; }
    const std::string& label() const { return label_; }

    double inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const { return x.dot(gram_ * y); }
    double norm(const Eigen::VectorXd& x) const { return std::sqrt(std::max(0.0, inner(x, x))); }
    double norm_via_factor(const Eigen::VectorXd& x) const { return (factor_ * x).norm(); }

    /// R X for coordinate vectors stored as the columns of X.
    Eigen::MatrixXd apply_factor(const Eigen::MatrixXd& x) const { return factor_ * x; }

    /// R^{-1} Y, the inverse of apply_factor.
    Eigen::MatrixXd apply_factor_inverse(const Eigen::MatrixXd& y) const
    {
        Eigen::MatrixXd t = upper_.triangularView<Eigen::Upper>().solve(y);
        return perm_.transpose() * t;
    }

    /// Solves G c = rhs.
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const
    {
        Eigen::MatrixXd c = solver_->solve(rhs);
        if (solver_->info() != Eigen::Success) throw std::runtime_error("DiscreteHilbertSpace: Gram solve failed");
        return c;
    }

    /// Row-wise V-norms of an n x K coefficient array (row j is one element of V_h).
    Eigen::VectorXd row_norms(const Eigen::MatrixXd& rows) const
    {
        if (rows.cols() != dim()) throw std::invalid_argument("row_norms: coefficient width differs from space dimension");
        const Eigen::MatrixXd zg = rows * gram_;
        return zg.cwiseProduct(rows).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
    }

private:
    SparseMatrix gram_;
    SparseMatrix upper_;
    SparseMatrix factor_;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;
    std::shared_ptr<const Eigen::SimplicialLLT<SparseMatrix>> solver_;
    std::string label_;
};

using SpacePtr = std::shared_ptr<const DiscreteHilbertSpace>;

/// An element of V_h in coordinates.
struct HilbertElement {
    SpacePtr space;
    Eigen::VectorXd coeffs;

    double norm() const { return space->norm(coeffs); }
};

/// An N-vector of elements of V_h, stored as an N x K array (row j = entry j).
struct HilbertVector {
    SpacePtr space;
    Eigen::MatrixXd coeffs;

    Eigen::Index size() const { return coeffs.rows(); }
    Eigen::VectorXd block_norms() const { return space->row_norms(coeffs); }
};

inline double reduce_block_norms(const Eigen::VectorXd& norms, BlockNorm p)
{
    if (norms.size() == 0) return 0.0;
    switch (p) {
    case BlockNorm::One: return norms.sum();
    case BlockNorm::Two: return norms.norm();
    case BlockNorm::Inf: return norms.maxCoeff();
    }
    return 0.0;
}

/// ||v||_{V,p}: the l^p norm of the sequence of block V-norms.
inline double norm_vp(const HilbertVector& v, BlockNorm p)
{
    return reduce_block_norms(v.block_norms(), p);
}

/// Matrix l^{p,q} norm: (sum_j (sum_i |M_ij|^p)^{q/p})^{1/q}, columns indexed by j.
inline double matrix_lpq_norm(const Eigen::MatrixXd& m, double p, double q)
{
    double total = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double colp = m.col(j).cwiseAbs().array().pow(p).sum();
        total += std::pow(colp, q / p);
    }
    return std::pow(total, 1.0 / q);
}

/// Indices whose block V-norm exceeds max(tol, kSupportNoiseFloor).
inline std::vector<Eigen::Index> support(const HilbertVector& v, double tol = 0.0)
{
    if (tol < 0.0) throw std::invalid_argument("support: negative tolerance");
    const double cut = std::max(tol, kSupportNoiseFloor);
    const Eigen::VectorXd norms = v.block_norms();
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < norms.size(); ++j)
        if (norms[j] > cut) out.push_back(j);
    return out;
}

/// sigma_s(v)_{V,p}: error of the best s-term approximation, attained by
/// keeping the s blocks of largest V-norm.
inline double best_s_term_error(const Eigen::VectorXd& block_norms, Eigen::Index s, BlockNorm p)
{
    if (s < 0 || s > block_norms.size()) throw std::invalid_argument("best_s_term_error: s out of range");
    std::vector<double> sorted(block_norms.data(), block_norms.data() + block_norms.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    Eigen::VectorXd tail = Eigen::Map<const Eigen::VectorXd>(sorted.data() + s,
                                                              static_cast<Eigen::Index>(sorted.size()) - s);
    return reduce_block_norms(tail, p);
}

inline double best_s_term_error(const HilbertVector& v, Eigen::Index s, BlockNorm p)
{
    return best_s_term_error(v.block_norms(), s, p);
}

/// Orthogonal projection onto V_h given rhs_k = <f, phi_k>_V: solves G c = rhs.
inline HilbertElement project(const SpacePtr& space, const Eigen::VectorXd& rhs)
{
    if (rhs.size() != space->dim()) throw std::invalid_argument("project: rhs length differs from space dimension");
    return HilbertElement{space, space->solve(rhs)};
}

inline void write_hilbert_vector(std::ostream& os, const HilbertVector& v)
{
    io::write_matrix(os, v.coeffs, "hilbert:" + v.space->label());
}

/// Reads a HilbertVector written by write_hilbert_vector; the caller supplies
/// the space, whose label must match the stored one.
inline HilbertVector read_hilbert_vector(std::istream& is, const SpacePtr& space)
{
    auto m = io::read_matrix(is);
    if (m.label != "hilbert:" + space->label())
        throw io::format_error("space label mismatch: file has '" + m.label + "'");
    if (m.values.cols() != space->dim()) throw io::format_error("coefficient width differs from space dimension");
    return HilbertVector{space, std::move(m.values)};
}

} // namespace hvapprox
