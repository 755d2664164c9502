#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <algorithm>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hvapprox/hilbert.hpp"
#include "hvapprox/polybasis.hpp"
#include "hvapprox/random.hpp"

namespace hvapprox::pde {

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------

/**
 * Structured P1 triangulation of the unit square with n nodes per side.
 *
 * Vertex (i, j) has index i + n j and coordinates (i, j) / (n - 1). Every
 * cell is split along its lower-left to upper-right diagonal into two
 * counter-clockwise right isosceles triangles.
 */
struct StructuredMesh {
    int n = 0;
    Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<bool> on_boundary;

    Eigen::Index num_vertices() const { return vertices.rows(); }
    std::size_t num_triangles() const { return triangles.size(); }
    double h() const { return std::sqrt(2.0) / (n - 1); }
};

inline StructuredMesh build_mesh(int n)
{
    if (n < 2) throw std::invalid_argument("build_mesh: need at least 2 nodes per side");
    StructuredMesh mesh;
    mesh.n = n;
    mesh.vertices.resize(static_cast<Eigen::Index>(n) * n, 2);
    mesh.on_boundary.resize(static_cast<std::size_t>(n) * n);
    const double hx = 1.0 / (n - 1);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int v = i + n * j;
            mesh.vertices(v, 0) = i * hx;
            mesh.vertices(v, 1) = j * hx;
            mesh.on_boundary[v] = (i == 0 || j == 0 || i == n - 1 || j == n - 1);
        }
    mesh.triangles.reserve(2 * static_cast<std::size_t>(n - 1) * (n - 1));
    for (int j = 0; j + 1 < n; ++j)
        for (int i = 0; i + 1 < n; ++i) {
            const int v00 = i + n * j, v10 = v00 + 1, v01 = v00 + n, v11 = v01 + 1;
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    return mesh;
}

/// Signed area of triangle t (positive for counter-clockwise orientation).
inline double signed_area(const StructuredMesh& mesh, std::size_t t)
{
    const auto& tri = mesh.triangles[t];
    const auto p0 = mesh.vertices.row(tri[0]), p1 = mesh.vertices.row(tri[1]), p2 = mesh.vertices.row(tri[2]);
    return 0.5 * ((p1(0) - p0(0)) * (p2(1) - p0(1)) - (p2(0) - p0(0)) * (p1(1) - p0(1)));
}

/// Gradients of the three barycentric coordinates (rows) on triangle t.
inline Eigen::Matrix<double, 3, 2> barycentric_gradients(const StructuredMesh& mesh, std::size_t t)
{
    const auto& tri = mesh.triangles[t];
    const double area2 = 2.0 * signed_area(mesh, t);
    Eigen::Matrix<double, 3, 2> g;
    for (int a = 0; a < 3; ++a) {
        const auto p1 = mesh.vertices.row(tri[(a + 1) % 3]);
        const auto p2 = mesh.vertices.row(tri[(a + 2) % 3]);
        g(a, 0) = (p1(1) - p2(1)) / area2;
        g(a, 1) = (p2(0) - p1(0)) / area2;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Quadrature on triangles
// ---------------------------------------------------------------------------

struct TriangleRule {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> weights;  // sum to 1 (multiply by the area)
};

/// Three edge midpoints, exact for quadratics.
inline const TriangleRule& edge_midpoint_rule()
{
    static const TriangleRule rule{{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
    return rule;
}

/// Seven-point rule exact for polynomials of degree 5.
inline const TriangleRule& seven_point_rule()
{
    static const TriangleRule rule = [] {
        const double a1 = 0.059715871789770, b1 = 0.470142064105115;
        const double a2 = 0.797426985353087, b2 = 0.101286507323456;
        const double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
        TriangleRule r;
        r.bary = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
                  {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
        r.weights = {w0, w1, w1, w1, w2, w2, w2};
        return r;
    }();
    return rule;
}

inline Eigen::Vector2d map_point(const StructuredMesh& mesh, std::size_t t, const std::array<double, 3>& bary)
{
    const auto& tri = mesh.triangles[t];
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    for (int a = 0; a < 3; ++a) x += bary[a] * mesh.vertices.row(tri[a]).transpose();
    return x;
}

// ---------------------------------------------------------------------------
// Gram matrices and the associated Hilbert spaces
// ---------------------------------------------------------------------------

struct GramMatrices {
    SparseMatrix mass;       // L2(Omega) inner products of hat functions
    SparseMatrix stiffness;  // gradient inner products (singular: annihilates constants)
};

inline GramMatrices gram_matrices(const StructuredMesh& mesh)
{
    std::vector<Eigen::Triplet<double>> mt, st;
    mt.reserve(9 * mesh.num_triangles());
    st.reserve(9 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double area = signed_area(mesh, t);
        const auto grad = barycentric_gradients(mesh, t);
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                mt.emplace_back(tri[a], tri[b], area / 12.0 * (a == b ? 2.0 : 1.0));
                st.emplace_back(tri[a], tri[b], area * grad.row(a).dot(grad.row(b)));
            }
    }
    const auto k = mesh.num_vertices();
    GramMatrices g{SparseMatrix(k, k), SparseMatrix(k, k)};
    g.mass.setFromTriplets(mt.begin(), mt.end());
    g.stiffness.setFromTriplets(st.begin(), st.end());
    return g;
}

/// Keeps interior rows/columns and puts 1 on the diagonal of boundary nodes.
/// For coordinate vectors vanishing on the boundary the quadratic form is unchanged.
inline SparseMatrix eliminate_boundary(const SparseMatrix& a, const std::vector<bool>& on_boundary)
{
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index c = 0; c < a.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(a, c); it; ++it)
            if (!on_boundary[it.row()] && !on_boundary[it.col()]) trip.emplace_back(it.row(), it.col(), it.value());
    for (std::size_t v = 0; v < on_boundary.size(); ++v)
        if (on_boundary[v]) trip.emplace_back(static_cast<int>(v), static_cast<int>(v), 1.0);
    SparseMatrix out(a.rows(), a.cols());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

/// V_h with the L2(Omega) inner product over all n^2 nodal coordinates.
inline SpacePtr l2_space(const StructuredMesh& mesh)
{
    return std::make_shared<const DiscreteHilbertSpace>(gram_matrices(mesh).mass, "L2");
}

/// V_h with the H1_0(Omega) inner product (gradient form). Boundary
/// coordinates, which are zero for every element of V_h, carry a unit weight
/// so that the Gram matrix stays positive definite.
inline SpacePtr h10_space(const StructuredMesh& mesh)
{
    return std::make_shared<const DiscreteHilbertSpace>(eliminate_boundary(gram_matrices(mesh).stiffness, mesh.on_boundary),
                                                        "H1_0");
}

// ---------------------------------------------------------------------------
// Coefficients and forcing
// ---------------------------------------------------------------------------

enum class CoefficientFamily { Affine, LogKL };

/**
 * The two diffusion coefficient families.
 *
 * Affine:  a(x, y) = 3 + x1 y1 + x2 y2 (d = 2).
 * LogKL:   a(x, y) = exp(1 + y1 (sqrt(pi) beta / 2)^{1/2} + sum_{i>=2} zeta_i theta_i(x) y_i),
 *          zeta_i = (sqrt(pi) beta)^{1/2} exp(-(floor(i/2) pi beta)^2 / 8),
 *          theta_i = sin(floor(i/2) pi x1 / beta_p) for even i, cos(...) for odd i,
 *          with beta_c = 1/8, beta_p = max(1, 2 beta_c), beta = beta_c / beta_p.
 */
class ParametricCoefficient {
public:
    static ParametricCoefficient affine()
    {
        ParametricCoefficient c(CoefficientFamily::Affine, 2);
        c.check_ellipticity();
        return c;
    }

    static ParametricCoefficient log_kl(int d, double beta_c = 0.125)
    {
        if (d < 1) throw std::invalid_argument("log_kl: d must be >= 1");
        ParametricCoefficient c(CoefficientFamily::LogKL, d);
        c.beta_c_ = beta_c;
        c.beta_p_ = std::max(1.0, 2.0 * beta_c);
        c.beta_ = c.beta_c_ / c.beta_p_;
        const double pi = std::numbers::pi;
        c.first_mode_ = std::sqrt(std::sqrt(pi) * c.beta_ / 2.0);
        c.zeta_.assign(static_cast<std::size_t>(d) + 1, 0.0);
        for (int i = 2; i <= d; ++i) {
            const double f = std::floor(i / 2.0) * pi * c.beta_;
            c.zeta_[i] = std::sqrt(std::sqrt(pi) * c.beta_) * std::exp(-f * f / 8.0);
        }
        c.check_ellipticity();
        return c;
    }

    CoefficientFamily family() const { return family_; }
    int dim() const { return dim_; }
    double beta() const { return beta_; }
    double beta_p() const { return beta_p_; }
    double zeta(int i) const { return zeta_.at(static_cast<std::size_t>(i)); }

    /// theta_i(x) for the LogKL family, 1-based i >= 2.
    double theta(int i, double x1) const
    {
        const double arg = std::floor(i / 2.0) * std::numbers::pi * x1 / beta_p_;
        return (i % 2 == 0) ? std::sin(arg) : std::cos(arg);
    }

    double operator()(double x1, double x2, std::span<const double> y) const
    {
        if (static_cast<int>(y.size()) != dim_) throw std::invalid_argument("coefficient: parameter dimension mismatch");
        double v;
        if (family_ == CoefficientFamily::Affine) {
            v = 3.0 + x1 * y[0] + x2 * y[1];
        } else {
            double e = 1.0 + y[0] * first_mode_;
            for (int i = 2; i <= dim_; ++i) e += zeta_[i] * theta(i, x1) * y[i - 1];
            v = std::exp(e);
        }
        if (!(v > 0.0)) {
            std::ostringstream msg;
            msg << "coefficient: non-positive value " << v << " at x=(" << x1 << "," << x2 << ")";
            throw std::domain_error(msg.str());
        }
        return v;
    }

    std::string descriptor() const
    {
        std::ostringstream os;
        if (family_ == CoefficientFamily::Affine)
            os << "affine d=2";
        else
            os << "logkl d=" << dim_ << " beta_c=" << beta_c_;
        return os.str();
    }

    /// Checks a > 0 on an 11 x 11 spatial grid for the parameter corners (d <= 4)
    /// or the all-equal corners, the origin and 64 seeded random parameters.
    void check_ellipticity() const
    {
        std::vector<std::vector<double>> ys;
        if (dim_ <= 4) {
            for (int mask = 0; mask < static_cast<int>(std::pow(3, dim_)); ++mask) {
                std::vector<double> y(static_cast<std::size_t>(dim_));
                for (int k = 0, r = mask; k < dim_; ++k, r /= 3) y[k] = (r % 3) - 1.0;
                ys.push_back(std::move(y));
            }
        } else {
            for (double v : {-1.0, 0.0, 1.0}) ys.emplace_back(static_cast<std::size_t>(dim_), v);
            const auto r = uniform_points(64, dim_, 12345);
            for (Eigen::Index i = 0; i < r.rows(); ++i) ys.emplace_back(r.row(i).data(), r.row(i).data() + dim_);
        }
        for (const auto& y : ys)
            for (int i = 0; i <= 10; ++i)
                for (int j = 0; j <= 10; ++j) (*this)(i / 10.0, j / 10.0, y);
    }

private:
    ParametricCoefficient(CoefficientFamily f, int d) : family_(f), dim_(d) {}

    CoefficientFamily family_;
    int dim_;
    double beta_c_ = 0.0, beta_p_ = 1.0, beta_ = 0.0, first_mode_ = 0.0;
    std::vector<double> zeta_;
};

/// Right-hand side g(x), independent of the parameters.
struct Forcing {
    std::function<double(double, double)> g;
    std::string descriptor;

    static Forcing constant(double value)
    {
        std::ostringstream os;
        os << "constant " << value;
        return {[value](double, double) { return value; }, os.str()};
    }

    /// g = 2 pi^2 sin(pi x1) sin(pi x2), whose solution for a = 1 is sin(pi x1) sin(pi x2).
    static Forcing manufactured_sine()
    {
        const double pi = std::numbers::pi;
        return {[pi](double x1, double x2) { return 2.0 * pi * pi * std::sin(pi * x1) * std::sin(pi * x2); },
                "manufactured sine"};
    }
};

inline constexpr double kDefaultForcing = 10.0;

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

class fem_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * P1 Galerkin solver for -div(a(x,y) grad u) = g, u = 0 on the boundary.
 *
 * Boundary unknowns are eliminated; the interior system is factorized by a
 * sparse Cholesky factorization whose symbolic analysis is shared across
 * parameter values. The coefficient integral on each triangle uses the
 * edge-midpoint rule; the load vector uses the seven-point rule.
 *
 * Not thread-safe; use one instance per thread.
 */
class DiffusionSolver {
public:
    DiffusionSolver(std::shared_ptr<const StructuredMesh> mesh, ParametricCoefficient coef, Forcing forcing)
        : mesh_(std::move(mesh)), coef_(std::move(coef)), forcing_(std::move(forcing))
    {
        const auto k = mesh_->num_vertices();
        interior_index_.assign(static_cast<std::size_t>(k), -1);
        for (Eigen::Index v = 0; v < k; ++v)
            if (!mesh_->on_boundary[v]) interior_index_[v] = num_interior_++;

        const auto nt = mesh_->num_triangles();
        local_.resize(nt);
        midpoints_.resize(nt);
        for (std::size_t t = 0; t < nt; ++t) {
            const double area = signed_area(*mesh_, t);
            if (!(area > 0.0)) throw fem_error("DiffusionSolver: degenerate or inverted triangle");
            const auto grad = barycentric_gradients(*mesh_, t);
            local_[t] = area * grad * grad.transpose();
            for (int q = 0; q < 3; ++q) midpoints_[t][q] = map_point(*mesh_, t, edge_midpoint_rule().bary[q]);
        }

        load_ = Eigen::VectorXd::Zero(num_interior_);
        const auto& rule = seven_point_rule();
        for (std::size_t t = 0; t < nt; ++t) {
            const double area = signed_area(*mesh_, t);
            const auto& tri = mesh_->triangles[t];
            for (std::size_t q = 0; q < rule.weights.size(); ++q) {
                const Eigen::Vector2d x = map_point(*mesh_, t, rule.bary[q]);
                const double gw = forcing_.g(x(0), x(1)) * rule.weights[q] * area;
                for (int a = 0; a < 3; ++a) {
                    const int r = interior_index_[tri[a]];
                    if (r >= 0) load_[r] += gw * rule.bary[q][a];
                }
            }
        }

        system_ = assemble(std::vector<double>(nt, 1.0));
        llt_.analyzePattern(system_);
    }

    const StructuredMesh& mesh() const { return *mesh_; }
    const ParametricCoefficient& coefficient() const { return coef_; }
    const Forcing& forcing() const { return forcing_; }
    Eigen::Index num_interior() const { return num_interior_; }

    /// Nodal values of the Galerkin solution at parameter y (boundary entries are exactly 0).
    Eigen::VectorXd solve(std::span<const double> y)
    {
        std::vector<double> abar(mesh_->num_triangles());
        for (std::size_t t = 0; t < abar.size(); ++t) {
            double s = 0.0;
            for (int q = 0; q < 3; ++q) s += coef_(midpoints_[t][q](0), midpoints_[t][q](1), y);
            abar[t] = s / 3.0;
        }
        system_ = assemble(abar);
        llt_.factorize(system_);
        if (llt_.info() != Eigen::Success) throw fem_error("DiffusionSolver: factorization failed at " + describe(y));
        const Eigen::VectorXd ui = llt_.solve(load_);
        if (llt_.info() != Eigen::Success || !ui.allFinite()) throw fem_error("DiffusionSolver: solve failed at " + describe(y));
        last_residual_ = (system_ * ui - load_).norm() / std::max(load_.norm(), 1e-300);

        Eigen::VectorXd u = Eigen::VectorXd::Zero(mesh_->num_vertices());
        for (Eigen::Index v = 0; v < u.size(); ++v)
            if (interior_index_[v] >= 0) u[v] = ui[interior_index_[v]];
        return u;
    }

    /// Relative residual of the last interior linear solve.
    double last_residual() const { return last_residual_; }

    /// Interior load vector and its L2 norm of g (seven-point rule).
    double forcing_l2_norm() const
    {
        double s = 0.0;
        const auto& rule = seven_point_rule();
        for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
            const double area = signed_area(*mesh_, t);
            for (std::size_t q = 0; q < rule.weights.size(); ++q) {
                const Eigen::Vector2d x = map_point(*mesh_, t, rule.bary[q]);
                const double g = forcing_.g(x(0), x(1));
                s += g * g * rule.weights[q] * area;
            }
        }
        return std::sqrt(s);
    }

private:
    SparseMatrix assemble(const std::vector<double>& abar) const
    {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(9 * abar.size());
        for (std::size_t t = 0; t < abar.size(); ++t) {
            const auto& tri = mesh_->triangles[t];
            for (int a = 0; a < 3; ++a) {
                const int r = interior_index_[tri[a]];
                if (r < 0) continue;
                for (int b = 0; b < 3; ++b) {
                    const int c = interior_index_[tri[b]];
                    if (c >= 0) trip.emplace_back(r, c, abar[t] * local_[t](a, b));
                }
            }
        }
        SparseMatrix s(num_interior_, num_interior_);
        s.setFromTriplets(trip.begin(), trip.end());
        return s;
    }

    static std::string describe(std::span<const double> y)
    {
        std::ostringstream os;
        os << "y=(";
        for (std::size_t k = 0; k < y.size(); ++k) os << (k ? "," : "") << y[k];
        os << ")";
        return os.str();
    }

    std::shared_ptr<const StructuredMesh> mesh_;
    ParametricCoefficient coef_;
    Forcing forcing_;
    std::vector<int> interior_index_;
    int num_interior_ = 0;
    std::vector<Eigen::Matrix3d> local_;
    std::vector<std::array<Eigen::Vector2d, 3>> midpoints_;
    Eigen::VectorXd load_;
    SparseMatrix system_;
    Eigen::SimplicialLLT<SparseMatrix> llt_;
    double last_residual_ = 0.0;
};

/// One-off solve; prefer DiffusionSolver for repeated solves.
inline Eigen::VectorXd solve_pde(const ParametricCoefficient& coef, const Forcing& forcing, const StructuredMesh& mesh,
                                 std::span<const double> y)
{
    DiffusionSolver solver(std::make_shared<const StructuredMesh>(mesh), coef, forcing);
    return solver.solve(y);
}

/// L2(Omega) distance between the P1 interpolant of `nodal` and an exact
/// function, by the seven-point rule on every triangle.
inline double l2_error(const StructuredMesh& mesh, const Eigen::VectorXd& nodal,
                       const std::function<double(double, double)>& exact)
{
    const auto& rule = seven_point_rule();
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double area = signed_area(mesh, t);
        const auto& tri = mesh.triangles[t];
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const Eigen::Vector2d x = map_point(mesh, t, rule.bary[q]);
            double uh = 0.0;
            for (int a = 0; a < 3; ++a) uh += rule.bary[q][a] * nodal[tri[a]];
            const double e = uh - exact(x(0), x(1));
            s += e * e * rule.weights[q] * area;
        }
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// Parameter samples and the nodal coefficient vectors of the solutions.
struct Dataset {
    PointSet points;        // m x d
    Eigen::MatrixXd values;  // m x K
    std::uint64_t seed = 0;
    std::string coefficient;
    std::string forcing;

    Eigen::Index size() const { return points.rows(); }

    /// First m samples.
    Dataset head(Eigen::Index m) const
    {
        if (m > size()) throw std::invalid_argument("Dataset::head: not enough samples");
        return Dataset{points.topRows(m), values.topRows(m), seed, coefficient, forcing};
    }
};

/// Solves the PDE at every row of `points`.
inline Eigen::MatrixXd solve_at(DiffusionSolver& solver, const PointSet& points)
{
    Eigen::MatrixXd values(points.rows(), solver.mesh().num_vertices());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const Eigen::VectorXd u = solver.solve(std::span<const double>(points.row(i).data(), points.cols()));
        values.row(i) = u.transpose();
    }
    return values;
}

/// m i.i.d. uniform parameter samples from `seed` and their FEM solutions.
inline Dataset generate_dataset(const ParametricCoefficient& coef, const Forcing& forcing,
                                std::shared_ptr<const StructuredMesh> mesh, Eigen::Index m, std::uint64_t seed)
{
    if (m < 1) throw std::invalid_argument("generate_dataset: m must be >= 1");
    DiffusionSolver solver(std::move(mesh), coef, forcing);
    Dataset ds;
    ds.points = uniform_points(m, coef.dim(), seed);
    ds.values = solve_at(solver, ds.points);
    ds.seed = seed;
    ds.coefficient = coef.descriptor();
    ds.forcing = forcing.descriptor;
    return ds;
}

} // namespace hvapprox::pde
