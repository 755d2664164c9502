#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hvapprox {

/// A d-dimensional multi-index of nonnegative integers.
using MultiIndex = std::vector<int>;

inline constexpr std::size_t kDefaultCardinalityCap = 10'000'000;

class cardinality_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline long l1_norm(const MultiIndex& nu)
{
    return std::accumulate(nu.begin(), nu.end(), 0L);
}

/// Graded ordering: by l1 norm, ties broken by descending lexicographic order,
/// so that (1,0) precedes (0,1).
struct GradedLexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const
    {
        const long na = l1_norm(a), nb = l1_norm(b);
        if (na != nb) return na < nb;
        return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
    }
};

/**
 * Ordered set of distinct multi-indices of a fixed dimension.
 *
 * The order is always the graded order of GradedLexLess, so the column order
 * of every matrix assembled over the set is reproducible. The set is
 * immutable once constructed.
 */
class MultiIndexSet {
public:
    MultiIndexSet() = default;

    MultiIndexSet(int dim, std::vector<MultiIndex> indices, std::string tag = {})
        : dim_(dim), indices_(std::move(indices)), tag_(std::move(tag))
    {
        if (dim_ < 1) throw std::invalid_argument("MultiIndexSet: dimension must be >= 1");
        for (const auto& nu : indices_) {
            if (static_cast<int>(nu.size()) != dim_)
                throw std::invalid_argument("MultiIndexSet: index length differs from dimension");
            if (std::any_of(nu.begin(), nu.end(), [](int v) { return v < 0; }))
                throw std::invalid_argument("MultiIndexSet: negative entry in multi-index");
        }
        std::sort(indices_.begin(), indices_.end(), GradedLexLess{});
        indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    }

    int dim() const { return dim_; }
    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    const std::string& tag() const { return tag_; }

    const MultiIndex& operator[](std::size_t j) const { return indices_[j]; }
    auto begin() const { return indices_.begin(); }
    auto end() const { return indices_.end(); }
    const std::vector<MultiIndex>& indices() const { return indices_; }

    bool contains(const MultiIndex& nu) const
    {
        return std::binary_search(indices_.begin(), indices_.end(), nu, GradedLexLess{});
    }

    /// Position of nu in the canonical order, or size() if absent.
    std::size_t position(const MultiIndex& nu) const
    {
        auto it = std::lower_bound(indices_.begin(), indices_.end(), nu, GradedLexLess{});
        if (it == indices_.end() || *it != nu) return size();
        return static_cast<std::size_t>(it - indices_.begin());
    }

    bool is_subset_of(const MultiIndexSet& other) const
    {
        return std::all_of(indices_.begin(), indices_.end(),
                           [&](const MultiIndex& nu) { return other.contains(nu); });
    }

    friend bool operator==(const MultiIndexSet& a, const MultiIndexSet& b)
    {
        return a.dim_ == b.dim_ && a.indices_ == b.indices_;
    }

private:
    int dim_ = 1;
    std::vector<MultiIndex> indices_;
    std::string tag_;
};

namespace detail {

inline void hc_recurse(int k, long budget, MultiIndex& cur, std::vector<MultiIndex>& out,
                       std::size_t cap)
{
    const int d = static_cast<int>(cur.size());
    if (k == d) {
        if (out.size() >= cap)
            throw cardinality_error("hyperbolic_cross: cardinality exceeds cap of " +
                                    std::to_string(cap));
        out.push_back(cur);
        return;
    }
    // prod_{j<k}(nu_j + 1) * (v + 1) <= s  <=>  v + 1 <= budget
    for (long v = 0; v + 1 <= budget; ++v) {
        cur[k] = static_cast<int>(v);
        hc_recurse(k + 1, budget / (v + 1), cur, out, cap);
    }
    cur[k] = 0;
}

inline void aniso_recurse(int k, double remaining, std::span<const double> log_rho, double slack,
                          MultiIndex& cur, std::vector<MultiIndex>& out, std::size_t cap)
{
    const int d = static_cast<int>(cur.size());
    if (k == d) {
        if (out.size() >= cap)
            throw cardinality_error("anisotropic_set: cardinality exceeds cap of " +
                                    std::to_string(cap));
        out.push_back(cur);
        return;
    }
    for (int v = 0; v * log_rho[k] <= remaining + slack; ++v) {
        cur[k] = v;
        aniso_recurse(k + 1, remaining - v * log_rho[k], log_rho, slack, cur, out, cap);
    }
    cur[k] = 0;
}

} // namespace detail

/// Hyperbolic cross of index s-1: all nu with prod_k (nu_k + 1) <= s.
inline MultiIndexSet hyperbolic_cross(int d, long s, std::size_t cap = kDefaultCardinalityCap)
{
    if (d < 1) throw std::invalid_argument("hyperbolic_cross: d must be >= 1");
    if (s < 1) throw std::invalid_argument("hyperbolic_cross: s must be >= 1");
    std::vector<MultiIndex> out;
    MultiIndex cur(static_cast<std::size_t>(d), 0);
    detail::hc_recurse(0, s, cur, out, cap);
    return MultiIndexSet(d, std::move(out), "hyperbolic_cross s=" + std::to_string(s));
}

/// True iff the set is downward closed under the componentwise order.
///
/// It suffices to check that every nu - e_k (nu_k > 0) is present.
inline bool is_lower(const MultiIndexSet& set)
{
    for (const auto& nu : set) {
        MultiIndex mu = nu;
        for (std::size_t k = 0; k < mu.size(); ++k) {
            if (mu[k] == 0) continue;
            --mu[k];
            const bool present = set.contains(mu);
            ++mu[k];
            if (!present) return false;
        }
    }
    return true;
}

/**
 * Anisotropic set S_tau = { nu : prod_j rho_j^{-nu_j} >= tau }.
 *
 * Membership is decided in the log domain, sum_j nu_j log(rho_j) <= log(1/tau),
 * with a relative slack of 1e-12 so that indices on the boundary are members.
 */
inline MultiIndexSet anisotropic_set(std::span<const double> rho, double tau,
                                     std::size_t cap = kDefaultCardinalityCap)
{
    if (rho.empty()) throw std::invalid_argument("anisotropic_set: rho must be nonempty");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("anisotropic_set: tau must lie in (0,1)");
    std::vector<double> log_rho(rho.size());
    for (std::size_t j = 0; j < rho.size(); ++j) {
        if (!(rho[j] > 1.0)) throw std::invalid_argument("anisotropic_set: every rho_j must exceed 1");
        log_rho[j] = std::log(rho[j]);
    }
    const double budget = -std::log(tau);
    const double slack = 1e-12 * std::max(budget, 1e-300);
    std::vector<MultiIndex> out;
    MultiIndex cur(rho.size(), 0);
    detail::aniso_recurse(0, budget, log_rho, slack, cur, out, cap);
    std::ostringstream tag;
    tag.precision(17);
    tag << "anisotropic tau=" << tau;
    return MultiIndexSet(static_cast<int>(rho.size()), std::move(out), tag.str());
}

/// max_{nu in S} |nu|_1
inline int max_order(const MultiIndexSet& set)
{
    if (set.empty()) throw std::invalid_argument("max_order: empty index set");
    long best = 0;
    for (const auto& nu : set) best = std::max(best, l1_norm(nu));
    return static_cast<int>(best);
}

/// The three known upper bounds on |hyperbolic_cross(d, s)|. Values can
/// overflow to +inf for large d.
struct CardinalityBounds {
    double cubic;        // 2 s^3 4^d
    double polynomial;   // e^2 s^{2 + log d / log 2}
    double logarithmic;  // s (log s + d log 2)^{d-1} / (d-1)!

    double min() const { return std::min({cubic, polynomial, logarithmic}); }
};

inline CardinalityBounds cardinality_bounds(int d, long s)
{
    if (d < 1 || s < 1) throw std::invalid_argument("cardinality_bounds: d and s must be >= 1");
    const double sd = static_cast<double>(s);
    const double dd = static_cast<double>(d);
    const double ln2 = std::log(2.0);
    CardinalityBounds b{};
    b.cubic = std::exp(std::log(2.0) + 3.0 * std::log(sd) + dd * std::log(4.0));
    b.polynomial = std::exp(2.0 + (2.0 + std::log(dd) / ln2) * std::log(sd));
    // (d-1)! = Gamma(d), so 0! = 1 for d = 1.
    b.logarithmic = std::exp(std::log(sd) + (dd - 1.0) * std::log(std::log(sd) + dd * ln2) -
                             std::lgamma(dd));
    return b;
}

/// Text format: header "d=<d> n=<N>" followed by one space-separated index per line.
inline void write_index_set(std::ostream& os, const MultiIndexSet& set)
{
    os << "d=" << set.dim() << " n=" << set.size() << '\n';
    for (const auto& nu : set) {
        for (std::size_t k = 0; k < nu.size(); ++k) os << (k ? " " : "") << nu[k];
        os << '\n';
    }
}

inline MultiIndexSet read_index_set(std::istream& is)
{
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("read_index_set: missing header");
    int d = 0;
    long n = -1;
    if (std::sscanf(header.c_str(), "d=%d n=%ld", &d, &n) != 2 || d < 1 || n < 0)
        throw std::runtime_error("read_index_set: malformed header '" + header + "'");
    std::vector<MultiIndex> out;
    out.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        MultiIndex nu(static_cast<std::size_t>(d));
        for (auto& v : nu)
            if (!(is >> v)) throw std::runtime_error("read_index_set: truncated body");
        out.push_back(std::move(nu));
    }
    MultiIndexSet set(d, std::move(out));
    if (set.size() != static_cast<std::size_t>(n))
        throw std::runtime_error("read_index_set: duplicate indices in body");
    return set;
}

} // namespace hvapprox
