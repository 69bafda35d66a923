#pragma once

#include "voacx/rational.hpp"
#include "voacx/series.hpp"

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

namespace voacx {

/// Parts n1 >= n2 >= ... >= 1 of a(-n1)...a(-nk)1.  The empty partition is the vacuum.
using Partition = std::vector<int>;

int partition_weight(const Partition& p);
Partition canonical_partition(Partition p);
std::string partition_string(const Partition& p);

/// All partitions of all weights below `weight_cutoff`, weight-major then lexicographic.
std::vector<Partition> fock_basis(int weight_cutoff);

/// Partitions of exactly `weight`, lexicographic.
std::vector<Partition> partitions_of(int weight);

/// Finite linear combination of Fock basis states.
///
/// Components of weight >= cutoff are unknown (dropped); kExact means the vector is exact.
class FockVector {
public:
    using map_type = std::map<Partition, Rational>;

    FockVector() = default;
    explicit FockVector(int cutoff) : cutoff_(cutoff) {}
    FockVector(const Partition& p, Rational c = Rational(1), int cutoff = kExact);

    static FockVector vacuum() { return FockVector(Partition{}); }

    const map_type& terms() const { return terms_; }
    int cutoff() const { return cutoff_; }
    bool empty() const { return terms_.empty(); }

    Rational coeff(const Partition& p) const;
    void add(const Partition& p, const Rational& c);

    /// Lowers the cutoff, dropping components that fall outside it.
    FockVector truncated(int cutoff) const;

    bool is_homogeneous() const;
    /// Weight of a homogeneous nonzero vector; throws otherwise.
    int weight() const;
    int max_weight() const;
    std::map<int, FockVector> homogeneous_components() const;

    FockVector& operator+=(const FockVector& b);
    FockVector& operator-=(const FockVector& b);
    FockVector& operator*=(const Rational& s);
    friend FockVector operator+(FockVector a, const FockVector& b) { return a += b; }
    friend FockVector operator-(FockVector a, const FockVector& b) { return a -= b; }
    friend FockVector operator*(const Rational& s, FockVector a) { return a *= s; }
    friend bool operator==(const FockVector& a, const FockVector& b) { return a.terms_ == b.terms_; }
    friend bool operator<(const FockVector& a, const FockVector& b) { return a.terms_ < b.terms_; }

    std::string str() const;

private:
    map_type terms_;
    int cutoff_ = kExact;
};

using Operator = std::function<FockVector(const FockVector&)>;

/// Rank-one Heisenberg vertex operator algebra (free boson, c = 1) acting on its
/// charge-zero Fock module.  Vertex-operator modes use the normally ordered realization
/// Y(a(-n1)...a(-nk)1, z) = :d^(n1-1)a(z) ... d^(nk-1)a(z):, d^(r) = (1/r!) (d/dz)^r.
class HeisenbergVoa {
public:
    static constexpr int central_charge = 1;

    /// a = a(-1)1
    static FockVector a_state() { return FockVector(Partition{1}); }
    /// omega = (1/2) a(-1)^2 1
    static FockVector omega() { return FockVector(Partition{1, 1}, rat(1, 2)); }
    /// Square-bracket conformal vector omega - (c/24) 1.
    static FockVector omega_tilde();

    /// Action of the Heisenberg generator mode a(n).
    static FockVector heisenberg_mode(int n, const FockVector& v);

    /// v(n) w for arbitrary v, w.
    FockVector mode(const FockVector& v, int n, const FockVector& w) const;

    /// <u_out', Y(v,z) u_in> as a (monomial) Laurent series in z.  The dual is the
    /// coefficient functional of the partition basis.
    RationalSeries vertex_matrix_element(const FockVector& v, const Partition& u_out, const Partition& u_in) const;

    /// o(v) = v(wt v - 1), extended additively over homogeneous components.
    Operator zero_mode(const FockVector& v) const;
    FockVector apply_zero_mode(const FockVector& v, const FockVector& w) const;

    /// v[m] = m! sum_{i>=m} c(wt v, i, m) v(i), for m >= 0.
    Operator square_bracket_mode(const FockVector& v, int m) const;
    FockVector apply_square_bracket(const FockVector& v, int m, const FockVector& w) const;

    /// L(m) as the normally ordered quadratic (1/2) sum_j :a(j) a(m-j):.
    static FockVector virasoro_mode(int m, const FockVector& v);

    /// Square-bracket Virasoro mode L[m] = omega_tilde[m+1].
    FockVector virasoro_bracket_mode(int m, const FockVector& v) const;

    /// Invariant bilinear form with <1,1> = 1 and adjoint parameter alpha.
    Rational bilinear_form(const FockVector& u, const FockVector& w, const Rational& alpha = Rational(1)) const;

    static bool is_quasiprimary(const FockVector& u);

    /// u^dagger(n) = (-1)^wt(u) alpha^(n+1-wt u) u(2 wt u - n - 2) for quasiprimary homogeneous u.
    Operator adjoint_mode(const FockVector& u, int n, const Rational& alpha = Rational(1)) const;

    /// Dual of a basis state under the alpha = 1 bilinear form: <dual(p), p> = 1.
    FockVector form_dual(const Partition& p, const Rational& alpha = Rational(1)) const;

    /// Coefficients c(wt, i, m) for m = 0..i: [x^m] binom(wt - 1 + x, i).
    static std::vector<Rational> bracket_coefficients(int wt, int i);

private:
    FockVector basis_mode(const Partition& v, int n, const Partition& w) const;

    mutable std::mutex cache_mutex_;
    mutable std::map<std::tuple<Partition, int, Partition>, FockVector> cache_;
};

/// Shared instance used by the higher modules.
const HeisenbergVoa& heisenberg();

/// Parses "vacuum", "a", "omega", "omega~", or a sorted list like "2,1" (a(-2)a(-1)1).
FockVector parse_state(const std::string& text);

} // namespace voacx
