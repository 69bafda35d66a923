#pragma once

#include "voacx/elliptic.hpp"
#include "voacx/fock.hpp"

#include <map>
#include <tuple>
#include <vector>

namespace voacx {

/// A state inserted at a point (v, z).
template <class T>
struct Insertion {
    FockVector state;
    T point;
};

template <class T>
using InsertionList = std::vector<Insertion<T>>;

/// Transpose of v(n) on dual functionals: (v(n)^T phi)(w) = phi(v(n) w).
/// Functionals are stored as coefficient vectors over the partition basis.
FockVector transpose_mode(const FockVector& v, int n, const FockVector& phi);

/// <phi, w> for the coefficient pairing of the partition basis.
Rational pair_dual(const FockVector& phi, const FockVector& w);

/// One term c * <out'|Y(v_1,z_1)...Y(v_n,z_n)|in> of a genus-zero reduction.
template <class T>
struct Genus0Term {
    T coeff;
    InsertionList<T> insertions;
    FockVector out_dual;
    FockVector in;
};

/// Zero-mode and boundary part of inserting x_new to the left of `rest`:
/// sum_{n <= N-1} z^{-n-1} <v(n)^T out', X in> + sum_{n >= N} z^{-n-1} <out', X v(n) in>.
/// With vacuum boundaries only the zero mode of the vacuum component survives.
template <class T>
std::vector<Genus0Term<T>> genus0_D1_terms(const Insertion<T>& x_new, const InsertionList<T>& rest,
                                           const FockVector& out_dual, const FockVector& in)
{
    const auto& V = heisenberg();
    std::vector<Genus0Term<T>> terms;
    const T& z = x_new.point;
    for (const auto& [wt, comp] : x_new.state.homogeneous_components()) {
        const int wmax = out_dual.empty() ? 0 : out_dual.max_weight();
        for (int n = wt - 1 - wmax; n <= wt - 1; ++n) {
            FockVector phi = transpose_mode(comp, n, out_dual);
            if (phi.empty()) continue;
            if (z == T(0)) throw SingularError("insertion at the origin");
            terms.push_back({ipow(z, -n - 1), rest, std::move(phi), in});
        }
        const int imax = in.empty() ? -1 : in.max_weight();
        for (int n = wt; n <= wt + imax - 1; ++n) {
            FockVector w = V.mode(comp, n, in);
            if (w.empty()) continue;
            if (z == T(0)) throw SingularError("insertion at the origin");
            terms.push_back({ipow(z, -n - 1), rest, out_dual, std::move(w)});
        }
    }
    return terms;
}

/// Commutator part: sum_k sum_{j>=0} f_{N,j}(z, z_k) with v(j)v_k replacing v_k.
template <class T>
std::vector<Genus0Term<T>> genus0_D2_terms(const Insertion<T>& x_new, const InsertionList<T>& rest,
                                           const FockVector& out_dual, const FockVector& in)
{
    const auto& V = heisenberg();
    std::vector<Genus0Term<T>> terms;
    for (const auto& [wt, comp] : x_new.state.homogeneous_components()) {
        for (std::size_t k = 0; k < rest.size(); ++k) {
            if (rest[k].point == x_new.point) throw SingularError("coincident insertion points");
            if (rest[k].state.empty()) continue;
            for (int j = 0; j <= wt + rest[k].state.max_weight() - 1; ++j) {
                FockVector s = V.mode(comp, j, rest[k].state);
                if (s.empty()) continue;
                InsertionList<T> ins = rest;
                ins[k].state = std::move(s);
                terms.push_back({f0_eval<T>(wt, j, x_new.point, rest[k].point), std::move(ins), out_dual, in});
            }
        }
    }
    return terms;
}

namespace detail {

// Within one reduction the points never change; only the states and the boundary vectors do.
// Subproblems are keyed by the surviving point labels plus the current states.
using Genus0Key = std::tuple<std::vector<int>, std::vector<FockVector>, FockVector, FockVector>;

// Rough cost of v as an operator: modes of long normally ordered products are the expensive part.
inline std::size_t operator_cost(const FockVector& v)
{
    std::size_t c = 0;
    for (const auto& [p, x] : v.terms()) c += p.size() * p.size();
    return c;
}

template <class T>
T genus0_reduce_memo(const InsertionList<T>& ins, const std::vector<int>& ids, const FockVector& out_dual,
                     const FockVector& in, std::map<Genus0Key, T>& memo)
{
    if (ins.empty()) return scalar_from<T>(pair_dual(out_dual, in));
    std::vector<FockVector> states;
    for (const auto& x : ins) states.push_back(x.state);
    Genus0Key key{ids, std::move(states), out_dual, in};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    // Correlators are symmetric in their insertions, so the cheapest one is reduced first.
    std::size_t f = 0;
    for (std::size_t i = 1; i < ins.size(); ++i)
        if (operator_cost(ins[i].state) < operator_cost(ins[f].state)) f = i;
    InsertionList<T> rest;
    std::vector<int> rest_ids;
    for (std::size_t i = 0; i < ins.size(); ++i)
        if (i != f) {
            rest.push_back(ins[i]);
            rest_ids.push_back(ids[i]);
        }
    T total{};
    for (const auto& t : genus0_D1_terms(ins[f], rest, out_dual, in))
        total += t.coeff * genus0_reduce_memo(t.insertions, rest_ids, t.out_dual, t.in, memo);
    for (const auto& t : genus0_D2_terms(ins[f], rest, out_dual, in))
        total += t.coeff * genus0_reduce_memo(t.insertions, rest_ids, t.out_dual, t.in, memo);
    memo.emplace(std::move(key), total);
    return total;
}

} // namespace detail

/// Genus-zero n-point function by iterated reduction down to <out', in>.
template <class T>
T genus0_reduce(const InsertionList<T>& ins, const FockVector& out_dual, const FockVector& in)
{
    std::map<detail::Genus0Key, T> memo;
    std::vector<int> ids(ins.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    return detail::genus0_reduce_memo(ins, ids, out_dual, in, memo);
}

/// Exact rational form of a genus-zero correlator for homogeneous insertions:
/// P(z) / (prod_{i<j} (z_i - z_j)^{N_i+N_j} prod_i z_i^{K_i}), P homogeneous of degree `degree`.
struct Genus0Rational {
    std::vector<int> weights;     // N_i
    std::vector<int> pole_orders; // K_i
    int degree = 0;
    int max_intermediate_weight = 0;
    std::map<std::vector<int>, Rational> numerator;

    template <class T>
    T operator()(const std::vector<T>& z) const
    {
        const std::size_t n = weights.size();
        T num{};
        for (const auto& [e, c] : numerator) {
            T term = scalar_from<T>(c);
            for (std::size_t i = 0; i < n; ++i) term *= ipow(z[i], e[i]);
            num += term;
        }
        if (num == T{}) return num;
        T den = scalar_from<T>(Rational(1));
        for (std::size_t i = 0; i < n; ++i) {
            den *= ipow(z[i], pole_orders[i]);
            for (std::size_t j = i + 1; j < n; ++j) {
                if (z[i] == z[j]) throw SingularError("coincident insertion points");
                den *= ipow(T(z[i] - z[j]), weights[i] + weights[j]);
            }
        }
        return num / den;
    }
};

/// Brute-force mode expansion of <out'|Y(v_1,z_1)...Y(v_n,z_n)|in> for homogeneous v_i, in
/// and out: the Laurent coefficients in |z_1| > ... > |z_n| are enumerated through all
/// intermediate states, the denominators are cleared, and the polynomial numerator is read off.
Genus0Rational genus0_rational(const std::vector<FockVector>& states, const FockVector& out_dual, const FockVector& in);

/// Oracle value of the genus-zero n-point function (multilinear in every argument).
template <class T>
T genus0_npoint(const InsertionList<T>& ins, const FockVector& out_dual, const FockVector& in)
{
    for (std::size_t i = 0; i < ins.size(); ++i)
        for (std::size_t j = i + 1; j < ins.size(); ++j)
            if (ins[i].point == ins[j].point) throw SingularError("coincident insertion points");
    // Expand every argument into homogeneous pieces.
    std::vector<std::vector<FockVector>> pieces;
    for (const auto& x : ins) {
        std::vector<FockVector> p;
        for (const auto& [w, c] : x.state.homogeneous_components()) p.push_back(c);
        if (p.empty()) return T{};
        pieces.push_back(std::move(p));
    }
    std::vector<T> z;
    for (const auto& x : ins) z.push_back(x.point);
    T total{};
    std::vector<std::size_t> idx(ins.size(), 0);
    for (;;) {
        std::vector<FockVector> states;
        for (std::size_t i = 0; i < ins.size(); ++i) states.push_back(pieces[i][idx[i]]);
        for (const auto& [wo, o] : out_dual.homogeneous_components())
            for (const auto& [wi, u] : in.homogeneous_components()) total += genus0_rational(states, o, u)(z);
        std::size_t i = 0;
        while (i < idx.size() && ++idx[i] == pieces[i].size()) idx[i++] = 0;
        if (i == idx.size()) break;
    }
    return total;
}

} // namespace voacx
