#pragma once

#include "voacx/elliptic.hpp"
#include "voacx/fock.hpp"
#include "voacx/genus0.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <vector>

namespace voacx {

/// Genus-one n-point function q^{shift} * sum_k c_k q^k.  The q^{-c/24} factor is kept
/// symbolically in `q_shift`; the series holds the integral powers.
template <class T>
struct Genus1ValueT {
    TruncatedSeries<T> series{"q", 0};
    Rational q_shift = rat(-1, 24);
    double error_estimate = 0.0;
    int weight_cutoff = 0;
};
using Genus1Value = Genus1ValueT<Complex>;

/// o(v) restricted to the Fock module below `cutoff`, written as alpha L(0) + beta, if it has that form.
struct ZeroModeForm {
    Rational alpha, beta;
};
std::optional<ZeroModeForm> classify_zero_mode(const FockVector& v, int cutoff);

/// Zero-mode part F(o(v) x_n).  Throws UnsupportedError when o(v) is not alpha L(0) + beta.
ZeroModeForm genus1_D1_form(const FockVector& v, int q_order);

/// Applies o(v) = alpha L(0) + beta to a genus-one value (coefficient of q^k scaled by alpha k + beta).
template <class T>
TruncatedSeries<T> apply_zero_mode_form(const ZeroModeForm& f, const TruncatedSeries<T>& s)
{
    TruncatedSeries<T> out(s.tag(), s.truncation(), s.min_exponent());
    for (const auto& [e, c] : s.terms()) out.set(e, c * scalar_from<T>(f.alpha * Rational(e) + f.beta));
    return out;
}

/// Insertions in multiplicative coordinates p_i = e^{z_i}.  The complex entry points below take
/// z_i; the templates take p_i directly, which keeps everything exact for rational p_i.
template <class T>
InsertionList<T> to_nomes(const InsertionList<T>& ins_z)
{
    InsertionList<T> out = ins_z;
    for (auto& x : out) x.point = std::exp(x.point);
    return out;
}

/// Tr_W Y(p_1^{L(0)} v_1, p_1) ... Y(p_n^{L(0)} v_n, p_n) q^{L(0) - c/24} over the Fock basis of
/// weight < q_order.  Intermediate states are restricted to weight < weight_cutoff and the
/// insertions are taken in order of decreasing |p_i| (the correlator is symmetric).
template <class T>
Genus1ValueT<T> genus1_trace_nomes(const InsertionList<T>& ins, int q_order, int weight_cutoff)
{
    if (q_order < 0) throw DomainError("q order must be nonnegative");
    if (weight_cutoff < q_order + 1)
        throw DomainError("weight cutoff " + std::to_string(weight_cutoff) + " too small for q order " +
                          std::to_string(q_order) + "; need at least " + std::to_string(q_order + 1));
    const auto& V = heisenberg();
    InsertionList<T> ord = ins;
    std::stable_sort(ord.begin(), ord.end(),
                     [](const auto& x, const auto& y) { return abs_value(x.point) > abs_value(y.point); });
    for (std::size_t i = 0; i + 1 < ord.size(); ++i)
        if (!(abs_value(ord[i].point) > abs_value(ord[i + 1].point)))
            throw DomainError("trace oracle needs distinct |p_i| for a convergent radial ordering");
    for (const auto& x : ord)
        if (is_zero(x.point)) throw SingularError("insertion at p = 0");

    std::vector<std::vector<std::pair<int, FockVector>>> pieces;
    for (const auto& x : ord) {
        std::vector<std::pair<int, FockVector>> p;
        for (const auto& [w, c] : x.state.homogeneous_components()) p.emplace_back(w, c);
        pieces.push_back(std::move(p));
    }

    Genus1ValueT<T> out;
    out.weight_cutoff = weight_cutoff;
    out.series = TruncatedSeries<T>("q", q_order, 0);
    double magnitude = 0.0;
    const std::size_t n = ord.size();
    for (int k = 0; k < q_order; ++k) {
        T coeff{};
        for (const auto& b : partitions_of(k)) {
            const FockVector fb(b);
            // Operators act right to left; the leftmost one must return to weight k.
            std::function<void(std::size_t, const FockVector&, int, const T&)> dfs = [&](std::size_t i, const FockVector& s,
                                                                                        int w, const T& factor) {
                if (i == 0) {
                    const Rational c = s.coeff(b);
                    if (c != 0) {
                        const T t = factor * scalar_from<T>(c);
                        coeff += t;
                        magnitude = std::max(magnitude, abs_value(t));
                    }
                    return;
                }
                const std::size_t op = i - 1;
                for (const auto& [wt, comp] : pieces[op]) {
                    const int lo = (op == 0) ? k : 0;
                    const int hi = (op == 0) ? k : weight_cutoff - 1;
                    for (int w2 = lo; w2 <= hi; ++w2) {
                        const int m = w + wt - 1 - w2;
                        FockVector t = V.mode(comp, m, s);
                        if (t.empty()) continue;
                        dfs(op, t, w2, factor * ipow(ord[op].point, wt - m - 1));
                    }
                }
            };
            dfs(n, fb, k, scalar_from<T>(Rational(1)));
        }
        out.series.set(k, coeff);
    }
    // Omitted intermediate weights carry at least (|p_{i+1}|/|p_i|)^{cutoff - q_order + 1}.
    double ratio = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        ratio = std::max(ratio, abs_value(ord[i + 1].point) / abs_value(ord[i].point));
    if (n >= 2) out.error_estimate = magnitude * std::pow(ratio, weight_cutoff - q_order + 1);
    return out;
}

/// One term kernel(q) * F(insertions) of a genus-one reduction.
template <class T>
struct Genus1Term {
    TruncatedSeries<T> kernel;
    InsertionList<T> insertions;
};

/// sum_k sum_{m>=0} P_{m+1}(z - z_k) F(.. v[m] v_k ..), with the Laurent-normalized P_1 and
/// insertion points given as nomes.
template <class T>
std::vector<Genus1Term<T>> genus1_D2_terms_nomes(const Insertion<T>& x_new, const InsertionList<T>& rest, int q_order)
{
    const auto& V = heisenberg();
    std::vector<Genus1Term<T>> terms;
    if (x_new.state.empty()) return terms;
    for (std::size_t k = 0; k < rest.size(); ++k) {
        if (rest[k].point == x_new.point) throw SingularError("coincident insertion points");
        if (rest[k].state.empty()) continue;
        const T x = x_new.point / rest[k].point;
        const int mmax = x_new.state.max_weight() + rest[k].state.max_weight() - 1;
        for (int m = 0; m <= mmax; ++m) {
            FockVector s = V.apply_square_bracket(x_new.state, m, rest[k].state);
            if (s.empty()) continue;
            InsertionList<T> ins = rest;
            ins[k].state = std::move(s);
            terms.push_back({pm_q_series(m + 1, x, q_order, true), std::move(ins)});
        }
    }
    return terms;
}

/// Partition function sum_k dim W_k q^k (times q^{-1/24}).
template <class T>
Genus1ValueT<T> genus1_partition_t(int q_order)
{
    Genus1ValueT<T> out;
    out.series = TruncatedSeries<T>("q", q_order, 0);
    for (int k = 0; k < q_order; ++k)
        out.series.set(k, scalar_from<T>(Rational(static_cast<long long>(partitions_of(k).size()))));
    return out;
}

/// Genus-one n-point function by iterated reduction down to the partition function.
template <class T>
Genus1ValueT<T> genus1_reduce_nomes(const InsertionList<T>& ins, int q_order)
{
    if (ins.empty()) return genus1_partition_t<T>(q_order);
    const InsertionList<T> rest(ins.begin() + 1, ins.end());
    Genus1ValueT<T> out;
    out.series = apply_zero_mode_form(genus1_D1_form(ins.front().state, q_order), genus1_reduce_nomes(rest, q_order).series);
    for (const auto& t : genus1_D2_terms_nomes(ins.front(), rest, q_order))
        out.series += t.kernel * genus1_reduce_nomes(t.insertions, q_order).series;
    return out;
}

/// Complex entry points with insertion points z_i (p_i = e^{z_i}).
Genus1Value genus1_trace(const InsertionList<Complex>& ins, int q_order, int weight_cutoff);
Genus1Value genus1_reduce(const InsertionList<Complex>& ins, int q_order);
Genus1Value genus1_partition(int q_order);
std::vector<Genus1Term<Complex>> genus1_D2_terms(const Insertion<Complex>& x_new, const InsertionList<Complex>& rest,
                                                 int q_order);

} // namespace voacx
