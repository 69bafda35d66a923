#include "voacx/genus0.hpp"

#include <functional>
#include <numeric>

namespace voacx {

FockVector transpose_mode(const FockVector& v, int n, const FockVector& phi)
{
    const auto& V = heisenberg();
    FockVector out;
    for (const auto& [wt, comp] : v.homogeneous_components()) {
        // v(n) raises weight by wt - n - 1, so its transpose lowers it.
        for (const auto& [wp, part] : phi.homogeneous_components()) {
            const int target = wp - (wt - n - 1);
            if (target < 0) continue;
            for (const auto& p : partitions_of(target)) {
                const Rational c = pair_dual(part, V.mode(comp, n, FockVector(p)));
                if (c != 0) out.add(p, c);
            }
        }
    }
    return out;
}

Rational pair_dual(const FockVector& phi, const FockVector& w)
{
    Rational s(0);
    const auto& small = phi.terms().size() <= w.terms().size() ? phi : w;
    const auto& large = phi.terms().size() <= w.terms().size() ? w : phi;
    for (const auto& [p, c] : small.terms()) {
        auto it = large.terms().find(p);
        if (it != large.terms().end()) s += c * it->second;
    }
    return s;
}

namespace {

using Exps = std::vector<int>;
using Poly = std::map<Exps, Rational>;

Poly poly_mul(const Poly& a, const Poly& b)
{
    Poly out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            Exps e(ea.size());
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            out[e] += ca * cb;
        }
    for (auto it = out.begin(); it != out.end();) it = (it->second == 0) ? out.erase(it) : std::next(it);
    return out;
}

} // namespace

Genus0Rational genus0_rational(const std::vector<FockVector>& states, const FockVector& out_dual, const FockVector& in)
{
    const auto& V = heisenberg();
    const std::size_t n = states.size();
    Genus0Rational r;
    r.pole_orders.assign(n, 0);
    if (out_dual.empty() || in.empty()) return r;
    for (const auto& s : states) r.weights.push_back(s.weight());
    const int w_in = in.weight();
    const int w_out = out_dual.weight();
    if (n == 0) {
        r.numerator[{}] = pair_dual(out_dual, in);
        return r;
    }

    // Pole order at z_i = 0 is bounded by the largest m + 1 with v_i(m) in != 0.
    for (std::size_t i = 0; i < n; ++i)
        for (int m = 0; m <= r.weights[i] + w_in - 1; ++m)
            if (!V.mode(states[i], m, in).empty()) r.pole_orders[i] = m + 1;

    int sum_n = 0, sum_k = 0, pair_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_n += r.weights[i];
        sum_k += r.pole_orders[i];
        for (std::size_t j = i + 1; j < n; ++j) pair_sum += r.weights[i] + r.weights[j];
    }
    r.degree = w_out - w_in - sum_n + pair_sum + sum_k;
    if (r.degree < 0) return r;

    // Exponent windows for the Laurent coefficients needed by the product.
    std::vector<int> a_min(n), a_max(n);
    for (std::size_t i = 0; i < n; ++i) {
        int b_max = r.pole_orders[i];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) b_max += r.weights[i] + r.weights[j];
        a_min[i] = -b_max;
        a_max[i] = r.degree - r.pole_orders[i];
    }
    // Reachable range of sum_{j<i} (N_j + a_j), for pruning.
    std::vector<int> lo_prefix(n + 1, 0), hi_prefix(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        lo_prefix[i + 1] = lo_prefix[i] + r.weights[i] + a_min[i];
        hi_prefix[i + 1] = hi_prefix[i] + r.weights[i] + a_max[i];
    }

    Poly series;
    Exps exps(n, 0);
    std::function<void(std::size_t, const FockVector&, int)> dfs = [&](std::size_t i, const FockVector& s, int w) {
        // Operators i-1, ..., 0 (zero-based) remain; current state s has weight w.
        if (i == 0) {
            if (w != w_out) return;
            const Rational c = pair_dual(out_dual, s);
            if (c != 0) series[exps] += c;
            return;
        }
        const std::size_t op = i - 1;
        for (int a = a_min[op]; a <= a_max[op]; ++a) {
            const int w_next = w + r.weights[op] + a;
            if (w_next < 0) continue;
            const int need = w_out - w_next; // sum over the remaining operators 0..op-1
            if (need < lo_prefix[op] || need > hi_prefix[op]) continue;
            FockVector t = V.mode(states[op], -a - 1, s);
            if (t.empty()) continue;
            r.max_intermediate_weight = std::max(r.max_intermediate_weight, w_next);
            exps[op] = a;
            dfs(op, t, w_next);
        }
    };
    dfs(n, in, w_in);

    // Clearing factor prod_{i<j} (z_i - z_j)^{N_i+N_j} prod z_i^{K_i}.
    Poly factor{{Exps(n, 0), Rational(1)}};
    for (std::size_t i = 0; i < n; ++i) {
        Exps e(n, 0);
        e[i] = r.pole_orders[i];
        factor = poly_mul(factor, Poly{{e, Rational(1)}});
        for (std::size_t j = i + 1; j < n; ++j) {
            const int p = r.weights[i] + r.weights[j];
            Poly binom_poly;
            for (int t = 0; t <= p; ++t) {
                Exps be(n, 0);
                be[i] = p - t;
                be[j] = t;
                binom_poly[be] = binomial(static_cast<long long>(p), t) * ((t % 2) ? Rational(-1) : Rational(1));
            }
            factor = poly_mul(factor, binom_poly);
        }
    }
    for (const auto& [ea, ca] : series) {
        for (const auto& [eb, cb] : factor) {
            Exps e(n);
            bool keep = true;
            for (std::size_t i = 0; i < n && keep; ++i) {
                e[i] = ea[i] + eb[i];
                keep = e[i] >= 0 && e[i] <= r.degree;
            }
            if (keep) r.numerator[e] += ca * cb;
        }
    }
    for (auto it = r.numerator.begin(); it != r.numerator.end();)
        it = (it->second == 0) ? r.numerator.erase(it) : std::next(it);
    for (const auto& [e, c] : r.numerator)
        if (std::accumulate(e.begin(), e.end(), 0) != r.degree) throw std::logic_error("genus-zero numerator is not homogeneous");
    return r;
}

} // namespace voacx
