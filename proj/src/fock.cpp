#include "voacx/fock.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace voacx {

int partition_weight(const Partition& p) { return std::accumulate(p.begin(), p.end(), 0); }

Partition canonical_partition(Partition p)
{
    for (int part : p)
        if (part <= 0) throw DomainError("partition parts must be positive");
    std::sort(p.begin(), p.end(), std::greater<>());
    return p;
}

std::string partition_string(const Partition& p)
{
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
    os << '}';
    return os.str();
}

namespace {

void partitions_rec(int remaining, int max_part, Partition& prefix, std::vector<Partition>& out)
{
    if (remaining == 0) {
        out.push_back(prefix);
        return;
    }
    for (int part = 1; part <= std::min(remaining, max_part); ++part) {
        prefix.push_back(part);
        partitions_rec(remaining - part, part, prefix, out);
        prefix.pop_back();
    }
}

} // namespace

std::vector<Partition> partitions_of(int weight)
{
    std::vector<Partition> out;
    if (weight < 0) return out;
    Partition prefix;
    partitions_rec(weight, weight, prefix, out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Partition> fock_basis(int weight_cutoff)
{
    std::vector<Partition> out;
    for (int w = 0; w < weight_cutoff; ++w) {
        auto ps = partitions_of(w);
        out.insert(out.end(), ps.begin(), ps.end());
    }
    return out;
}

// FockVector

FockVector::FockVector(const Partition& p, Rational c, int cutoff) : cutoff_(cutoff)
{
    add(canonical_partition(p), c);
}

Rational FockVector::coeff(const Partition& p) const
{
    auto it = terms_.find(p);
    return it == terms_.end() ? Rational(0) : it->second;
}

void FockVector::add(const Partition& p, const Rational& c)
{
    if (c == 0 || partition_weight(p) >= cutoff_) return;
    auto [it, inserted] = terms_.try_emplace(p, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

FockVector FockVector::truncated(int cutoff) const
{
    FockVector out(std::min(cutoff, cutoff_));
    for (const auto& [p, c] : terms_) out.add(p, c);
    return out;
}

bool FockVector::is_homogeneous() const
{
    if (terms_.empty()) return true;
    const int w = partition_weight(terms_.begin()->first);
    return std::all_of(terms_.begin(), terms_.end(), [w](const auto& t) { return partition_weight(t.first) == w; });
}

int FockVector::weight() const
{
    if (terms_.empty()) throw DomainError("weight of the zero vector");
    if (!is_homogeneous()) throw DomainError("weight of a non-homogeneous vector");
    return partition_weight(terms_.begin()->first);
}

int FockVector::max_weight() const
{
    int w = -1;
    for (const auto& [p, c] : terms_) w = std::max(w, partition_weight(p));
    return w;
}

std::map<int, FockVector> FockVector::homogeneous_components() const
{
    std::map<int, FockVector> out;
    for (const auto& [p, c] : terms_) {
        auto [it, inserted] = out.try_emplace(partition_weight(p), FockVector(cutoff_));
        it->second.add(p, c);
    }
    return out;
}

FockVector& FockVector::operator+=(const FockVector& b)
{
    cutoff_ = std::min(cutoff_, b.cutoff_);
    if (cutoff_ != kExact) *this = truncated(cutoff_);
    for (const auto& [p, c] : b.terms_) add(p, c);
    return *this;
}

FockVector& FockVector::operator-=(const FockVector& b)
{
    FockVector nb = b;
    nb *= Rational(-1);
    return *this += nb;
}

FockVector& FockVector::operator*=(const Rational& s)
{
    if (s == 0) {
        terms_.clear();
        return *this;
    }
    for (auto& [p, c] : terms_) c *= s;
    return *this;
}

std::string FockVector::str() const
{
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [p, c] : terms_) {
        os << (first ? "" : " + ") << c << "*" << partition_string(p);
        first = false;
    }
    return os.str();
}

// HeisenbergVoa

namespace {

// Applies a(j), j != 0, to a basis partition; returns coefficient and new partition.
bool apply_generator(int j, Partition& p, Rational& coeff)
{
    if (j < 0) {
        p.insert(std::upper_bound(p.begin(), p.end(), -j, std::greater<>()), -j);
        return true;
    }
    const auto mult = std::count(p.begin(), p.end(), j);
    if (mult == 0) return false;
    coeff *= Rational(j * mult);
    p.erase(std::find(p.begin(), p.end(), j));
    return true;
}

} // namespace

FockVector HeisenbergVoa::omega_tilde()
{
    FockVector w = omega();
    w.add(Partition{}, -rat(central_charge, 24));
    return w;
}

FockVector HeisenbergVoa::heisenberg_mode(int n, const FockVector& v)
{
    const int out_cutoff = detail::sat_add(v.cutoff(), -n);
    FockVector out(out_cutoff);
    if (n == 0) return out;
    for (const auto& [p, c] : v.terms()) {
        Partition q = p;
        Rational k = c;
        if (apply_generator(n, q, k)) out.add(q, k);
    }
    return out;
}

FockVector HeisenbergVoa::basis_mode(const Partition& v, int n, const Partition& w) const
{
    {
        std::lock_guard lock(cache_mutex_);
        auto it = cache_.find({v, n, w});
        if (it != cache_.end()) return it->second;
    }
    const int big_n = partition_weight(v);
    const int ww = partition_weight(w);
    const int total = n + 1 - big_n; // sum of the a-mode indices
    FockVector out;
    const int k = static_cast<int>(v.size());
    if (k == 0) {
        if (n == -1) out.add(w, Rational(1));
    } else if (ww + big_n - n - 1 >= 0) {
        // Enumerate nonzero indices j_0..j_{k-1} summing to `total`; positive indices are
        // annihilators (total at most ww), negative ones creators.
        const int result_weight = ww + big_n - n - 1;
        const int neg_bound = result_weight; // sum of |creators| cannot exceed the result weight
        std::vector<int> js(static_cast<std::size_t>(k));
        // Annihilators a(j) need a part j left in w; creators of d^(v_r - 1) a(z) need |j| >= v_r.
        std::map<int, int> avail;
        for (int part : w) ++avail[part];
        auto allowed = [&](int r, int j) {
            if (j == 0) return false;
            if (j < 0) return -j >= v[static_cast<std::size_t>(r)];
            auto it = avail.find(j);
            return it != avail.end() && it->second > 0;
        };
        std::function<void(int, int, int)> rec = [&](int i, int pos_sum, int neg_sum) {
            auto take = [&](int j) {
                if (j > 0) --avail[j];
            };
            auto give = [&](int j) {
                if (j > 0) ++avail[j];
            };
            if (i == k - 1) {
                const int j = total - (pos_sum - neg_sum);
                if (!allowed(i, j)) return;
                if (j > 0 && pos_sum + j > ww) return;
                if (j < 0 && neg_sum - j > neg_bound) return;
                js[static_cast<std::size_t>(i)] = j;
                Rational coeff(1);
                for (int r = 0; r < k; ++r)
                    coeff *= binomial(-static_cast<long long>(js[static_cast<std::size_t>(r)]) - 1, v[static_cast<std::size_t>(r)] - 1);
                if (coeff == 0) return;
                Partition p = w;
                for (int r = 0; r < k; ++r)
                    if (js[static_cast<std::size_t>(r)] > 0 && !apply_generator(js[static_cast<std::size_t>(r)], p, coeff)) return;
                for (int r = 0; r < k; ++r)
                    if (js[static_cast<std::size_t>(r)] < 0) apply_generator(js[static_cast<std::size_t>(r)], p, coeff);
                out.add(p, coeff);
                return;
            }
            for (int j = -(neg_bound - neg_sum); j <= ww - pos_sum; ++j) {
                if (!allowed(i, j)) continue;
                js[static_cast<std::size_t>(i)] = j;
                take(j);
                rec(i + 1, pos_sum + std::max(j, 0), neg_sum + std::max(-j, 0));
                give(j);
            }
        };
        rec(0, 0, 0);
    }
    std::lock_guard lock(cache_mutex_);
    cache_.emplace(std::tuple{v, n, w}, out);
    return out;
}

FockVector HeisenbergVoa::mode(const FockVector& v, int n, const FockVector& w) const
{
    int out_cutoff = kExact;
    if (w.cutoff() != kExact && !v.empty()) out_cutoff = detail::sat_add(w.cutoff(), v.max_weight() - n - 1);
    FockVector out(out_cutoff);
    for (const auto& [pv, cv] : v.terms()) {
        for (const auto& [pw, cw] : w.terms()) {
            FockVector t = basis_mode(pv, n, pw);
            t *= cv * cw;
            out += t;
        }
    }
    return out;
}

RationalSeries HeisenbergVoa::vertex_matrix_element(const FockVector& v, const Partition& u_out,
                                                    const Partition& u_in) const
{
    RationalSeries out("z", kExact, 0);
    const FockVector in(u_in);
    const int w_out = partition_weight(u_out);
    const int w_in = partition_weight(u_in);
    for (const auto& [wt, comp] : v.homogeneous_components()) {
        // v(n): V_m -> V_{m + wt - n - 1}, so exactly one mode contributes.
        const int n = w_in + wt - 1 - w_out;
        const Rational c = mode(comp, n, in).coeff(u_out);
        out.add_to(-n - 1, c);
    }
    return out;
}

FockVector HeisenbergVoa::apply_zero_mode(const FockVector& v, const FockVector& w) const
{
    FockVector out(w.cutoff());
    for (const auto& [wt, comp] : v.homogeneous_components()) out += mode(comp, wt - 1, w);
    return out;
}

Operator HeisenbergVoa::zero_mode(const FockVector& v) const
{
    return [this, v](const FockVector& w) { return apply_zero_mode(v, w); };
}

std::vector<Rational> HeisenbergVoa::bracket_coefficients(int wt, int i)
{
    // Polynomial prod_{r<i} (wt - 1 - r + x) / i!
    std::vector<Rational> poly{Rational(1)};
    for (int r = 0; r < i; ++r) {
        const Rational c0(wt - 1 - r);
        std::vector<Rational> next(poly.size() + 1, Rational(0));
        for (std::size_t d = 0; d < poly.size(); ++d) {
            next[d] += poly[d] * c0;
            next[d + 1] += poly[d];
        }
        poly = std::move(next);
    }
    const Rational f = factorial(i);
    for (auto& c : poly) c /= f;
    return poly;
}

FockVector HeisenbergVoa::apply_square_bracket(const FockVector& v, int m, const FockVector& w) const
{
    if (m < 0) throw DomainError("square-bracket conversion requires m >= 0");
    FockVector out(w.cutoff());
    if (w.empty()) return out;
    const int ww = w.max_weight();
    const Rational mf = factorial(m);
    for (const auto& [wt, comp] : v.homogeneous_components()) {
        for (int i = m; i <= ww + wt - 1; ++i) {
            const auto c = bracket_coefficients(wt, i);
            const Rational cim = static_cast<std::size_t>(m) < c.size() ? c[static_cast<std::size_t>(m)] : Rational(0);
            if (cim == 0) continue;
            FockVector t = mode(comp, i, w);
            t *= mf * cim;
            out += t;
        }
    }
    return out;
}

Operator HeisenbergVoa::square_bracket_mode(const FockVector& v, int m) const
{
    if (m < 0) throw DomainError("square-bracket conversion requires m >= 0");
    return [this, v, m](const FockVector& w) { return apply_square_bracket(v, m, w); };
}

FockVector HeisenbergVoa::virasoro_mode(int m, const FockVector& v)
{
    FockVector out(detail::sat_add(v.cutoff(), -m));
    for (const auto& [p, c] : v.terms()) {
        const int w = partition_weight(p);
        // Normally ordered pairs (j, m - j), both nonzero; annihilators act first.
        const int lo = std::min(-w + m, -w) - 1;
        const int hi = std::max(w + std::abs(m), w) + 1;
        for (int j = lo; j <= hi; ++j) {
            const int k = m - j;
            if (j == 0 || k == 0) continue;
            int first = j, second = k; // `second` acts first when it is the annihilator
            if (first > 0 && second < 0) std::swap(first, second);
            Partition q = p;
            Rational coeff = c / 2;
            if (!apply_generator(second, q, coeff)) continue;
            if (!apply_generator(first, q, coeff)) continue;
            out.add(q, coeff);
        }
    }
    return out;
}

FockVector HeisenbergVoa::virasoro_bracket_mode(int m, const FockVector& v) const
{
    return apply_square_bracket(omega_tilde(), m + 1, v);
}

bool HeisenbergVoa::is_quasiprimary(const FockVector& u) { return virasoro_mode(1, u).empty(); }

Rational HeisenbergVoa::bilinear_form(const FockVector& u, const FockVector& w, const Rational& alpha) const
{
    // Peel the largest part: <a(-n)u', w> = <u', a^dagger(-n) w> with a^dagger(-n) = -alpha^{-n} a(n).
    Rational total(0);
    for (const auto& [p, c] : u.terms()) {
        FockVector cur = w;
        Rational scale = c;
        for (int part : p) {
            cur = heisenberg_mode(part, cur);
            scale *= -ipow(alpha, -part);
            if (cur.empty()) break;
        }
        total += scale * cur.coeff(Partition{});
    }
    return total;
}

Operator HeisenbergVoa::adjoint_mode(const FockVector& u, int n, const Rational& alpha) const
{
    if (u.empty()) return [](const FockVector& w) { return FockVector(w.cutoff()); };
    if (!u.is_homogeneous()) throw DomainError("adjoint mode requires a homogeneous state");
    if (!is_quasiprimary(u)) throw DomainError("adjoint mode requires a quasiprimary state (L(1)u = 0)");
    const int wt = u.weight();
    const Rational pref = ((wt % 2) ? Rational(-1) : Rational(1)) * ipow(alpha, n + 1 - wt);
    const int idx = 2 * wt - n - 2;
    return [this, u, pref, idx](const FockVector& w) {
        FockVector out = mode(u, idx, w);
        out *= pref;
        return out;
    };
}

FockVector HeisenbergVoa::form_dual(const Partition& p, const Rational& alpha) const
{
    const FockVector v(p);
    const Rational norm = bilinear_form(v, v, alpha);
    return FockVector(p, Rational(1) / norm);
}

const HeisenbergVoa& heisenberg()
{
    static const HeisenbergVoa instance;
    return instance;
}

FockVector parse_state(const std::string& text)
{
    if (text == "vacuum" || text == "1" || text == "{}") return FockVector::vacuum();
    if (text == "a") return HeisenbergVoa::a_state();
    if (text == "omega") return HeisenbergVoa::omega();
    if (text == "omega~" || text == "omega_tilde") return HeisenbergVoa::omega_tilde();
    Partition p;
    std::string s = text;
    s.erase(std::remove_if(s.begin(), s.end(), [](char ch) { return ch == '{' || ch == '}' || ch == ' '; }), s.end());
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            p.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw DomainError("unrecognized state '" + text + "'");
        }
    }
    return FockVector(canonical_partition(p));
}

} // namespace voacx
