#pragma once

#include "voacx/eigen_rational.hpp"
#include "voacx/genus1.hpp"
#include "voacx/schottky.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace voacx {

// ---------------------------------------------------------------------------
// Chain elements

/// Realization of a correlator: a sphere with sewn handles (genus = number of handles), or the
/// torus trace with insertion points given as nomes p_i = e^{z_i}.
enum class Model { schottky, torus };

template <class T>
struct ChainElement {
    Model model = Model::schottky;
    InsertionList<T> insertions;
    std::vector<SewingData<T>> handles;          // schottky model
    FockVector out_dual = FockVector::vacuum();  // sphere boundaries
    FockVector in = FockVector::vacuum();
    int q_order = 8;                             // torus model
    /// Coefficients in the nomes: none at genus 0, q on the torus (times q^{-1/24}), one rho per handle.
    RhoSeries<T> value;
    /// Set when a genus-g reduction has already evaluated the value at the handle moduli.
    bool at_moduli = false;

    int genus() const { return model == Model::torus ? 1 : static_cast<int>(handles.size()); }
    int n() const { return static_cast<int>(insertions.size()); }

    std::vector<T> moduli() const
    {
        std::vector<T> r;
        for (const auto& h : handles) r.push_back(h.rho);
        return r;
    }

    /// The number F at the handle moduli.  Undefined on the torus, where q stays formal.
    T scalar() const
    {
        if (model == Model::torus) throw DomainError("torus values are formal q-series");
        if (at_moduli || handles.empty()) return value.coeff({});
        return value.value(moduli());
    }
};

template <class T>
RhoSeries<T> rho_from_series(const TruncatedSeries<T>& s)
{
    RhoSeries<T> r;
    r.orders = {s.truncation()};
    for (const auto& [e, c] : s.terms()) {
        if (e < 0) throw DomainError("negative powers of q are not carried");
        r.coeffs[{e}] = c;
    }
    return r;
}

template <class T>
RhoSeries<T> rho_scalar(const T& c)
{
    RhoSeries<T> r;
    if (!is_zero(c)) r.coeffs[{}] = c;
    return r;
}

/// acc += c x.  Orders must agree unless acc is still empty; coefficients are dropped when zero.
template <class T>
void rho_axpy(RhoSeries<T>& acc, const T& c, const RhoSeries<T>& x)
{
    if (acc.coeffs.empty() && acc.orders.empty()) acc.orders = x.orders;
    if (acc.orders.size() != x.orders.size()) throw DomainError("adding series in different numbers of nomes");
    for (std::size_t i = 0; i < acc.orders.size(); ++i) acc.orders[i] = std::min(acc.orders[i], x.orders[i]);
    for (const auto& [k, v] : x.coeffs) {
        bool inside = true;
        for (std::size_t i = 0; i < k.size(); ++i) inside = inside && k[i] < acc.orders[i];
        if (!inside) continue;
        T& slot = acc.coeffs[k];
        slot += c * v;
        if (is_zero(slot)) acc.coeffs.erase(k);
    }
}

/// Largest coefficient of a - b.
template <class T>
double rho_residual(const RhoSeries<T>& a, const RhoSeries<T>& b)
{
    RhoSeries<T> d = a;
    rho_axpy(d, T(-1), b);
    double r = 0.0;
    for (const auto& [k, v] : d.coeffs) r = std::max(r, abs_value(v));
    return r;
}

template <class T>
double rho_norm(const RhoSeries<T>& a)
{
    double r = 0.0;
    for (const auto& [k, v] : a.coeffs) r = std::max(r, abs_value(v));
    return r;
}

template <class T>
SewnCorrelator<T> as_sewn(const ChainElement<T>& F)
{
    SewnCorrelator<T> S;
    S.insertions = F.insertions;
    S.handles = F.handles;
    S.out_dual = F.out_dual;
    S.in = F.in;
    return S;
}

/// The value of F computed from its insertions by the module's evaluators: genus-zero reduction,
/// the handle sum, or genus-one reduction in nomes.
template <class T>
RhoSeries<T> evaluate_element(const ChainElement<T>& F)
{
    if (F.model == Model::torus) return rho_from_series(genus1_reduce_nomes(F.insertions, F.q_order).series);
    return evaluate(as_sewn(F));
}

template <class T>
ChainElement<T> sphere_element(InsertionList<T> ins, FockVector out_dual = FockVector::vacuum(),
                               FockVector in = FockVector::vacuum())
{
    ChainElement<T> F;
    F.insertions = std::move(ins);
    F.out_dual = std::move(out_dual);
    F.in = std::move(in);
    F.value = evaluate_element(F);
    return F;
}

/// Insertion points are nomes p_i.
template <class T>
ChainElement<T> torus_element(InsertionList<T> nomes, int q_order)
{
    ChainElement<T> F;
    F.model = Model::torus;
    F.insertions = std::move(nomes);
    F.q_order = q_order;
    F.value = evaluate_element(F);
    return F;
}

template <class T>
ChainElement<T> sewn_element(InsertionList<T> ins, std::vector<SewingData<T>> handles)
{
    ChainElement<T> F;
    F.insertions = std::move(ins);
    F.handles = std::move(handles);
    F.value = evaluate_element(F);
    return F;
}

/// Deviation between the stored value and a fresh evaluation from the insertions.
template <class T>
double self_consistency(const ChainElement<T>& F)
{
    const RhoSeries<T> v = evaluate_element(F);
    if (F.at_moduli) return abs_value(F.scalar() - v.value(F.moduli()));
    return rho_residual(F.value, v);
}

// ---------------------------------------------------------------------------
// Reduction differentials

/// Truncation for the genus-g forms psi_p and theta_a.
struct GenusGOptions {
    int mode_cutoff = 12;
    int neumann_order = 30;
    std::vector<ComplexSeries> f; // f_l of psi0; zero by default
};

namespace detail {

// c with v = c 1, or nullopt if v has components of positive weight.
inline std::optional<Rational> vacuum_multiple(const FockVector& v)
{
    for (const auto& [p, c] : v.terms())
        if (!p.empty()) return std::nullopt;
    return v.coeff(Partition{});
}

template <class T>
void check_new_point(const Insertion<T>& x, const ChainElement<T>& F)
{
    for (const auto& y : F.insertions)
        if (y.point == x.point) throw SingularError("coincident insertion points");
    for (const auto& h : F.handles)
        if (x.point == h.zeta2 || (h.zeta1 && x.point == *h.zeta1))
            throw DomainError("insertion point coincides with a sewing point");
}

// Weight of a homogeneous quasiprimary state, the only kind the genus-g reduction accepts.
inline int quasiprimary_weight(const FockVector& v)
{
    if (v.empty() || !v.is_homogeneous() || !HeisenbergVoa::is_quasiprimary(v))
        throw DomainError("genus-g reduction needs a homogeneous quasiprimary state");
    return v.weight();
}

inline GenusGForms genus_g_forms(const std::vector<SewingData<Complex>>& handles, int p, const GenusGOptions& opts)
{
    SchottkyData sd;
    sd.genus = static_cast<int>(handles.size());
    for (const auto& h : handles) {
        if (!h.zeta1) throw UnsupportedError("genus-g reduction needs finite sewing points");
        sd.rho.push_back(h.rho);
        sd.w.push_back(*h.zeta1);
        sd.w.push_back(h.zeta2);
    }
    sd.p = p;
    sd.f = opts.f;
    sd.mode_cutoff = std::max(opts.mode_cutoff, 2 * p - 1);
    sd.neumann_order = opts.neumann_order;
    return build_R(sd);
}

template <class T>
void require_complex_genus_g(const ChainElement<T>& F)
{
    if constexpr (!std::is_same_v<T, Complex>)
        throw UnsupportedError("genus-g reduction is evaluated numerically; use complex scalars");
    if (!(F.out_dual == FockVector::vacuum() && F.in == FockVector::vacuum()))
        throw UnsupportedError("genus-g reduction needs vacuum boundaries");
}

} // namespace detail

/// D_1 summand of inserting x in front of F.
/// genus 0: zero-mode and boundary terms; torus: o(v) as alpha L(0) + beta on the trace;
/// genus g: sum_a sum_l theta_a(y; l) O_a(v; l), evaluated at the handle moduli.
template <class T>
RhoSeries<T> apply_D1(const Insertion<T>& x, const ChainElement<T>& F, const GenusGOptions& opts = {})
{
    detail::check_new_point(x, F);
    if (F.model == Model::torus)
        return rho_from_series(apply_zero_mode_form(genus1_D1_form(x.state, F.q_order), F.value.to_series("q")));
    if (F.handles.empty()) {
        RhoSeries<T> out;
        for (const auto& t : genus0_D1_terms(x, F.insertions, F.out_dual, F.in))
            rho_axpy(out, t.coeff, rho_scalar(genus0_reduce(t.insertions, t.out_dual, t.in)));
        return out;
    }
    if (auto c = detail::vacuum_multiple(x.state)) {
        RhoSeries<T> out;
        rho_axpy(out, scalar_from<T>(*c), F.value);
        return out;
    }
    detail::require_complex_genus_g(F);
    if constexpr (std::is_same_v<T, Complex>) {
        const int p = detail::quasiprimary_weight(x.state);
        const GenusGForms forms = detail::genus_g_forms(F.handles, p, opts);
        const std::vector<T> rho = F.moduli();
        Complex total(0);
        for (int a = 1; a <= F.genus(); ++a) {
            const Eigen::VectorXcd th = theta(forms, a, x.point);
            SewnCorrelator<T> S = as_sewn(F);
            for (int l = 0; l <= 2 * p - 2; ++l) {
                S.handle_mode = HandleMode{static_cast<std::size_t>(a - 1), x.state, l};
                total += th(l) * evaluate(S).value(rho);
            }
        }
        return rho_scalar(total);
    }
    return {};
}

/// D_2 summand: sum_k sum_m kernel(y, y_k) F(.. v(m) v_k ..), with the f kernels at genus 0,
/// P_{m+1} and square-bracket modes on the torus, and d^(0,m) psi_p at genus g.
template <class T>
RhoSeries<T> apply_D2(const Insertion<T>& x, const ChainElement<T>& F, const GenusGOptions& opts = {})
{
    detail::check_new_point(x, F);
    if (F.model == Model::torus) {
        TruncatedSeries<T> s("q", F.q_order, 0);
        for (const auto& t : genus1_D2_terms_nomes(x, F.insertions, F.q_order))
            s += t.kernel * genus1_reduce_nomes(t.insertions, F.q_order).series;
        return rho_from_series(s);
    }
    if (F.handles.empty()) {
        RhoSeries<T> out;
        for (const auto& t : genus0_D2_terms(x, F.insertions, F.out_dual, F.in))
            rho_axpy(out, t.coeff, rho_scalar(genus0_reduce(t.insertions, t.out_dual, t.in)));
        return out;
    }
    if (detail::vacuum_multiple(x.state)) {
        RhoSeries<T> out;
        out.orders = F.value.orders;
        return out;
    }
    detail::require_complex_genus_g(F);
    if constexpr (std::is_same_v<T, Complex>) {
        const auto& V = heisenberg();
        const int p = detail::quasiprimary_weight(x.state);
        const GenusGForms forms = detail::genus_g_forms(F.handles, p, opts);
        const std::vector<T> rho = F.moduli();
        Complex total(0);
        for (std::size_t k = 0; k < F.insertions.size(); ++k) {
            const FockVector& vk = F.insertions[k].state;
            if (vk.empty()) continue;
            for (int j = 0; j <= p + vk.max_weight() - 1; ++j) {
                FockVector s = V.mode(x.state, j, vk);
                if (s.empty()) continue;
                SewnCorrelator<T> S = as_sewn(F);
                S.insertions[k].state = std::move(s);
                total += psi_p(forms, x.point, F.insertions[k].point, j) * evaluate(S).value(rho);
            }
        }
        return rho_scalar(total);
    }
    return {};
}

/// D^n(x) = D_1 + D_2: the (n+1)-point element with x placed first.
template <class T>
ChainElement<T> apply_Dn(const Insertion<T>& x, const ChainElement<T>& F, const GenusGOptions& opts = {})
{
    ChainElement<T> out = F;
    RhoSeries<T> v = apply_D1(x, F, opts);
    const RhoSeries<T> d2 = apply_D2(x, F, opts);
    rho_axpy(v, T(1), d2);
    const bool numeric = F.model == Model::schottky && !F.handles.empty() && !detail::vacuum_multiple(x.state);
    out.at_moduli = F.at_moduli || numeric;
    if (numeric && !F.at_moduli) v.orders.clear();
    out.value = std::move(v);
    out.insertions.insert(out.insertions.begin(), x);
    return out;
}

/// D^g: one more handle, attached after the existing insertions and summed to rho_order.
template <class T>
ChainElement<T> apply_Dg(const ChainElement<T>& F, const SewingData<T>& sd, int rho_order)
{
    if (F.model == Model::torus)
        throw DomainError("D^g acts on the Schottky model; the torus is the sphere sewn at infinity");
    ChainElement<T> out = F;
    out.value = rho_sew(as_sewn(F), sd, rho_order);
    out.handles.push_back(sd);
    out.handles.back().rho_order = rho_order;
    out.at_moduli = false;
    return out;
}

/// Descriptor of one differential application.
enum class DifferentialKind { D1, D2, Dn, Dg, total };

template <class T>
struct DifferentialDescriptor {
    DifferentialKind kind = DifferentialKind::Dn;
    int genus = 0;
    std::optional<Insertion<T>> inserted_x; // x_{n+1,g} for D^n and its summands
    std::optional<SewingData<T>> sewing;    // handle for D^g
    int rho_order = 4;
    bool graded_sign = true;                // the (-1)^g in front of D^n inside d^m
};

// ---------------------------------------------------------------------------
// Total complex

/// Choices for the block C^{g,n}: the inserted x_{n+1,g} and the handle used by D^g.  An empty
/// choice switches that summand off.
template <class T>
struct BlockDescriptor {
    std::optional<Insertion<T>> x;
    std::optional<SewingData<T>> sewing;
    int rho_order = 4;
};

/// c * F for one chain element.
template <class T>
struct ChainTerm {
    T coeff;
    ChainElement<T> element;
};

/// An element of Tot^m: chain combinations keyed by (g, n).
template <class T>
using TotalElement = std::map<std::pair<int, int>, std::vector<ChainTerm<T>>>;

/// Value of a formal combination; numeric at the moduli as soon as one member is.
template <class T>
RhoSeries<T> combination_value(const std::vector<ChainTerm<T>>& terms)
{
    bool numeric = false;
    for (const auto& t : terms) numeric = numeric || t.element.at_moduli;
    RhoSeries<T> out;
    for (const auto& t : terms) {
        if (numeric)
            rho_axpy(out, t.coeff, rho_scalar(t.element.scalar()));
        else
            rho_axpy(out, t.coeff, t.element.value);
    }
    return out;
}

template <class T>
struct TotalDifferential {
    int m = 0;
    std::map<std::pair<int, int>, BlockDescriptor<T>> blocks;
    GenusGOptions opts;

    /// The summands D^g and (-1)^g D^n(x_{n+1,g}, g) of d^m, one descriptor each.
    std::vector<DifferentialDescriptor<T>> summands() const
    {
        std::vector<DifferentialDescriptor<T>> out;
        for (const auto& [gn, b] : blocks) {
            if (b.sewing) out.push_back({DifferentialKind::Dg, gn.first, std::nullopt, b.sewing, b.rho_order, false});
            if (b.x) out.push_back({DifferentialKind::Dn, gn.first, b.x, std::nullopt, b.rho_order, true});
        }
        return out;
    }

    TotalElement<T> apply(const TotalElement<T>& c) const
    {
        TotalElement<T> out;
        for (const auto& [gn, terms] : c) {
            const auto [g, n] = gn;
            if (g + n != m) throw DomainError("block outside Tot^" + std::to_string(m));
            const auto& b = blocks.at(gn);
            const T sign = (g % 2) ? T(-1) : T(1);
            for (const auto& t : terms) {
                if (t.element.genus() != g || t.element.n() != n) throw DomainError("chain element filed under the wrong block");
                if (b.sewing) out[{g + 1, n}].push_back({t.coeff, apply_Dg(t.element, *b.sewing, b.rho_order)});
                if (b.x) out[{g, n + 1}].push_back({sign * t.coeff, apply_Dn(*b.x, t.element, opts)});
            }
        }
        return out;
    }
};

/// d^m = sum_{g+n=m} (D^g + (-1)^g D^n(x_{n+1,g}, g)); every block (g, m-g) needs a descriptor.
template <class T>
TotalDifferential<T> total_differential(int m, const std::map<std::pair<int, int>, BlockDescriptor<T>>& blocks,
                                        const GenusGOptions& opts = {})
{
    if (m < 0) throw DomainError("total degree must be nonnegative");
    for (int g = 0; g <= m; ++g)
        if (!blocks.count({g, m - g}))
            throw DomainError("missing descriptor for block (" + std::to_string(g) + "," + std::to_string(m - g) + ")");
    for (const auto& [gn, b] : blocks)
        if (gn.first + gn.second != m) throw DomainError("descriptor for a block outside Tot^" + std::to_string(m));
    return {m, blocks, opts};
}

// ---------------------------------------------------------------------------
// Chain conditions

enum class ChainCondition { n, g, gn, total };

inline const char* condition_name(ChainCondition c)
{
    switch (c) {
    case ChainCondition::n: return "nconditions";
    case ChainCondition::g: return "gconditions";
    case ChainCondition::gn: return "gnconditions";
    case ChainCondition::total: return "totalcondition";
    }
    return "";
}

/// Candidate set whose membership a condition tests.
inline const char* condition_set(ChainCondition c)
{
    switch (c) {
    case ChainCondition::n: return "V_n";
    case ChainCondition::g: return "V_g";
    case ChainCondition::gn: return "V_{g,n}";
    case ChainCondition::total: return "V_d";
    }
    return "";
}

template <class T>
struct ConditionCase {
    ChainCondition condition = ChainCondition::n;
    std::string label;
    ChainElement<T> F;
    std::optional<Insertion<T>> x, x2;  // the two D^n choices
    std::optional<SewingData<T>> h, h2; // the two D^g choices
    int rho_order = 4;
};

struct ConditionResidual {
    ChainCondition condition = ChainCondition::n;
    std::string label;
    double residual = 0.0;   // largest coefficient of the graded composition
    bool exact_zero = false; // every coefficient is exactly 0
    double raw_norm = 0.0;   // largest coefficient of the plain composition
    bool within_tolerance = false;
    std::string error;       // set instead of throwing
};

namespace detail {

template <class T>
RhoSeries<T> swap_last_two(const RhoSeries<T>& s)
{
    RhoSeries<T> out;
    out.orders = s.orders;
    const std::size_t d = s.orders.size();
    if (d < 2) return s;
    std::swap(out.orders[d - 1], out.orders[d - 2]);
    for (const auto& [key, c] : s.coeffs) {
        auto k = key;
        std::swap(k[d - 1], k[d - 2]);
        out.coeffs[k] = c;
    }
    return out;
}

struct Graded {
    double residual = 0.0, raw = 0.0;
    bool exact = true;
};

template <class T>
Graded compare_values(const ChainElement<T>& A, const ChainElement<T>& B, bool swap_handles = false)
{
    Graded out;
    if (A.at_moduli || B.at_moduli) {
        const T d = A.scalar() - B.scalar();
        out.residual = abs_value(d);
        out.exact = is_zero(d);
        out.raw = abs_value(A.scalar());
        return out;
    }
    const RhoSeries<T> b = swap_handles ? swap_last_two(B.value) : B.value;
    RhoSeries<T> d = A.value;
    rho_axpy(d, T(-1), b);
    out.residual = rho_norm(d);
    out.exact = d.coeffs.empty();
    out.raw = rho_norm(A.value);
    return out;
}

// D^{n+1}(x2) D^n(x) - D^{n+1}(x) D^n(x2)
template <class T>
Graded graded_n(const ConditionCase<T>& c, const GenusGOptions& o)
{
    if (!c.x || !c.x2) throw DomainError("the D^n condition needs two insertions");
    return compare_values(apply_Dn(*c.x2, apply_Dn(*c.x, c.F, o), o), apply_Dn(*c.x, apply_Dn(*c.x2, c.F, o), o));
}

// D^{g+1}(h2) D^g(h) - D^{g+1}(h) D^g(h2), handle variables matched
template <class T>
Graded graded_g(const ConditionCase<T>& c)
{
    if (!c.h || !c.h2) throw DomainError("the D^g condition needs two handles");
    return compare_values(apply_Dg(apply_Dg(c.F, *c.h, c.rho_order), *c.h2, c.rho_order),
                          apply_Dg(apply_Dg(c.F, *c.h2, c.rho_order), *c.h, c.rho_order), true);
}

// D^g D^n(x) - D^n(x) D^g
template <class T>
Graded graded_gn(const ConditionCase<T>& c, const GenusGOptions& o)
{
    if (!c.x || !c.h) throw DomainError("the commutation condition needs an insertion and a handle");
    return compare_values(apply_Dg(apply_Dn(*c.x, c.F, o), *c.h, c.rho_order),
                          apply_Dn(*c.x, apply_Dg(c.F, *c.h, c.rho_order), o));
}

} // namespace detail

/// Residuals of the chain conditions on sample elements.  A plain composition D(x')D(x)F is the
/// (n+2)-point function, so each condition is measured by its graded form: the difference of the
/// two composition orders.  In d^{m+1} d^m the (-1)^g sign makes the mixed block exactly the
/// commutator D^g D^n - D^n D^g; the pure blocks use the two descriptor choices.  Failures are
/// reported, never thrown.
template <class T>
std::vector<ConditionResidual> check_chain_conditions(const std::vector<ConditionCase<T>>& suite, double tol = 1e-9,
                                                      const GenusGOptions& opts = {})
{
    std::vector<ConditionResidual> out;
    for (const auto& c : suite) {
        ConditionResidual r;
        r.condition = c.condition;
        r.label = c.label;
        try {
            detail::Graded g;
            switch (c.condition) {
            case ChainCondition::n: g = detail::graded_n(c, opts); break;
            case ChainCondition::g: g = detail::graded_g(c); break;
            case ChainCondition::gn: g = detail::graded_gn(c, opts); break;
            case ChainCondition::total: {
                // Blocks (g+2,n), (g+1,n+1), (g,n+2) of d^{m+1} d^m; absent choices switch a block off.
                if (c.h && c.h2) {
                    const auto a = detail::graded_g(c);
                    g.residual = std::max(g.residual, a.residual);
                    g.raw = std::max(g.raw, a.raw);
                    g.exact = g.exact && a.exact;
                }
                if (c.h && c.x) {
                    const auto a = detail::graded_gn(c, opts);
                    g.residual = std::max(g.residual, a.residual);
                    g.raw = std::max(g.raw, a.raw);
                    g.exact = g.exact && a.exact;
                }
                if (c.x && c.x2) {
                    const auto a = detail::graded_n(c, opts);
                    g.residual = std::max(g.residual, a.residual);
                    g.raw = std::max(g.raw, a.raw);
                    g.exact = g.exact && a.exact;
                }
                break;
            }
            }
            r.residual = g.residual;
            r.exact_zero = g.exact;
            r.raw_norm = g.raw;
            r.within_tolerance = g.exact || g.residual <= tol;
        } catch (const std::exception& e) {
            r.error = e.what();
            r.residual = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reduction to zero-point functions

template <class T>
struct ZeroPointFactorization {
    RhoSeries<T> P;          // P_n(F; g, n, x)
    RhoSeries<T> zero_point; // F_0 on the same surface
    int steps = 0;           // reduction steps taken, one per insertion
};

/// F = P_n F_0.  F_0 is the zero-point function with the same boundaries and handles; P_n is F / F_0
/// as a nome series (one nome) or a number at the moduli (genus 0, or several handles).
template <class T>
ZeroPointFactorization<T> reduce_to_zero_point(const ChainElement<T>& F)
{
    ZeroPointFactorization<T> out;
    out.steps = F.n();
    ChainElement<T> F0 = F;
    F0.insertions.clear();
    F0.at_moduli = false;
    F0.value = evaluate_element(F0);
    out.zero_point = F0.value;
    if (F.insertions.empty()) {
        out.P = F0.value.orders.empty() ? rho_scalar(T(1)) : rho_from_series(TruncatedSeries<T>::constant("q", T(1), F0.value.orders[0]));
        out.P.orders = F0.value.orders;
        return out;
    }
    const bool series = !F.at_moduli && F0.value.orders.size() == 1;
    if (series) {
        const TruncatedSeries<T> f0 = F0.value.to_series("q");
        if (f0.is_zero() || f0.valuation() != 0) throw DomainError("zero-point function vanishes; P_n is undefined");
        out.P = rho_from_series((F.value.to_series("q") * series_invert(f0)).truncated(F0.value.orders[0]));
        return out;
    }
    const T f0 = F0.scalar();
    if (is_zero(f0)) throw DomainError("zero-point function vanishes; P_n is undefined");
    out.P = rho_scalar(F.scalar() / f0);
    if (!F.at_moduli && !F.handles.empty()) out.zero_point = rho_scalar(f0);
    return out;
}

/// P_n F_0 as a nome series or number, for round-trip checks.
template <class T>
RhoSeries<T> recombine(const ZeroPointFactorization<T>& z)
{
    if (z.P.orders.size() == 1) {
        const auto p = z.P.to_series("q"), f0 = z.zero_point.to_series("q");
        return rho_from_series((p * f0).truncated(std::min(p.truncation(), f0.truncation())));
    }
    return rho_scalar(z.P.coeff({}) * z.zero_point.coeff({}));
}

// ---------------------------------------------------------------------------
// Connection functional

/// The operator F of the connection form as a combination of the two identified pieces:
/// the handle sum (weight `sewing`) and the bracketed D_1 + D_2 combination (weight `reduction`).
template <class T>
struct ConnectionOperator {
    T sewing{};
    T reduction{};
    bool sum_from_one = true; // handle sum over k >= 1; false keeps the k = 0 term
    int rho_order = 4;

    static ConnectionOperator identified() { return {T(1), T(1), true, 4}; }
    friend ConnectionOperator operator+(ConnectionOperator a, const ConnectionOperator& b)
    {
        a.sewing += b.sewing;
        a.reduction += b.reduction;
        return a;
    }
};

/// The psi slot: a genus tag, the insertion x_{n+1,g}, and the handle.
template <class T>
struct ConnectionSlot {
    int genus = 0;
    std::optional<Insertion<T>> x;
    std::optional<SewingData<T>> sewing;
};

template <class T>
struct ConnectionReport {
    RhoSeries<T> G_value;
    std::array<RhoSeries<T>, 3> components; // F(psi).G(phi), F(phi).G(psi), G(F(psi).phi)
    std::string identification_used;
    double residual = 0.0;
    bool vanishes = false; // G in Con^m at this truncation
};

namespace detail {

// Adds a trailing nome with exponent 0.
template <class T>
RhoSeries<T> with_extra_nome(const RhoSeries<T>& s, int order)
{
    RhoSeries<T> out;
    out.orders = s.orders;
    out.orders.push_back(order);
    for (const auto& [k, c] : s.coeffs) {
        auto k2 = k;
        k2.push_back(0);
        out.coeffs[k2] = c;
    }
    return out;
}

} // namespace detail

/// G = F(psi).G(phi) + F(phi).G(psi) + G(F(psi).phi) with G the correlator evaluator and F_op
/// expanded on the identified pieces:
///   F(psi).G(phi)   = -sewing * sum_{k >= 1} rho^k T(w_k', zeta1, w_k, zeta2).F_m
///   G(F(psi).phi)   = -(-1)^g reduction * (D_1 + D_2)(x).F_m
/// The middle term has no identification and is 0.
template <class T>
ConnectionReport<T> connection_functional(const ConnectionOperator<T>& op, const ConnectionSlot<T>& psi,
                                          const ChainElement<T>& phi, double tol = 1e-9, const GenusGOptions& opts = {})
{
    if (psi.genus != phi.genus()) throw DomainError("psi and phi carry different genus tags");
    if (psi.sewing && phi.model == Model::torus) throw DomainError("the handle sum acts on the Schottky model");
    ConnectionReport<T> r;
    r.identification_used = std::string("handle sum k >= ") + (op.sum_from_one ? "1" : "0") +
                            "; -(-1)^g (D_1 + D_2); middle term 0";
    // Third term first: it decides whether the report is a series or a number at the moduli.
    std::optional<ChainElement<T>> D;
    if (psi.x && !is_zero(op.reduction)) D = apply_Dn(*psi.x, phi, opts);
    const bool numeric = D && D->at_moduli;
    const T sign = (phi.genus() % 2) ? T(1) : T(-1);

    RhoSeries<T> c1, c3;
    if (psi.sewing) {
        if (!is_zero(op.sewing)) {
            RhoSeries<T> v = apply_Dg(phi, *psi.sewing, op.rho_order).value;
            if (op.sum_from_one)
                for (auto it = v.coeffs.begin(); it != v.coeffs.end();)
                    it = it->first.back() == 0 ? v.coeffs.erase(it) : std::next(it);
            rho_axpy(c1, -op.sewing, v);
        } else {
            c1.orders = phi.value.orders;
            c1.orders.push_back(op.rho_order);
        }
        if (numeric) {
            std::vector<T> rho = phi.moduli();
            rho.push_back(psi.sewing->rho);
            c1 = rho_scalar(c1.value(rho));
        }
    }
    if (D) {
        rho_axpy(c3, sign * op.reduction, numeric ? rho_scalar(D->scalar()) : D->value);
        if (psi.sewing && !numeric) c3 = detail::with_extra_nome(c3, op.rho_order);
    } else {
        c3.orders = numeric || !psi.sewing ? phi.value.orders : c1.orders;
    }
    if (!psi.sewing) c1.orders = c3.orders;
    if (numeric) c1.orders.clear(), c3.orders.clear();
    RhoSeries<T> c2;
    c2.orders = c1.orders;
    r.components = {c1, c2, c3};
    r.G_value = c1;
    rho_axpy(r.G_value, T(1), c2);
    rho_axpy(r.G_value, T(1), c3);
    r.residual = rho_norm(r.G_value);
    r.vanishes = r.G_value.coeffs.empty() || r.residual <= tol;
    return r;
}

// ---------------------------------------------------------------------------
// Truncated genus-zero probe complex and cohomology ranks

/// C^{0,n} is truncated to multilinear functionals on slot_states[n-1] x ... x slot_states[0], with
/// the k-th insertion at points[k].  Slot states must be single partition basis vectors; components
/// of v(j) v_k outside a slot's span are dropped.
template <class T>
struct ProbeComplex {
    std::vector<std::vector<Partition>> slot_states;
    std::vector<T> points;

    int max_n() const { return static_cast<int>(slot_states.size()); }

    Eigen::Index dim(int n) const
    {
        Eigen::Index d = 1;
        for (int k = 0; k < n; ++k) d *= static_cast<Eigen::Index>(slot_states[static_cast<std::size_t>(k)].size());
        return d;
    }

    /// Slot states of tuple `idx` in C^{0,n}, listed newest first (slot n-1 ... slot 0).
    std::vector<Partition> tuple(int n, Eigen::Index idx) const
    {
        std::vector<Partition> out(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const auto& S = slot_states[static_cast<std::size_t>(k)];
            const auto s = static_cast<Eigen::Index>(S.size());
            out[static_cast<std::size_t>(n - 1 - k)] = S[static_cast<std::size_t>(idx % s)];
            idx /= s;
        }
        return out;
    }

    InsertionList<T> insertions(int n, Eigen::Index idx) const
    {
        InsertionList<T> ins;
        const auto t = tuple(n, idx);
        for (int i = 0; i < n; ++i) ins.push_back({FockVector(t[static_cast<std::size_t>(i)]), points[static_cast<std::size_t>(n - 1 - i)]});
        return ins;
    }
};

/// The truncated probe with the full Fock basis below weight_cutoff in every slot.
template <class T>
ProbeComplex<T> fock_probe(int weight_cutoff, const std::vector<T>& points)
{
    ProbeComplex<T> p;
    for (std::size_t k = 0; k < points.size(); ++k) p.slot_states.push_back(fock_basis(weight_cutoff));
    p.points = points;
    return p;
}

namespace detail {

// Column index of the tuple of slot coordinates; -1 if a state falls outside its slot.
template <class T>
std::vector<std::pair<Eigen::Index, Rational>> expand_tuple(const ProbeComplex<T>& pc, const InsertionList<T>& ins)
{
    const int n = static_cast<int>(ins.size());
    std::vector<std::pair<Eigen::Index, Rational>> acc{{0, Rational(1)}};
    Eigen::Index stride = 1;
    for (int k = 0; k < n; ++k) {
        const auto& S = pc.slot_states[static_cast<std::size_t>(k)];
        const FockVector& v = ins[static_cast<std::size_t>(n - 1 - k)].state;
        std::vector<std::pair<Eigen::Index, Rational>> next;
        for (std::size_t i = 0; i < S.size(); ++i) {
            const Rational c = v.coeff(S[i]);
            if (c == 0) continue;
            for (const auto& [col, w] : acc) next.push_back({col + stride * static_cast<Eigen::Index>(i), w * c});
        }
        acc = std::move(next);
        stride *= static_cast<Eigen::Index>(S.size());
    }
    return acc;
}

} // namespace detail

/// Matrix of D^n(x_{n+1}) : C^{0,n} -> C^{0,n+1}, rows (new state, tuple) and columns tuples.
/// (D Phi)(u, s) = sum over the reduction terms of kernel * Phi(modified s).
template <class T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> probe_differential(const ProbeComplex<T>& pc, int n)
{
    if (n < 0 || n >= pc.max_n()) throw DomainError("probe differential degree out of range");
    const Eigen::Index rows = pc.dim(n + 1), cols = pc.dim(n);
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> M(rows, cols);
    M.setConstant(T(0));
    const FockVector vac = FockVector::vacuum();
    for (Eigen::Index r = 0; r < rows; ++r) {
        const InsertionList<T> full = pc.insertions(n + 1, r);
        const InsertionList<T> rest(full.begin() + 1, full.end());
        auto add = [&](const auto& terms) {
            for (const auto& t : terms) {
                if (!(t.out_dual == vac && t.in == vac)) throw DomainError("probe complex keeps vacuum boundaries");
                for (const auto& [col, w] : detail::expand_tuple(pc, t.insertions)) M(r, col) += t.coeff * scalar_from<T>(w);
            }
        };
        add(genus0_D1_terms(full.front(), rest, vac, vac));
        add(genus0_D2_terms(full.front(), rest, vac, vac));
    }
    return M;
}

/// d^0 .. d^N of the probe; the top one maps into the truncated-away C^{0,N+1} and has no rows.
template <class T>
std::vector<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>> probe_differentials(const ProbeComplex<T>& pc)
{
    std::vector<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>> out;
    for (int n = 0; n < pc.max_n(); ++n) out.push_back(probe_differential(pc, n));
    out.emplace_back(0, pc.dim(pc.max_n()));
    return out;
}

struct CohomologyOptions {
    double rank_tol = 1e-10;    // relative singular-value cutoff
    double gap = 1e3;           // required separation around the cutoff
    double complex_tol = 1e-9;  // bound on |d^m d^{m-1}| for a genuine complex
};

struct DegreeRanks {
    int m = 0;
    Eigen::Index domain_dim = 0;
    Eigen::Index rank = 0;       // rank d^m
    Eigen::Index kernel_dim = 0; // dim ker d^m
    Eigen::Index image_prev = 0; // rank d^{m-1}
    Eigen::Index h_dim = 0;      // dim ker d^m / (im d^{m-1} cap ker d^m)
    bool indeterminate = false;  // no clear singular-value cliff
    double composition_residual = 0.0;
    bool is_complex = true;      // d^m d^{m-1} = 0 within tolerance
    std::vector<double> singular_values;
};

/// Ranks from an SVD with an explicit cutoff; d[m] : C^m -> C^{m+1}.
std::vector<DegreeRanks> cohomology_ranks(const std::vector<Eigen::MatrixXcd>& d, const CohomologyOptions& opts = {});

template <class T>
Eigen::MatrixXcd to_complex_matrix(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& M)
{
    Eigen::MatrixXcd out(M.rows(), M.cols());
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) out(i, j) = to_complex(M(i, j));
    return out;
}

} // namespace voacx
