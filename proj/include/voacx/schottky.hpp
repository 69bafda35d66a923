#pragma once

#include "voacx/genus0.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <vector>

namespace voacx {

// ---------------------------------------------------------------------------
// Sewing handles onto sphere correlators

/// One handle z1 z2 = rho glued at punctures zeta1, zeta2.  An empty zeta1 is the puncture at
/// infinity: the handle state then enters as the out-state, <b', X b>, with zeta2 = 0.
template <class T>
struct SewingData {
    T rho{};
    std::optional<T> zeta1;
    T zeta2{};
    double r1 = 1.0, r2 = 1.0;
    int rho_order = 1; // handle weights below rho_order are summed

    void validate() const
    {
        if (rho_order < 0) throw DomainError("rho order must be nonnegative");
        if (abs_value(rho) > r1 * r2) throw DomainError("|rho| exceeds the sewing domain r1 r2");
        if (zeta1 && *zeta1 == zeta2) throw DomainError("sewing punctures must be distinct");
        if (!zeta1 && !is_zero(zeta2)) throw DomainError("the puncture at infinity pairs with zeta2 = 0");
    }
};

/// u(mode) acting on the handle state b of one handle (the zeta2 slot).
struct HandleMode {
    std::size_t handle = 0;
    FockVector u;
    int mode = 0;
};

/// A sphere correlator <out'|Y(v_1,z_1)...Y(v_n,z_n)|in> with handles attached.
template <class T>
struct SewnCorrelator {
    InsertionList<T> insertions;
    std::vector<SewingData<T>> handles;
    FockVector out_dual = FockVector::vacuum();
    FockVector in = FockVector::vacuum();
    std::optional<HandleMode> handle_mode;

    int genus() const { return static_cast<int>(handles.size()); }
};

/// Coefficients of prod_a rho_a^{k_a}, with k_a < orders[a].
template <class T>
struct RhoSeries {
    std::vector<int> orders;
    std::map<std::vector<int>, T> coeffs;

    T coeff(const std::vector<int>& k) const
    {
        auto it = coeffs.find(k);
        return it == coeffs.end() ? T{} : it->second;
    }

    /// Sets rho_a = 0 and drops that variable.
    RhoSeries at_zero(std::size_t a) const
    {
        RhoSeries out;
        out.orders = orders;
        out.orders.erase(out.orders.begin() + static_cast<std::ptrdiff_t>(a));
        for (const auto& [k, c] : coeffs) {
            if (k[a] != 0) continue;
            auto k2 = k;
            k2.erase(k2.begin() + static_cast<std::ptrdiff_t>(a));
            out.coeffs[k2] += c;
        }
        return out;
    }

    T value(const std::vector<T>& rho) const
    {
        T s{};
        for (const auto& [k, c] : coeffs) {
            T t = c;
            for (std::size_t a = 0; a < k.size(); ++a) t *= ipow(rho[a], k[a]);
            s += t;
        }
        return s;
    }

    /// One-variable view (genus one).
    TruncatedSeries<T> to_series(const std::string& tag = "rho") const
    {
        if (orders.size() != 1) throw DomainError("one-variable view needs exactly one handle");
        TruncatedSeries<T> s(tag, orders[0], 0);
        for (const auto& [k, c] : coeffs) s.add_to(k[0], c);
        return s;
    }

    friend bool operator==(const RhoSeries& a, const RhoSeries& b)
    {
        if (a.orders != b.orders) return false;
        auto clean = [](const RhoSeries& s) {
            std::map<std::vector<int>, T> m;
            for (const auto& [k, c] : s.coeffs)
                if (!(c == T{})) m[k] = c;
            return m;
        };
        return clean(a) == clean(b);
    }
};

namespace detail {

template <class T>
void sew_recurse(const SewnCorrelator<T>& F, std::size_t h, InsertionList<T>& ins, FockVector& out_dual, FockVector& in,
                 std::vector<int>& k, RhoSeries<T>& acc)
{
    if (h == F.handles.size()) {
        const T v = genus0_reduce(ins, out_dual, in);
        if (!(v == T{})) acc.coeffs[k] += v;
        return;
    }
    const auto& V = heisenberg();
    const auto& sd = F.handles[h];
    for (const auto& b : fock_basis(sd.rho_order)) {
        k[h] = partition_weight(b);
        FockVector bp(b);
        if (F.handle_mode && F.handle_mode->handle == h) {
            bp = V.mode(F.handle_mode->u, F.handle_mode->mode, bp);
            if (bp.empty()) continue;
        }
        if (sd.zeta1) {
            ins.push_back({V.form_dual(b), *sd.zeta1});
            ins.push_back({std::move(bp), sd.zeta2});
            sew_recurse(F, h + 1, ins, out_dual, in, k, acc);
            ins.resize(ins.size() - 2);
        } else {
            FockVector od = std::move(out_dual), id = std::move(in);
            out_dual = FockVector(b);
            in = std::move(bp);
            sew_recurse(F, h + 1, ins, out_dual, in, k, acc);
            out_dual = std::move(od);
            in = std::move(id);
        }
    }
    k[h] = 0;
}

} // namespace detail

/// Expands the handles: sum over handle bases b_a of prod rho_a^{wt b_a} times the sphere
/// correlator with (dual(b_a), zeta1_a; b_a, zeta2_a) inserted after the existing points.
template <class T>
RhoSeries<T> evaluate(const SewnCorrelator<T>& F)
{
    int infinite = 0;
    for (const auto& sd : F.handles) {
        sd.validate();
        if (!sd.zeta1) ++infinite;
    }
    if (infinite > 1) throw DomainError("at most one handle may use the puncture at infinity");
    if (F.handle_mode && F.handle_mode->handle >= F.handles.size()) throw DomainError("handle mode on a missing handle");
    if (infinite && !(F.out_dual == FockVector::vacuum() && F.in == FockVector::vacuum()))
        throw DomainError("a handle at infinity needs vacuum boundaries");
    std::vector<T> pts;
    for (const auto& x : F.insertions) pts.push_back(x.point);
    for (const auto& sd : F.handles) {
        if (sd.zeta1) pts.push_back(*sd.zeta1);
        pts.push_back(sd.zeta2);
    }
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (pts[i] == pts[j]) throw DomainError("insertion and sewing points must be pairwise distinct");

    RhoSeries<T> out;
    for (const auto& sd : F.handles) out.orders.push_back(sd.rho_order);
    InsertionList<T> ins = F.insertions;
    FockVector od = F.out_dual, id = F.in;
    std::vector<int> k(F.handles.size(), 0);
    detail::sew_recurse(F, 0, ins, od, id, k, out);
    return out;
}

/// Attaches one more handle (the genus-raising step).
template <class T>
SewnCorrelator<T> sew_handle(SewnCorrelator<T> F, const SewingData<T>& sd)
{
    sd.validate();
    F.handles.push_back(sd);
    return F;
}

/// Genus-raising differential: the rho-series of F with one more handle, summed to rho_order.
template <class T>
RhoSeries<T> rho_sew(const SewnCorrelator<T>& F, SewingData<T> sd, int rho_order)
{
    if (rho_order > 24) throw DomainError("rho order " + std::to_string(rho_order) + " exceeds the Fock cutoff 24");
    sd.rho_order = rho_order;
    return evaluate(sew_handle(F, sd));
}

// ---------------------------------------------------------------------------
// Genus-g generalized elliptic forms

/// Handle index a in {+-1, ..., +-g}; matrices are ordered (-1, 1, -2, 2, ...) then by mode.
struct SchottkyData {
    int genus = 1;
    std::vector<Complex> rho;           // rho_a, a = 1..g
    std::vector<Complex> w;             // w_{-1}, w_1, w_{-2}, w_2, ...
    int p = 1;                          // weight of the inserted quasiprimary state
    std::vector<ComplexSeries> f;       // f_l(x) as Laurent polynomials, l = 0..2p-2; missing ones are 0
    int mode_cutoff = 4;                // modes m < mode_cutoff
    int neumann_order = 8;

    void validate() const;
    Complex w_at(int a) const;
    Complex rho_at(int a) const { return rho[static_cast<std::size_t>(std::abs(a) - 1)]; }
    /// ρ_a^{k/2} on the principal branch.
    Complex rho_half_power(int a, int k) const;
    int index(int a, int m) const;
    int dim() const { return 2 * genus * mode_cutoff; }
    std::vector<int> handle_labels() const;
};

/// Taylor-normalized derivative d^(m) f(x) = f^{(m)}(x)/m! of a Laurent polynomial.
Complex laurent_derivative(const ComplexSeries& f, int m, Complex x);

/// psi0(x,y) = 1/(x-y) + sum_l f_l(x) y^l and its Taylor-normalized derivatives d^(m,n).
Complex psi0(int p, Complex x, Complex y, const std::vector<ComplexSeries>& f);
Complex psi0_derivative(int p, int m, int n, Complex x, Complex y, const std::vector<ComplexSeries>& f);

/// E_m^n(y) = sum_l d^(m) f_l(y) d^(n) y^l
Complex e_mn(int p, int m, int n, Complex y, const std::vector<ComplexSeries>& f);

struct NeumannResult {
    Eigen::MatrixXcd inverse;
    double error_estimate = 0.0; // norm of the first omitted power
    std::vector<double> term_norms;
    bool flagged = false;        // term norms stopped decreasing
};

struct GenusGForms {
    SchottkyData sd;
    Eigen::MatrixXcd R, Delta, Rt;
    NeumannResult neumann;
};

GenusGForms build_R(const SchottkyData& sd);
NeumannResult neumann_inverse(const GenusGForms& forms, int order);

/// Row vector p(x) and column vector q(y); j is an extra Taylor derivative in y for q.
Eigen::RowVectorXcd p_vector(const GenusGForms& forms, Complex x);
Eigen::VectorXcd q_vector(const GenusGForms& forms, Complex y, int j = 0);

/// psi_p(x,y) and d^(0,j) psi_p(x,y).
Complex psi_p(const GenusGForms& forms, Complex x, Complex y, int j = 0);

/// chi_a(x; l) for a in I, l = 0..2p-2; rows follow handle_labels().
Eigen::MatrixXcd chi(const GenusGForms& forms, Complex x);

/// theta_a(x; l) for a = 1..g, l = 0..2p-2.
Eigen::VectorXcd theta(const GenusGForms& forms, int a, Complex x);

/// Form degrees carried as metadata: Psi_p ~ dx^p dy^{1-p}, Theta_a ~ dx^p.
struct FormDegree {
    int dx = 0, dy = 0;
};
inline FormDegree psi_degree(int p) { return {p, 1 - p}; }
inline FormDegree theta_degree(int p) { return {p, 0}; }

// ---------------------------------------------------------------------------
// Genus-g partition function

/// sum over handle bases of prod rho_a^{wt b_a} <1| Y(dual b_1, w_-1) Y(b_1, w_1) ... |1>,
/// with handle a summed below rho_orders[a].
template <class T>
RhoSeries<T> genus_g_partition(const std::vector<T>& w, const std::vector<int>& rho_orders)
{
    const std::size_t g = rho_orders.size();
    if (g < 1 || g > 2) throw UnsupportedError("genus-g partition is implemented for g = 1, 2");
    if (w.size() != 2 * g) throw DomainError("need 2g sewing points");
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = i + 1; j < w.size(); ++j)
            if (w[i] == w[j]) throw DomainError("sewing points w_a must be distinct");
    const auto& V = heisenberg();
    std::vector<std::vector<Partition>> bases;
    for (int o : rho_orders) {
        if (o < 0) throw DomainError("rho order must be nonnegative");
        bases.push_back(fock_basis(o));
    }
    RhoSeries<T> out;
    out.orders = rho_orders;
    std::vector<std::size_t> idx(g, 0);
    for (const auto& b : bases)
        if (b.empty()) return out;
    // Tensor-product basis enumerated directly.
    for (;;) {
        InsertionList<T> ins;
        std::vector<int> k(g);
        for (std::size_t a = 0; a < g; ++a) {
            const Partition& b = bases[a][idx[a]];
            k[a] = partition_weight(b);
            ins.push_back({V.form_dual(b), w[2 * a]});
            ins.push_back({FockVector(b), w[2 * a + 1]});
        }
        const T v = genus0_reduce(ins, FockVector::vacuum(), FockVector::vacuum());
        if (!(v == T{})) out.coeffs[k] += v;
        std::size_t a = 0;
        while (a < g && ++idx[a] == bases[a].size()) idx[a++] = 0;
        if (a == g) break;
    }
    return out;
}

} // namespace voacx
