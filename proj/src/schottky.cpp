#include "voacx/schottky.hpp"

#include <cmath>

namespace voacx {

namespace {

// binom(e, m) for integer e of either sign.
double binom_signed(int e, int m)
{
    double r = 1.0;
    for (int i = 0; i < m; ++i) r *= static_cast<double>(e - i) / static_cast<double>(i + 1);
    return r;
}

const ComplexSeries* f_at(const std::vector<ComplexSeries>& f, int l)
{
    return l < static_cast<int>(f.size()) ? &f[static_cast<std::size_t>(l)] : nullptr;
}

} // namespace

void SchottkyData::validate() const
{
    if (genus < 1) throw DomainError("genus must be at least 1");
    if (static_cast<int>(rho.size()) != genus) throw DomainError("need one rho per handle");
    if (static_cast<int>(w.size()) != 2 * genus) throw DomainError("need 2g points w_a");
    if (p < 1) throw DomainError("weight p must be at least 1");
    if (mode_cutoff < 1) throw DomainError("mode cutoff must be at least 1");
    if (neumann_order < 0) throw DomainError("Neumann order must be nonnegative");
    if (static_cast<int>(f.size()) > 2 * p - 1) throw DomainError("f_l is only defined for l = 0..2p-2");
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = i + 1; j < w.size(); ++j)
            if (w[i] == w[j]) throw DomainError("points w_a must be pairwise distinct");
}

Complex SchottkyData::w_at(int a) const
{
    if (a == 0 || std::abs(a) > genus) throw DomainError("handle label out of range");
    return w[static_cast<std::size_t>(2 * (std::abs(a) - 1) + (a > 0 ? 1 : 0))];
}

Complex SchottkyData::rho_half_power(int a, int k) const
{
    const Complex s = std::sqrt(rho_at(a));
    Complex r(1);
    for (int i = 0; i < std::abs(k); ++i) r *= s;
    return k < 0 ? Complex(1) / r : r;
}

int SchottkyData::index(int a, int m) const
{
    const int slot = 2 * (std::abs(a) - 1) + (a > 0 ? 1 : 0);
    return slot * mode_cutoff + m;
}

std::vector<int> SchottkyData::handle_labels() const
{
    std::vector<int> out;
    for (int a = 1; a <= genus; ++a) {
        out.push_back(-a);
        out.push_back(a);
    }
    return out;
}

Complex laurent_derivative(const ComplexSeries& f, int m, Complex x)
{
    Complex s(0);
    for (const auto& [e, c] : f.terms()) {
        const double b = binom_signed(e, m);
        if (b == 0.0) continue;
        if (x == Complex(0) && e - m < 0) throw SingularError("f_l has a pole at x = 0");
        s += c * b * ipow(x, e - m);
    }
    return s;
}

namespace {

// sum_l d^(m) f_l(x) d^(n) y^l
Complex f_part(int p, int m, int n, Complex x, Complex y, const std::vector<ComplexSeries>& f)
{
    Complex s(0);
    for (int l = n; l <= 2 * p - 2; ++l)
        if (const auto* fl = f_at(f, l)) s += laurent_derivative(*fl, m, x) * binom_signed(l, n) * ipow(y, l - n);
    return s;
}

} // namespace

Complex psi0(int p, Complex x, Complex y, const std::vector<ComplexSeries>& f) { return psi0_derivative(p, 0, 0, x, y, f); }

Complex psi0_derivative(int p, int m, int n, Complex x, Complex y, const std::vector<ComplexSeries>& f)
{
    if (x == y) throw SingularError("psi0 has a pole at x = y");
    // d^(m) d^(n) (x-y)^{-1} = (-1)^m binom(m+n, m) (x-y)^{-1-m-n}
    const Complex pole = ((m % 2) ? -1.0 : 1.0) * binom_signed(m + n, m) * ipow(Complex(x - y), -1 - m - n);
    return pole + f_part(p, m, n, x, y, f);
}

Complex e_mn(int p, int m, int n, Complex y, const std::vector<ComplexSeries>& f) { return f_part(p, m, n, y, y, f); }

GenusGForms build_R(const SchottkyData& sd)
{
    sd.validate();
    GenusGForms out;
    out.sd = sd;
    const int D = sd.dim(), M = sd.mode_cutoff, p = sd.p;
    const double sign = (p % 2) ? -1.0 : 1.0;
    out.R = Eigen::MatrixXcd::Zero(D, D);
    out.Delta = Eigen::MatrixXcd::Zero(D, D);
    for (int a : sd.handle_labels()) {
        for (int b : sd.handle_labels()) {
            for (int m = 0; m < M; ++m) {
                for (int n = 0; n < M; ++n) {
                    Complex v;
                    if (a != -b) {
                        v = sign * sd.rho_half_power(a, m + 1) * sd.rho_half_power(b, n) *
                            psi0_derivative(p, m, n, sd.w_at(-a), sd.w_at(b), sd.f);
                    } else {
                        v = sign * sd.rho_half_power(a, m + n + 1) * e_mn(p, m, n, sd.w_at(-a), sd.f);
                    }
                    out.R(sd.index(a, m), sd.index(b, n)) = v;
                }
            }
        }
        for (int n = 0; n + 2 * p - 1 < M; ++n) out.Delta(sd.index(a, n + 2 * p - 1), sd.index(a, n)) = 1.0;
    }
    out.Rt = out.R * out.Delta;
    out.neumann = neumann_inverse(out, sd.neumann_order);
    return out;
}

NeumannResult neumann_inverse(const GenusGForms& forms, int order)
{
    if (order < 0) throw DomainError("Neumann order must be nonnegative");
    const auto n = forms.Rt.rows();
    NeumannResult out;
    Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(n, n);
    out.inverse = term;
    out.term_norms.push_back(term.norm());
    for (int k = 1; k <= order + 1; ++k) {
        term = term * forms.Rt;
        const double nk = term.norm();
        out.term_norms.push_back(nk);
        if (k <= order) out.inverse += term;
    }
    out.error_estimate = out.term_norms.back();
    // Divergence signal: the last terms are not shrinking.
    const std::size_t s = out.term_norms.size();
    if (s >= 3 && out.term_norms[s - 1] > 0 && out.term_norms[s - 1] >= out.term_norms[s - 2]) out.flagged = true;
    return out;
}

Eigen::RowVectorXcd p_vector(const GenusGForms& forms, Complex x)
{
    const auto& sd = forms.sd;
    Eigen::RowVectorXcd v(sd.dim());
    for (int a : sd.handle_labels())
        for (int m = 0; m < sd.mode_cutoff; ++m)
            v(sd.index(a, m)) = sd.rho_half_power(a, m) * psi0_derivative(sd.p, 0, m, x, sd.w_at(a), sd.f);
    return v;
}

Eigen::VectorXcd q_vector(const GenusGForms& forms, Complex y, int j)
{
    const auto& sd = forms.sd;
    const double sign = (sd.p % 2) ? -1.0 : 1.0;
    Eigen::VectorXcd v(sd.dim());
    for (int a : sd.handle_labels())
        for (int m = 0; m < sd.mode_cutoff; ++m)
            v(sd.index(a, m)) = sign * sd.rho_half_power(a, m + 1) * psi0_derivative(sd.p, m, j, sd.w_at(-a), y, sd.f);
    return v;
}

Complex psi_p(const GenusGForms& forms, Complex x, Complex y, int j)
{
    const auto& sd = forms.sd;
    for (const Complex& w : sd.w)
        if (x == w || y == w) throw SingularError("psi_p evaluated at a sewing point");
    const Eigen::RowVectorXcd pt = p_vector(forms, x) * forms.Delta;
    const Complex corr = (pt * forms.neumann.inverse * q_vector(forms, y, j))(0, 0);
    return psi0_derivative(sd.p, 0, j, x, y, sd.f) + corr;
}

Eigen::MatrixXcd chi(const GenusGForms& forms, Complex x)
{
    const auto& sd = forms.sd;
    if (sd.mode_cutoff < 2 * sd.p - 1) throw DomainError("mode cutoff must exceed 2p - 2 for chi");
    for (const Complex& w : sd.w)
        if (x == w) throw SingularError("chi evaluated at a sewing point");
    const Eigen::RowVectorXcd px = p_vector(forms, x);
    const Eigen::RowVectorXcd row = px + px * forms.Delta * forms.neumann.inverse * forms.R;
    const auto labels = sd.handle_labels();
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(labels.size()), 2 * sd.p - 1);
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (int l = 0; l <= 2 * sd.p - 2; ++l)
            out(static_cast<Eigen::Index>(i), l) = sd.rho_half_power(labels[i], -l) * row(sd.index(labels[i], l));
    return out;
}

Eigen::VectorXcd theta(const GenusGForms& forms, int a, Complex x)
{
    const auto& sd = forms.sd;
    if (a < 1 || a > sd.genus) throw DomainError("theta_a needs a in 1..g");
    const Eigen::MatrixXcd c = chi(forms, x);
    const double sign = (sd.p % 2) ? -1.0 : 1.0;
    const Eigen::Index row_plus = 2 * (a - 1) + 1, row_minus = 2 * (a - 1);
    Eigen::VectorXcd out(2 * sd.p - 1);
    for (int l = 0; l <= 2 * sd.p - 2; ++l)
        out(l) = c(row_plus, l) + sign * sd.rho_half_power(a, 2 * (sd.p - 1 - l)) * c(row_minus, 2 * sd.p - 2 - l);
    return out;
}

} // namespace voacx
