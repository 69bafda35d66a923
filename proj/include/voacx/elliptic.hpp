#pragma once

#include "voacx/rational.hpp"
#include "voacx/series.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace voacx {

/// Point in the upper half plane with its nome q = exp(2 pi i tau).
struct ModularPoint {
    Complex tau;
    int q_order = 20;

    explicit ModularPoint(Complex t, int order = 20);
    Complex q() const;
};

/// Numerical value with a truncation-error estimate.
struct EllipticValue {
    Complex value;
    double error_estimate = 0.0;
    int terms = 0;
    std::string method;
    bool flagged = false; // error estimate above the requested tolerance
};

Rational bernoulli(int k);

/// E_k(q) = [k even] (-B_k/k! + 2/(k-1)! sum_n sigma_{k-1}(n) q^n), exact to q^{q_order}.
RationalSeries eisenstein(int k, int q_order);

/// E_k(tau) summed numerically until the tail is negligible.
Complex eisenstein_value(int k, Complex q);

/// P_1(z) = 1/z - sum_{k>=2} E_k z^{k-1} and P_k = (-1)^{k-1}/(k-1)! d^{k-1}P_1, as a truncated
/// Laurent series in z with numerical coefficients (z_terms Eisenstein terms).
ComplexSeries weierstrass_p_series(int k, const ModularPoint& mp, int z_terms);

/// P_k(z, tau) from the truncated Laurent series.  The estimate is the size of the next terms;
/// values outside the disc of convergence are flagged.
EllipticValue weierstrass_p(int k, Complex z, const ModularPoint& mp, int z_terms, double tol = 1e-10);

/// P_k(z, tau) from a Lambert-type sum over q^j that converges for every z off the lattice.
EllipticValue weierstrass_p_global(int k, Complex z, const ModularPoint& mp, double tol = 1e-15);

/// (-1)^m/(m-1)! sum_{n != 0} n^{m-1} q_z^n / (1 - q^n), q_z = e^z, on |q| < |q_z| < 1.
EllipticValue pm_genus1(int m, Complex z, const ModularPoint& mp, double tol = 1e-14);

/// Numerator A_s of Li_{-s}(x) = A_s(x)/(1-x)^{s+1}, A_0 = x (Eulerian polynomials).
const std::vector<Rational>& eulerian_numerator(int s);

/// Li_{-s}(x) = sum_{n>=1} n^s x^n continued as the rational function A_s(x)/(1-x)^{s+1}.
template <class T>
T polylog_negative(int s, const T& x)
{
    if (s < 0) throw DomainError("polylog order must be nonpositive");
    const T one = scalar_from<T>(Rational(1));
    if (x == one) throw SingularError("Li_{-s} has a pole at x = 1");
    const auto& num = eulerian_numerator(s);
    T acc{};
    for (std::size_t d = num.size(); d-- > 0;) acc = acc * x + scalar_from<T>(num[d]);
    return acc / ipow(T(one - x), s + 1);
}

/// q-expansion of P_m(z) with q_z = x, to q^{q_order}.  The q^0 coefficient is the rational
/// continuation in x.  With `laurent_compatible` the m = 1 constant is shifted by -1/2 so the
/// kernel matches 1/z - sum E_k z^{k-1}.
template <class T>
TruncatedSeries<T> pm_q_series(int m, const T& x, int q_order, bool laurent_compatible)
{
    if (m < 1) throw DomainError("P_m needs m >= 1");
    const T pref = scalar_from<T>(((m % 2) ? Rational(-1) : Rational(1)) / factorial(m - 1));
    TruncatedSeries<T> out("q", q_order, 0);
    if (q_order <= 0) return out;
    T c0 = pref * polylog_negative(m - 1, x);
    if (m == 1 && laurent_compatible) c0 -= scalar_from<T>(rat(1, 2));
    out.set(0, c0);
    for (int big_n = 1; big_n < q_order; ++big_n) {
        T acc{};
        for (int d = 1; d <= big_n; ++d) {
            if (big_n % d) continue;
            const T dm = scalar_from<T>(ipow(Rational(d), m - 1));
            acc += dm * ipow(x, d);
            if ((m - 1) % 2)
                acc += dm * ipow(x, -d);
            else
                acc -= dm * ipow(x, -d);
        }
        out.set(big_n, pref * acc);
    }
    return out;
}

/// f_{n,m}(z,w) = z^{-n}/m! d^m/dw^m (w^n/(z-w)), stored as numerator / (z^n (z-w)^{m+1}).
struct F0Kernel {
    int n = 0, m = 0;
    std::map<std::pair<int, int>, Rational> numerator; // (z exponent, w exponent) -> coefficient

    std::string str() const;

    template <class T>
    T operator()(const T& z, const T& w) const
    {
        T num{};
        for (const auto& [e, c] : numerator) num += scalar_from<T>(c) * ipow(z, e.first) * ipow(w, e.second);
        return num / (ipow(z, n) * ipow(T(z - w), m + 1));
    }
};

F0Kernel f0_kernel(int n, int m);

/// Evaluates f_{n,m}(z,w) without building the numerator.
template <class T>
T f0_eval(int n, int m, const T& z, const T& w)
{
    if (z == w) throw SingularError("f0 kernel evaluated at coincident points");
    T acc{};
    for (int r = 0; r <= std::min(n, m); ++r)
        acc += scalar_from<T>(binomial(static_cast<long long>(n), r)) * ipow(w, n - r) * ipow(T(z - w), -1 - m + r);
    return acc * ipow(z, -n);
}

/// Expansion of f_{n,m} in the domain |z| > |w|, keeping the first `order` terms in w/z.
struct IotaExpansion {
    int n = 0, m = 0, order = 0;
    std::map<std::pair<int, int>, Rational> coeffs; // (z exponent, w exponent) -> coefficient

    template <class T>
    T operator()(const T& z, const T& w) const
    {
        T acc{};
        for (const auto& [e, c] : coeffs) acc += scalar_from<T>(c) * ipow(z, e.first) * ipow(w, e.second);
        return acc;
    }
};

IotaExpansion f0_iota(int n, int m, int order);

} // namespace voacx
