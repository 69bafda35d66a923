#include "voacx/elliptic.hpp"

#include <cmath>
#include <deque>
#include <mutex>
#include <numbers>
#include <sstream>

namespace voacx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex g_bernoulli_mutex;
std::vector<Rational> g_bernoulli{Rational(1)};

std::mutex g_eulerian_mutex;
std::deque<std::vector<Rational>> g_eulerian{{Rational(0), Rational(1)}}; // deque keeps references stable

// Distance from 0 to the nearest nonzero point of the lattice 2 pi i (Z + tau Z).
double lattice_radius(Complex tau)
{
    double best = 1e300;
    for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b)
            if (a || b) best = std::min(best, std::abs(Complex(0, kTwoPi) * (Complex(a) + Complex(b) * tau)));
    return best;
}

} // namespace

ModularPoint::ModularPoint(Complex t, int order) : tau(t), q_order(order)
{
    if (!(t.imag() > 0)) throw DomainError("tau must lie in the upper half plane");
    if (order < 0) throw DomainError("q order must be nonnegative");
}

Complex ModularPoint::q() const { return std::exp(Complex(0, kTwoPi) * tau); }

Rational bernoulli(int k)
{
    if (k < 0) throw DomainError("Bernoulli index must be nonnegative");
    std::lock_guard lock(g_bernoulli_mutex);
    while (static_cast<int>(g_bernoulli.size()) <= k) {
        const int n = static_cast<int>(g_bernoulli.size());
        Rational acc(0);
        for (int j = 0; j < n; ++j) acc += binomial(static_cast<long long>(n + 1), j) * g_bernoulli[static_cast<std::size_t>(j)];
        g_bernoulli.push_back(-acc / Rational(n + 1));
    }
    return g_bernoulli[static_cast<std::size_t>(k)];
}

RationalSeries eisenstein(int k, int q_order)
{
    if (k < 2) throw DomainError("Eisenstein series needs k >= 2");
    if (q_order < 0) throw DomainError("q order must be nonnegative");
    RationalSeries out("q", q_order, 0);
    if (k % 2) return out;
    out.set(0, -bernoulli(k) / factorial(k));
    const Rational scale = Rational(2) / factorial(k - 1);
    // Lambert form: sum_d d^{k-1} q^d / (1 - q^d)
    for (int d = 1; d < q_order; ++d) {
        const Rational dk = ipow(Rational(d), k - 1) * scale;
        for (int n = d; n < q_order; n += d) out.add_to(n, dk);
    }
    return out;
}

Complex eisenstein_value(int k, Complex q)
{
    if (k < 2) throw DomainError("Eisenstein series needs k >= 2");
    if (std::abs(q) >= 1.0) throw DomainError("|q| must be below 1");
    if (k % 2) return Complex(0);
    const double lq = -std::log(std::abs(q));
    const double peak = (k - 1) / std::max(lq, 1e-300);
    const double log_fact = std::lgamma(static_cast<double>(k)); // log (k-1)!
    Complex sum(0);
    Complex qd(1);
    for (int d = 1; d < 1000000; ++d) {
        qd *= q;
        if (qd == Complex(0)) break;
        const double mag = std::exp((k - 1) * std::log(static_cast<double>(d)) - log_fact);
        const Complex term = mag * qd / (Complex(1) - qd);
        sum += term;
        if (d > peak && std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum))) break;
    }
    return to_complex(-bernoulli(k) / factorial(k)) + 2.0 * sum;
}

ComplexSeries weierstrass_p_series(int k, const ModularPoint& mp, int z_terms)
{
    if (k < 1) throw DomainError("P_k needs k >= 1");
    if (z_terms < 0) throw DomainError("z_terms must be nonnegative");
    const Complex q = mp.q();
    ComplexSeries out("z", z_terms + 2 - k, -k);
    out.set(-k, 1.0);
    const double sign = (k % 2) ? 1.0 : -1.0; // (-1)^{k-1}
    for (int j = std::max(k, 2); j <= z_terms + 1; ++j) {
        const Complex ej = eisenstein_value(j, q);
        out.add_to(j - k, -sign * to_double(binomial(static_cast<long long>(j - 1), k - 1)) * ej);
    }
    return out;
}

EllipticValue weierstrass_p(int k, Complex z, const ModularPoint& mp, int z_terms, double tol)
{
    if (z == Complex(0)) throw SingularError("P_k has a pole at z = 0");
    const auto series = weierstrass_p_series(k, mp, z_terms + 4);
    EllipticValue out;
    out.method = "laurent";
    out.terms = z_terms;
    const int cut = z_terms + 2 - k;
    for (const auto& [e, c] : series.terms()) {
        const Complex term = c * std::pow(z, e);
        if (e < cut)
            out.value += term;
        else
            out.error_estimate += std::abs(term);
    }
    if (std::abs(z) >= lattice_radius(mp.tau)) {
        out.method = "laurent-divergent";
        out.error_estimate = std::numeric_limits<double>::infinity();
    }
    out.flagged = !(out.error_estimate <= tol);
    return out;
}

const std::vector<Rational>& eulerian_numerator(int s)
{
    if (s < 0) throw DomainError("Eulerian index must be nonnegative");
    std::lock_guard lock(g_eulerian_mutex);
    while (static_cast<int>(g_eulerian.size()) <= s) {
        const auto ns = g_eulerian.back();
        const Rational next_s(static_cast<long long>(g_eulerian.size())); // s + 1
        // A_{s+1} = x (A_s' (1 - x) + (s + 1) A_s)
        std::vector<Rational> inner(ns.size() + 1, Rational(0));
        for (std::size_t d = 1; d < ns.size(); ++d) {
            inner[d - 1] += Rational(static_cast<long long>(d)) * ns[d];
            inner[d] -= Rational(static_cast<long long>(d)) * ns[d];
        }
        for (std::size_t d = 0; d < ns.size(); ++d) inner[d] += next_s * ns[d];
        std::vector<Rational> out(inner.size() + 1, Rational(0));
        for (std::size_t d = 0; d < inner.size(); ++d) out[d + 1] = inner[d];
        g_eulerian.push_back(std::move(out));
    }
    return g_eulerian[static_cast<std::size_t>(s)];
}

EllipticValue weierstrass_p_global(int k, Complex z, const ModularPoint& mp, double tol)
{
    if (k < 1) throw DomainError("P_k needs k >= 1");
    const Complex q = mp.q();
    const Complex x = std::exp(z);
    const int s = k - 1;
    EllipticValue out;
    out.method = "lambert";
    Complex sum(0);
    Complex qj(1);
    int quiet = 0;
    for (int j = 0; j < 100000; ++j) {
        Complex term(0);
        const Complex y1 = x * qj;
        if (std::abs(y1 - Complex(1)) < 1e-300) throw SingularError("P_k evaluated at a lattice point");
        term -= polylog_negative(s, y1);
        if (j >= 1) {
            const Complex y2 = qj / x;
            if (std::abs(y2 - Complex(1)) < 1e-300) throw SingularError("P_k evaluated at a lattice point");
            term += ((s % 2) ? -1.0 : 1.0) * polylog_negative(s, y2);
        }
        sum += term;
        out.terms = j + 1;
        if (j > 0 && std::abs(term) < tol * std::max(1.0, std::abs(sum))) {
            out.error_estimate = std::abs(term);
            if (++quiet >= 2) break;
        } else {
            quiet = 0;
        }
        qj *= q;
    }
    if (k == 1) sum -= 0.5;
    out.value = ((s % 2) ? -1.0 : 1.0) / std::tgamma(static_cast<double>(k)) * sum;
    out.flagged = !(out.error_estimate <= tol * std::max(1.0, std::abs(out.value)));
    return out;
}

EllipticValue pm_genus1(int m, Complex z, const ModularPoint& mp, double tol)
{
    if (m < 1) throw DomainError("P_m needs m >= 1");
    const Complex q = mp.q();
    const Complex qz = std::exp(z);
    const double aq = std::abs(q), az = std::abs(qz);
    if (!(aq < az && az < 1.0))
        throw DomainError("P_m series needs |q| < |q_z| < 1 (got |q| = " + std::to_string(aq) + ", |q_z| = " +
                          std::to_string(az) + ")");
    const double ratio = std::max(az, aq / az);
    Complex sum(0);
    EllipticValue out;
    out.method = "annulus-sum";
    Complex qn(1), qzn(1);
    for (int n = 1; n < 1000000; ++n) {
        qn *= q;
        qzn *= qz;
        const double nm = std::pow(static_cast<double>(n), m - 1);
        const Complex pos = nm * qzn / (Complex(1) - qn);
        // n -> -n: (-n)^{m-1} q_z^{-n} / (1 - q^{-n}) = -(-n)^{m-1} q_z^{-n} q^n / (1 - q^n)
        const Complex neg = -((m - 1) % 2 ? -nm : nm) * (qn / qzn) / (Complex(1) - qn);
        sum += pos + neg;
        out.terms = n;
        const double last = std::abs(pos) + std::abs(neg);
        const double growth = std::pow(static_cast<double>(n + 1) / n, m - 1) * ratio;
        if (growth < 1.0) {
            const double tail = last * growth / (1.0 - growth);
            if (tail < tol * std::max(1.0, std::abs(sum))) {
                out.error_estimate = tail;
                break;
            }
        }
    }
    out.value = ((m % 2) ? -1.0 : 1.0) / std::tgamma(static_cast<double>(m)) * sum;
    out.error_estimate /= std::tgamma(static_cast<double>(m));
    out.flagged = !(out.error_estimate <= tol * std::max(1.0, std::abs(out.value)));
    return out;
}

F0Kernel f0_kernel(int n, int m)
{
    if (n < 0 || m < 0) throw DomainError("f0 kernel needs n, m >= 0");
    F0Kernel k;
    k.n = n;
    k.m = m;
    // sum_r binom(n,r) w^{n-r} (z-w)^r over z^n (z-w)^{m+1}
    for (int r = 0; r <= std::min(n, m); ++r) {
        const Rational br = binomial(static_cast<long long>(n), r);
        for (int t = 0; t <= r; ++t) {
            const Rational c = br * binomial(static_cast<long long>(r), t) * (((r - t) % 2) ? Rational(-1) : Rational(1));
            auto& slot = k.numerator[{t, n - t}];
            slot += c;
        }
    }
    for (auto it = k.numerator.begin(); it != k.numerator.end();)
        it = (it->second == 0) ? k.numerator.erase(it) : std::next(it);
    return k;
}

std::string F0Kernel::str() const
{
    std::ostringstream os;
    os << '(';
    bool first = true;
    for (const auto& [e, c] : numerator) {
        os << (first ? "" : " + ") << c << "*z^" << e.first << "*w^" << e.second;
        first = false;
    }
    if (first) os << '0';
    os << ") / (z^" << n << " (z-w)^" << (m + 1) << ')';
    return os.str();
}

IotaExpansion f0_iota(int n, int m, int order)
{
    if (n < 0 || m < 0) throw DomainError("f0 kernel needs n, m >= 0");
    if (order < 0) throw DomainError("order must be nonnegative");
    IotaExpansion out;
    out.n = n;
    out.m = m;
    out.order = order;
    // z^{-n} sum_r binom(n,r) w^{n-r} (z-w)^{-s}, s = 1+m-r, with
    // (z-w)^{-s} = sum_j binom(s+j-1, j) w^j z^{-s-j}; keep z exponents above -n-1-order.
    for (int r = 0; r <= std::min(n, m); ++r) {
        const int s = 1 + m - r;
        const Rational br = binomial(static_cast<long long>(n), r);
        for (int j = 0; s + j <= order; ++j) {
            const Rational c = br * binomial(static_cast<long long>(s + j - 1), j);
            out.coeffs[{-n - s - j, n - r + j}] += c;
        }
    }
    for (auto it = out.coeffs.begin(); it != out.coeffs.end();)
        it = (it->second == 0) ? out.coeffs.erase(it) : std::next(it);
    return out;
}

} // namespace voacx
