#pragma once

#include "voacx/rational.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace voacx {

/// Truncation order of a series that is known exactly (a Laurent polynomial).
inline constexpr int kExact = INT_MAX;

namespace detail {
inline int sat_add(int a, int b)
{
    if (a == kExact || b == kExact) return kExact;
    long long s = static_cast<long long>(a) + b;
    if (s >= kExact) return kExact;
    if (s <= INT_MIN) return INT_MIN + 1;
    return static_cast<int>(s);
}
} // namespace detail

/// Formal Laurent series in one variable with an explicit validity range.
///
/// Coefficients are stored for exponents in [min_exponent, truncation).  Exponents at or
/// beyond the truncation are unknown; stored-range exponents absent from the map are zero.
/// An empty variable tag is a wildcard, which lets a default-constructed value act as the
/// additive identity for any tag (needed when series are nested as coefficients).
template <class T>
class TruncatedSeries {
public:
    using scalar_type = T;
    using map_type = std::map<int, T>;

    TruncatedSeries() = default;

    TruncatedSeries(std::string tag, int truncation, int min_exponent = 0)
        : tag_(std::move(tag)), min_exponent_(std::min(min_exponent, truncation)), truncation_(truncation)
    {}

    static TruncatedSeries constant(const std::string& tag, const T& c, int truncation = kExact)
    {
        TruncatedSeries s(tag, truncation, 0);
        s.set(0, c);
        return s;
    }

    static TruncatedSeries monomial(const std::string& tag, int exponent, const T& c, int truncation = kExact)
    {
        TruncatedSeries s(tag, truncation, std::min(exponent, truncation));
        s.set(exponent, c);
        return s;
    }

    static TruncatedSeries from_coeffs(const std::string& tag, int min_exponent, const std::vector<T>& coeffs,
                                       int truncation)
    {
        TruncatedSeries s(tag, truncation, min_exponent);
        for (std::size_t i = 0; i < coeffs.size(); ++i) s.set(min_exponent + static_cast<int>(i), coeffs[i]);
        return s;
    }

    const std::string& tag() const { return tag_; }
    int min_exponent() const { return min_exponent_; }
    int truncation() const { return truncation_; }
    bool exact() const { return truncation_ == kExact; }
    const map_type& terms() const { return coeffs_; }

    /// Coefficient at `e`; throws if `e` is at or beyond the truncation.
    T coeff(int e) const
    {
        if (e >= truncation_) throw DomainError("coefficient requested beyond truncation order");
        auto it = coeffs_.find(e);
        return it == coeffs_.end() ? T() : it->second;
    }

    /// Sets a coefficient.  Exponents outside the validity range are ignored.
    void set(int e, const T& c)
    {
        if (e >= truncation_) return;
        if (is_zero_value(c)) {
            coeffs_.erase(e);
            return;
        }
        if (e < min_exponent_) min_exponent_ = e;
        coeffs_[e] = c;
    }

    void add_to(int e, const T& c)
    {
        if (e >= truncation_) return;
        auto it = coeffs_.find(e);
        if (it == coeffs_.end()) {
            set(e, c);
        } else {
            it->second += c;
            if (is_zero_value(it->second)) coeffs_.erase(it);
        }
    }

    bool is_zero() const { return coeffs_.empty(); }

    /// Copy with truncation lowered to `t` (never raised).
    TruncatedSeries truncated(int t) const
    {
        TruncatedSeries out(tag_, std::min(t, truncation_), std::min(min_exponent_, std::min(t, truncation_)));
        for (const auto& [e, c] : coeffs_)
            if (e < out.truncation_) out.coeffs_[e] = c;
        return out;
    }

    /// Lowest exponent with a nonzero coefficient (truncation if none).
    int valuation() const { return coeffs_.empty() ? truncation_ : coeffs_.begin()->first; }

    TruncatedSeries operator-() const
    {
        TruncatedSeries out = *this;
        for (auto& [e, c] : out.coeffs_) c = -c;
        return out;
    }

    TruncatedSeries& operator+=(const TruncatedSeries& b) { return *this = add(*this, b); }
    TruncatedSeries& operator-=(const TruncatedSeries& b) { return *this = add(*this, -b); }
    TruncatedSeries& operator*=(const TruncatedSeries& b) { return *this = multiply(*this, b); }

    template <class S>
    TruncatedSeries scaled(const S& s) const
    {
        TruncatedSeries out(tag_, truncation_, min_exponent_);
        for (const auto& [e, c] : coeffs_) out.set(e, c * s);
        return out;
    }

    /// Multiplication by x^k.
    TruncatedSeries shifted(int k) const
    {
        TruncatedSeries out(tag_, detail::sat_add(truncation_, k), detail::sat_add(min_exponent_, k));
        for (const auto& [e, c] : coeffs_) out.coeffs_[e + k] = c;
        return out;
    }

    friend TruncatedSeries operator+(const TruncatedSeries& a, const TruncatedSeries& b) { return add(a, b); }
    friend TruncatedSeries operator-(const TruncatedSeries& a, const TruncatedSeries& b) { return add(a, -b); }
    friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) { return multiply(a, b); }

    friend bool operator==(const TruncatedSeries& a, const TruncatedSeries& b)
    {
        return a.truncation_ == b.truncation_ && a.coeffs_ == b.coeffs_;
    }

    static std::string merged_tag(const TruncatedSeries& a, const TruncatedSeries& b)
    {
        if (a.tag_.empty()) return b.tag_;
        if (b.tag_.empty() || a.tag_ == b.tag_) return a.tag_;
        throw DomainError("series variable mismatch: '" + a.tag_ + "' vs '" + b.tag_ + "'");
    }

    static TruncatedSeries add(const TruncatedSeries& a, const TruncatedSeries& b)
    {
        const std::string tag = merged_tag(a, b);
        const int t = std::min(a.truncation_, b.truncation_);
        TruncatedSeries out(tag, t, std::min(a.min_exponent_, b.min_exponent_));
        for (const auto& [e, c] : a.coeffs_)
            if (e < t) out.coeffs_[e] = c;
        for (const auto& [e, c] : b.coeffs_)
            if (e < t) out.add_to(e, c);
        return out;
    }

    /// Cauchy product.  A product coefficient is known only while every contributing pair
    /// lies inside both validity ranges, giving truncation min(ta + vb, tb + va).
    static TruncatedSeries multiply(const TruncatedSeries& a, const TruncatedSeries& b)
    {
        const std::string tag = merged_tag(a, b);
        const int va = a.is_zero() ? a.min_exponent_ : a.valuation();
        const int vb = b.is_zero() ? b.min_exponent_ : b.valuation();
        const int t = std::min(detail::sat_add(a.truncation_, vb), detail::sat_add(b.truncation_, va));
        TruncatedSeries out(tag, t, detail::sat_add(va, vb));
        for (const auto& [ea, ca] : a.coeffs_) {
            for (const auto& [eb, cb] : b.coeffs_) {
                const int e = ea + eb;
                if (e >= t) break;
                out.add_to(e, ca * cb);
            }
        }
        return out;
    }

private:
    static bool is_zero_value(const T& c)
    {
        if constexpr (requires { c.is_zero(); }) {
            return c.is_zero();
        } else {
            return voacx::is_zero(c);
        }
    }

    std::string tag_;
    int min_exponent_ = 0;
    int truncation_ = kExact;
    map_type coeffs_;
};

using RationalSeries = TruncatedSeries<Rational>;
using ComplexSeries = TruncatedSeries<Complex>;

template <class T>
TruncatedSeries<T> series_add(const TruncatedSeries<T>& a, const TruncatedSeries<T>& b)
{
    return a + b;
}

template <class T>
TruncatedSeries<T> series_mul(const TruncatedSeries<T>& a, const TruncatedSeries<T>& b)
{
    return a * b;
}

/// Multiplicative inverse up to the truncation of `a`.
/// If a = x^v (c0 + c1 x + ...) is known below t, the inverse is known below t - 2v.
template <class T>
TruncatedSeries<T> series_invert(const TruncatedSeries<T>& a)
{
    if (a.is_zero()) throw SingularError("cannot invert a series with zero leading coefficient");
    const int v = a.valuation();
    const int t = detail::sat_add(a.truncation(), -2 * v);
    const T c0 = a.coeff(v);
    // Unit part u(x) = a(x) x^{-v}, known below t_u = truncation - v.
    const int tu = detail::sat_add(a.truncation(), -v);
    TruncatedSeries<T> out(a.tag(), t, -v);
    if (a.exact() && a.terms().size() == 1) {
        out.set(-v, T(1) / c0);
        return out;
    }
    if (tu == kExact) throw DomainError("inverse of an exact non-monomial series needs a truncation order");
    std::vector<T> inv(static_cast<std::size_t>(tu), T());
    inv[0] = T(1) / c0;
    for (int n = 1; n < tu; ++n) {
        T acc{};
        for (int k = 1; k <= n; ++k) {
            auto it = a.terms().find(v + k);
            if (it != a.terms().end()) acc += it->second * inv[static_cast<std::size_t>(n - k)];
        }
        inv[static_cast<std::size_t>(n)] = -acc / c0;
    }
    for (int n = 0; n < tu; ++n) out.set(n - v, inv[static_cast<std::size_t>(n)]);
    return out;
}

/// Maximum coefficient deviation over the exponents known to both series, or nullopt if the
/// known ranges do not overlap.
template <class T>
std::optional<double> series_compare(const TruncatedSeries<T>& a, const TruncatedSeries<T>& b)
{
    TruncatedSeries<T>::merged_tag(a, b);
    const int lo = std::max(a.min_exponent(), b.min_exponent());
    const int hi = std::min(a.truncation(), b.truncation());
    if (hi <= lo) return std::nullopt;
    double dev = 0.0;
    auto visit = [&](const TruncatedSeries<T>& s) {
        for (const auto& [e, c] : s.terms()) {
            if (e >= hi) break;
            const auto d = a.coeff(e) - b.coeff(e);
            dev = std::max(dev, abs_value(d));
        }
    };
    visit(a);
    visit(b);
    return dev;
}

/// Converts exact coefficients to floating point.
inline ComplexSeries to_complex_series(const RationalSeries& s)
{
    ComplexSeries out(s.tag(), s.truncation(), s.min_exponent());
    for (const auto& [e, c] : s.terms()) out.set(e, to_complex(c));
    return out;
}

} // namespace voacx
