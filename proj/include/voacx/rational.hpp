#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace voacx {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational, boost::multiprecision::et_off>;
using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int, boost::multiprecision::et_off>;
using Complex = std::complex<double>;

/// Thrown when an input violates a documented precondition.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown for evaluations at a pole or a singular operand.
class SingularError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Thrown when a request is outside what the truncated model supports.
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Rational rat(long long n, long long d = 1) { return Rational(n) / Rational(d); }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline Complex to_complex(const Rational& r) { return Complex(to_double(r), 0.0); }
inline Complex to_complex(const Complex& c) { return c; }

inline std::string to_string(const Rational& r) { return r.str(); }

/// Converts an exact coefficient into the scalar type of a computation.
template <class T>
T scalar_from(const Rational& r)
{
    if constexpr (std::is_same_v<T, Rational>) {
        return r;
    } else {
        return T(to_complex(r));
    }
}

/// Generalized binomial coefficient binom(top, k) for integer top (possibly negative).
inline Rational binomial(long long top, long long k)
{
    if (k < 0) return Rational(0);
    // out * (top - i) / (i + 1) stays integral at every step; 128 bits cover the usual sizes.
    __int128 out = 1;
    constexpr __int128 limit = static_cast<__int128>(1) << 100;
    long long i = 0;
    for (; i < k && out < limit && out > -limit; ++i) out = out * (top - i) / (i + 1);
    Integer big = Integer(static_cast<long long>(out >> 64)) * (Integer(1) << 64) +
                  Integer(static_cast<unsigned long long>(out & 0xFFFFFFFFFFFFFFFFULL));
    for (; i < k; ++i) big = big * Integer(top - i) / Integer(i + 1);
    return Rational(big);
}

/// binom(top, k) for rational top.
inline Rational binomial(const Rational& top, long long k)
{
    if (k < 0) return Rational(0);
    Rational out(1);
    for (long long i = 0; i < k; ++i) {
        out *= (top - Rational(i));
        out /= Rational(i + 1);
    }
    return out;
}

inline Rational factorial(long long n)
{
    Rational out(1);
    for (long long i = 2; i <= n; ++i) out *= Rational(i);
    return out;
}

template <class T>
inline double abs_value(const T& x)
{
    if constexpr (std::is_same_v<T, Rational>) {
        return std::abs(to_double(x));
    } else {
        return std::abs(x);
    }
}

template <class T>
inline bool is_zero(const T& x)
{
    if constexpr (std::is_same_v<T, Rational>) {
        return x == 0;
    } else {
        return x == T(0);
    }
}

/// Integer power with negative exponents allowed (base must be nonzero then).
template <class T>
T ipow(const T& base, long long e)
{
    if (e < 0) {
        if (is_zero(base)) throw SingularError("negative power of zero");
        return T(1) / ipow(base, -e);
    }
    T out(1);
    T b = base;
    while (e > 0) {
        if (e & 1) out *= b;
        b *= b;
        e >>= 1;
    }
    return out;
}

} // namespace voacx
