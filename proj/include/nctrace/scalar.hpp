#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nctrace {

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class CenterMismatch : public Error
{
public:
    using Error::Error;
};

class DivisionByZero : public Error
{
public:
    using Error::Error;
};

/// An expansion was asked for more terms than its inputs carry.
class TruncationError : public Error
{
public:
    using Error::Error;
};

using Rational = boost::multiprecision::cpp_rational;
using FloatComplex = std::complex<double>;

/// Complex number with exact rational real and imaginary parts.
struct ExactComplex
{
    Rational re{0};
    Rational im{0};

    ExactComplex() = default;
    ExactComplex(Rational r, Rational i = Rational{0}) : re(std::move(r)), im(std::move(i)) {}
    ExactComplex(long long r) : re(r), im(0) {}
    ExactComplex(int r) : re(r), im(0) {}

    friend ExactComplex operator+(ExactComplex const& x, ExactComplex const& y) { return {x.re + y.re, x.im + y.im}; }
    friend ExactComplex operator-(ExactComplex const& x, ExactComplex const& y) { return {x.re - y.re, x.im - y.im}; }
    friend ExactComplex operator-(ExactComplex const& x) { return {-x.re, -x.im}; }
    friend ExactComplex operator*(ExactComplex const& x, ExactComplex const& y)
    {
        return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
    }
    friend ExactComplex operator/(ExactComplex const& x, ExactComplex const& y)
    {
        Rational const den = y.re * y.re + y.im * y.im;
        if (den == 0) throw DivisionByZero("exact division by zero");
        return {(x.re * y.re + x.im * y.im) / den, (x.im * y.re - x.re * y.im) / den};
    }
    ExactComplex& operator+=(ExactComplex const& y) { return *this = *this + y; }
    ExactComplex& operator-=(ExactComplex const& y) { return *this = *this - y; }
    ExactComplex& operator*=(ExactComplex const& y) { return *this = *this * y; }
    ExactComplex& operator/=(ExactComplex const& y) { return *this = *this / y; }

    friend bool operator==(ExactComplex const& x, ExactComplex const& y) { return x.re == y.re && x.im == y.im; }
};

/// Per-backend services used by the generic jet and symbol code.
template <typename S> struct scalar_traits;

template <> struct scalar_traits<FloatComplex>
{
    static constexpr bool exact = false;
    static constexpr char const* name = "float";

    static FloatComplex from_ratio(long long p, long long q = 1)
    {
        return FloatComplex(static_cast<double>(p) / static_cast<double>(q), 0.0);
    }
    static FloatComplex from_rational(Rational const& r)
    {
        return FloatComplex(static_cast<double>(r), 0.0);
    }
    static bool is_zero(FloatComplex const& x) { return x == FloatComplex{}; }
    static FloatComplex to_complex(FloatComplex const& x) { return x; }
    static FloatComplex divide(FloatComplex const& x, FloatComplex const& y) { return x / y; }
    static std::string to_string(FloatComplex const& x)
    {
        std::ostringstream os;
        os.precision(17);
        if (x.imag() == 0.0)
            os << x.real();
        else
            os << '(' << x.real() << (x.imag() < 0 ? "-" : "+") << std::abs(x.imag()) << "i)";
        return os.str();
    }
};

template <> struct scalar_traits<ExactComplex>
{
    static constexpr bool exact = true;
    static constexpr char const* name = "exact";

    static ExactComplex from_ratio(long long p, long long q = 1)
    {
        if (q == 0) throw DivisionByZero("exact division by zero");
        return ExactComplex(Rational(p, q));
    }
    static ExactComplex from_rational(Rational const& r) { return ExactComplex(r); }
    static bool is_zero(ExactComplex const& x) { return x.re == 0 && x.im == 0; }
    static FloatComplex to_complex(ExactComplex const& x)
    {
        return FloatComplex(static_cast<double>(x.re), static_cast<double>(x.im));
    }
    static ExactComplex divide(ExactComplex const& x, ExactComplex const& y) { return x / y; }
    static std::string to_string(ExactComplex const& x)
    {
        if (x.im == 0) return x.re.str();
        std::string s = "(" + x.re.str();
        s += (x.im < 0 ? "-" : "+");
        s += (x.im < 0 ? Rational(-x.im) : x.im).str();
        return s + "i)";
    }
};

template <typename S>
concept Scalar = requires(S a, S b) {
    { a + b } -> std::convertible_to<S>;
    { a * b } -> std::convertible_to<S>;
    { scalar_traits<S>::is_zero(a) } -> std::convertible_to<bool>;
};

template <Scalar S> S from_ratio(long long p, long long q = 1) { return scalar_traits<S>::from_ratio(p, q); }
template <Scalar S> bool is_zero(S const& x) { return scalar_traits<S>::is_zero(x); }
template <Scalar S> FloatComplex to_complex(S const& x) { return scalar_traits<S>::to_complex(x); }
template <Scalar S> std::string to_string(S const& x) { return scalar_traits<S>::to_string(x); }

template <Scalar S> S int_power(S base, int e)
{
    S r = from_ratio<S>(1);
    for (int i = 0; i < e; ++i) r = r * base;
    return r;
}

inline Rational factorial(int n)
{
    Rational r{1};
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

inline Rational binomial(int n, int k)
{
    if (k < 0 || k > n) return Rational{0};
    return factorial(n) / (factorial(k) * factorial(n - k));
}

} // namespace nctrace
