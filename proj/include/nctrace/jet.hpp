#pragma once

#include <nctrace/scalar.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>
#include <vector>

namespace nctrace {

/// Truncated Taylor expansion  c_0 + c_1 (z - center) + ... + c_K (z - center)^K.
///
/// Arithmetic between two jets keeps the smaller truncation order; the
/// coefficients beyond K are unknown, not zero.
template <Scalar S> class Jet
{
public:
    Jet() : coeffs_(1, S{}) {}
    Jet(S center, std::vector<S> coeffs) : center_(std::move(center)), coeffs_(std::move(coeffs))
    {
        if (coeffs_.empty()) throw TruncationError("a jet needs at least one coefficient");
    }

    static Jet constant(S value, int K, S center = S{})
    {
        std::vector<S> c(static_cast<std::size_t>(K) + 1, S{});
        c[0] = std::move(value);
        return Jet(std::move(center), std::move(c));
    }
    static Jet zero(int K, S center = S{}) { return constant(S{}, K, std::move(center)); }

    /// The identity function z, expanded at `center`.
    static Jet variable(int K, S center = S{})
    {
        Jet j = constant(center, K, center);
        if (K >= 1) j.coeffs_[1] = from_ratio<S>(1);
        return j;
    }

    S const& center() const { return center_; }
    int order() const { return static_cast<int>(coeffs_.size()) - 1; }
    S const& operator[](int m) const { return coeffs_.at(static_cast<std::size_t>(m)); }
    S coeff(int m) const { return (m >= 0 && m <= order()) ? coeffs_[static_cast<std::size_t>(m)] : S{}; }
    std::vector<S> const& coefficients() const { return coeffs_; }

    Jet truncated(int K) const
    {
        if (K > order()) throw TruncationError("cannot extend a jet beyond its truncation order");
        return Jet(center_, std::vector<S>(coeffs_.begin(), coeffs_.begin() + K + 1));
    }

    /// d/dz; the truncation order drops by one (a constant jet stays order 0).
    Jet derivative() const
    {
        if (order() == 0) return zero(0, center_);
        std::vector<S> c(coeffs_.size() - 1);
        for (int m = 1; m <= order(); ++m) c[m - 1] = coeffs_[m] * from_ratio<S>(m);
        return Jet(center_, std::move(c));
    }

    friend Jet operator+(Jet const& x, Jet const& y)
    {
        check_center(x, y);
        int const K = std::min(x.order(), y.order());
        std::vector<S> c(static_cast<std::size_t>(K) + 1);
        for (int m = 0; m <= K; ++m) c[m] = x.coeffs_[m] + y.coeffs_[m];
        return Jet(x.center_, std::move(c));
    }
    friend Jet operator-(Jet const& x) { return x.scaled(from_ratio<S>(-1)); }
    friend Jet operator-(Jet const& x, Jet const& y) { return x + (-y); }

    /// Cauchy product truncated to the smaller order.
    friend Jet operator*(Jet const& x, Jet const& y)
    {
        check_center(x, y);
        int const K = std::min(x.order(), y.order());
        std::vector<S> c(static_cast<std::size_t>(K) + 1, S{});
        for (int m = 0; m <= K; ++m)
            for (int i = 0; i <= m; ++i) c[m] += x.coeffs_[i] * y.coeffs_[m - i];
        return Jet(x.center_, std::move(c));
    }

    Jet scaled(S const& s) const
    {
        Jet r = *this;
        for (auto& c : r.coeffs_) c = c * s;
        return r;
    }

    /// Reciprocal; requires an invertible constant coefficient.
    Jet inverse() const
    {
        if (is_zero(coeffs_[0])) throw DivisionByZero("jet with vanishing constant term is not invertible");
        std::vector<S> r(coeffs_.size(), S{});
        S const inv0 = scalar_traits<S>::divide(from_ratio<S>(1), coeffs_[0]);
        r[0] = inv0;
        for (int m = 1; m <= order(); ++m) {
            S acc{};
            for (int i = 1; i <= m; ++i) acc += coeffs_[i] * r[m - i];
            r[m] = -(acc * inv0);
        }
        return Jet(center_, std::move(r));
    }
    friend Jet operator/(Jet const& x, Jet const& y) { return x * y.inverse(); }

    friend bool operator==(Jet const& x, Jet const& y) { return x.center_ == y.center_ && x.coeffs_ == y.coeffs_; }

private:
    static void check_center(Jet const& x, Jet const& y)
    {
        if (!(x.center_ == y.center_)) throw CenterMismatch("jet centers differ");
    }

    S center_{};
    std::vector<S> coeffs_;
};

/// Square root of a jet with nonzero constant term (principal branch at c_0); float backend only.
template <Scalar S>
    requires(!scalar_traits<S>::exact)
Jet<S> sqrt(Jet<S> const& f)
{
    if (is_zero(f[0])) throw DivisionByZero("square root of a jet with vanishing constant term");
    std::vector<S> g(f.coefficients().size(), S{});
    g[0] = S(std::sqrt(to_complex(f[0])));
    S const two_g0 = g[0] + g[0];
    for (int m = 1; m <= f.order(); ++m) {
        S acc = f[m];
        for (int i = 1; i < m; ++i) acc = acc - g[i] * g[m - i];
        g[m] = scalar_traits<S>::divide(acc, two_g0);
    }
    return Jet<S>(f.center(), std::move(g));
}

/// Coefficients of p(h + t) as a polynomial in t, given those of p(t).
template <Scalar S> std::vector<S> taylor_shift(std::vector<S> p, S const& h)
{
    int const n = static_cast<int>(p.size());
    for (int i = 0; i < n; ++i)
        for (int k = n - 2; k >= i; --k) p[k] = p[k] + h * p[k + 1];
    return p;
}

/// Coefficients (in z) of p(b0 + b1 z) for a polynomial p given by its coefficients.
template <Scalar S> std::vector<S> compose_affine(std::vector<S> const& p, S const& b0, S const& b1)
{
    std::vector<S> out(1, S{});
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
        std::vector<S> next(out.size() + 1, S{});
        for (std::size_t i = 0; i < out.size(); ++i) {
            next[i] += out[i] * b0;
            next[i + 1] += out[i] * b1;
        }
        next[0] += *it;
        out = std::move(next);
    }
    while (out.size() > 1 && is_zero(out.back())) out.pop_back();
    return out;
}

/// Product of two polynomials given by coefficient vectors.
template <Scalar S> std::vector<S> poly_mul(std::vector<S> const& a, std::vector<S> const& b)
{
    if (a.empty() || b.empty()) return {};
    std::vector<S> out(a.size() + b.size() - 1, S{});
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (is_zero(a[i])) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

/// Coefficients of the polynomial  alpha -> alpha (alpha-1) ... (alpha-k+1) / k!.
template <Scalar S> std::vector<S> binomial_polynomial(int k)
{
    std::vector<S> p{from_ratio<S>(1)};
    for (int i = 0; i < k; ++i) p = poly_mul(p, std::vector<S>{from_ratio<S>(-i), from_ratio<S>(1)});
    S const inv = scalar_traits<S>::from_rational(Rational{1} / factorial(k));
    for (auto& c : p) c = c * inv;
    return p;
}

/// Coefficients of the rising factorial  z (z+1) ... (z+m-1).
template <Scalar S> std::vector<S> rising_factorial_polynomial(int m)
{
    std::vector<S> p{from_ratio<S>(1)};
    for (int i = 0; i < m; ++i) p = poly_mul(p, std::vector<S>{from_ratio<S>(i), from_ratio<S>(1)});
    return p;
}

template <Scalar S> Jet<S> polynomial_jet(std::vector<S> const& p, int K)
{
    std::vector<S> c(static_cast<std::size_t>(K) + 1, S{});
    for (int m = 0; m <= K && m < static_cast<int>(p.size()); ++m) c[m] = p[m];
    return Jet<S>(S{}, std::move(c));
}

/// Taylor jet at 0 of the generalized binomial coefficient alpha -> c_{alpha,k}.
template <Scalar S> Jet<S> binom_jet(int k, int K)
{
    if (k < 0) throw std::invalid_argument("binom_jet: k must be non-negative");
    return polynomial_jet(binomial_polynomial<S>(k), K);
}

/// Taylor jet at 0 of Gamma(z+m)/Gamma(z), the rising factorial polynomial.
template <Scalar S> Jet<S> gamma_ratio_jet(int m, int K)
{
    if (m < 0) throw std::invalid_argument("gamma_ratio_jet: m must be non-negative");
    return polynomial_jet(rising_factorial_polynomial<S>(m), K);
}

/// Truncated Laurent expansion  sum_{i=-p}^{K} c_i (z - center)^i.
///
/// Leading zero coefficients are trimmed so that the coefficient of
/// (z - center)^{-p} is nonzero whenever p > 0.
template <Scalar S> class LaurentJet
{
public:
    LaurentJet() : coeffs_(1, S{}) {}

    /// `coeffs[i]` multiplies (z - center)^{i - pole_order}.
    LaurentJet(S center, int pole_order, std::vector<S> coeffs)
        : center_(std::move(center)), pole_(pole_order), coeffs_(std::move(coeffs))
    {
        if (pole_ < 0) throw std::invalid_argument("LaurentJet: negative pole order");
        normalize();
    }

    explicit LaurentJet(Jet<S> const& j) : LaurentJet(j.center(), 0, j.coefficients()) {}

    static LaurentJet zero(int K, S center = S{})
    {
        return LaurentJet(std::move(center), 0, std::vector<S>(static_cast<std::size_t>(std::max(K, -1) + 1), S{}));
    }

    S const& center() const { return center_; }
    int pole_order() const { return pole_; }
    /// Highest exponent whose coefficient is known.
    int order() const { return static_cast<int>(coeffs_.size()) - 1 - pole_; }

    /// Coefficient of (z - center)^i; zero below the pole, unknown (throws) above the truncation.
    S coeff(int i) const
    {
        if (i < -pole_) return S{};
        if (i > order()) throw TruncationError("Laurent coefficient beyond truncation order requested");
        return coeffs_[static_cast<std::size_t>(i + pole_)];
    }

    LaurentJet truncated(int K) const
    {
        if (K > order()) throw TruncationError("cannot extend a Laurent jet beyond its truncation order");
        std::vector<S> c(coeffs_.begin(), coeffs_.begin() + std::max(0, K + pole_ + 1));
        return LaurentJet(center_, pole_, std::move(c));
    }

    friend LaurentJet operator+(LaurentJet const& x, LaurentJet const& y)
    {
        check_center(x, y);
        int const p = std::max(x.pole_, y.pole_);
        int const K = std::min(x.order(), y.order());
        std::vector<S> c(static_cast<std::size_t>(std::max(0, K + p + 1)), S{});
        for (int i = -p; i <= K; ++i) c[i + p] = x.coeff(i) + y.coeff(i);
        return LaurentJet(x.center_, p, std::move(c));
    }
    friend LaurentJet operator-(LaurentJet const& x) { return x.scaled(from_ratio<S>(-1)); }
    friend LaurentJet operator-(LaurentJet const& x, LaurentJet const& y) { return x + (-y); }

    /// Product; pole orders add and the result is known up to
    /// min(K_x - p_y, K_y - p_x).
    friend LaurentJet operator*(LaurentJet const& x, LaurentJet const& y)
    {
        check_center(x, y);
        int const p = x.pole_ + y.pole_;
        int const K = std::min(x.order() - y.pole_, y.order() - x.pole_);
        std::vector<S> c(static_cast<std::size_t>(std::max(0, K + p + 1)), S{});
        for (int i = -p; i <= K; ++i) {
            S acc{};
            for (int a = -x.pole_; a <= x.order(); ++a) {
                int const b = i - a;
                if (b < -y.pole_ || b > y.order()) continue;
                acc += x.coeffs_[a + x.pole_] * y.coeffs_[b + y.pole_];
            }
            c[i + p] = acc;
        }
        return LaurentJet(x.center_, p, std::move(c));
    }

    LaurentJet scaled(S const& s) const
    {
        std::vector<S> c = coeffs_;
        for (auto& v : c) v = v * s;
        return LaurentJet(center_, pole_, std::move(c));
    }

    /// Reciprocal; the leading coefficient must be nonzero.
    LaurentJet inverse() const
    {
        int lead = 0;
        while (lead < static_cast<int>(coeffs_.size()) && is_zero(coeffs_[lead])) ++lead;
        if (lead == static_cast<int>(coeffs_.size())) throw DivisionByZero("Laurent jet has no nonzero coefficient");
        int const v = lead - pole_; // valuation
        Jet<S> unit(center_, std::vector<S>(coeffs_.begin() + lead, coeffs_.end()));
        Jet<S> inv = unit.inverse();
        // z^{-v} * inv, known to order (K - v) - v.
        return LaurentJet(center_, std::max(0, v), shifted_coeffs(inv.coefficients(), -v));
    }
    friend LaurentJet operator/(LaurentJet const& x, LaurentJet const& y) { return x * y.inverse(); }

    /// d/dz; the pole order grows by one when there is a pole.
    LaurentJet derivative() const
    {
        int const K = order();
        int const p = pole_ > 0 ? pole_ + 1 : 0;
        std::vector<S> c(static_cast<std::size_t>(std::max(0, K - 1 + p + 1)), S{});
        for (int i = -p; i <= K - 1; ++i) {
            int const src = i + 1;
            if (src < -pole_ || src == 0) continue;
            c[i + p] = coeff(src) * from_ratio<S>(src);
        }
        return LaurentJet(center_, p, std::move(c));
    }

    /// Same coefficients expanded about `center`: the germ of f(z + (old - center)).
    LaurentJet translated(S center) const
    {
        LaurentJet r = *this;
        r.center_ = std::move(center);
        return r;
    }

    friend bool operator==(LaurentJet const& x, LaurentJet const& y)
    {
        return x.center_ == y.center_ && x.pole_ == y.pole_ && x.coeffs_ == y.coeffs_;
    }

    std::string str() const
    {
        std::string s;
        for (int i = -pole_; i <= order(); ++i) {
            if (!s.empty()) s += " + ";
            s += to_string(coeff(i)) + "*t^" + std::to_string(i);
        }
        return s + " + O(t^" + std::to_string(order() + 1) + ")";
    }

private:
    static void check_center(LaurentJet const& x, LaurentJet const& y)
    {
        if (!(x.center_ == y.center_)) throw CenterMismatch("Laurent jet centers differ");
    }

    // Represent z^{shift} * sum c_i z^i with pole bookkeeping; shift may be negative.
    static std::vector<S> shifted_coeffs(std::vector<S> const& c, int shift)
    {
        if (shift >= 0) {
            std::vector<S> out(static_cast<std::size_t>(shift), S{});
            out.insert(out.end(), c.begin(), c.end());
            // The caller sets pole order 0; prefix zeros place c at exponent `shift`.
            return out;
        }
        return c; // pole order -shift, coefficients start at exponent shift
    }

    void normalize()
    {
        while (pole_ > 0 && !coeffs_.empty() && is_zero(coeffs_.front())) {
            coeffs_.erase(coeffs_.begin());
            --pole_;
        }
        if (static_cast<int>(coeffs_.size()) < pole_) throw TruncationError("Laurent jet truncated inside its pole part");
    }

    S center_{};
    int pole_ = 0;
    std::vector<S> coeffs_;
};

/// Res^{j+1}: the coefficient of (z - center)^{-(j+1)}; j = -1 gives the finite part.
template <Scalar S> S residue(LaurentJet<S> const& f, int j)
{
    if (j < -1) throw std::invalid_argument("residue: j must be >= -1");
    if (j >= f.pole_order()) return S{};
    return f.coeff(-(j + 1));
}

/// Re-express a germ in w (at w0) in the variable z with w = q z + s; the new
/// center is (w0 - s)/q and the (w - w0)^i coefficient picks up q^i.
template <Scalar S> LaurentJet<S> recenter_affine(LaurentJet<S> const& f, S const& q, S const& s)
{
    if (is_zero(q)) throw std::invalid_argument("recenter_affine: slope q must be nonzero");
    S const z0 = scalar_traits<S>::divide(f.center() - s, q);
    S const qinv = scalar_traits<S>::divide(from_ratio<S>(1), q);
    int const p = f.pole_order();
    std::vector<S> c;
    c.reserve(static_cast<std::size_t>(f.order() + p + 1));
    for (int i = -p; i <= f.order(); ++i) {
        S factor = from_ratio<S>(1);
        if (i >= 0)
            factor = int_power(q, i);
        else
            factor = int_power(qinv, -i);
        c.push_back(f.coeff(i) * factor);
    }
    return LaurentJet<S>(z0, p, std::move(c));
}

} // namespace nctrace
