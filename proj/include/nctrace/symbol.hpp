#pragma once

#include <nctrace/dynkin.hpp>
#include <nctrace/ncalg.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nctrace {

/// alpha(z) = a - q z.
template <Scalar S> struct AffineOrder
{
    S a{};
    S q{};

    S at(S const& z) const { return a - q * z; }
    bool constant() const { return is_zero(q); }

    friend AffineOrder operator+(AffineOrder const& x, AffineOrder const& y) { return {x.a + y.a, x.q + y.q}; }
    friend bool operator==(AffineOrder const& x, AffineOrder const& y) { return x.a == y.a && x.q == y.q; }
};

struct TermKey
{
    int j = 0; ///< shift below the leading order
    int l = 0; ///< power of log|D|
    auto operator<=>(TermKey const&) const = default;
};

/// Truncation marker for expansions with no dropped remainder.
inline constexpr int kExact = std::numeric_limits<int>::max() / 4;

class IncompatibleOrders : public Error
{
public:
    using Error::Error;
};

/// Truncated log-polyhomogeneous expansion
///
///     A(z) ~ sum_{j < N, l} b_{j,l}(z) |D|^{alpha(z) - j} log^l |D|
///
/// in right-normal form: every coefficient family stands to the left of the
/// powers of |D|.  The dropped remainder has order Re(a) - N (plus an
/// arbitrarily small epsilon when log terms are present).  N == kExact marks
/// an expansion that is exact as written.
template <Scalar S> class Symbol
{
public:
    using Family = BFamily<S>;
    using Terms = std::map<TermKey, Family>;

    Symbol() = default;
    Symbol(AffineOrder<S> order, int N) : order_(std::move(order)), N_(N) {}

    static Symbol zero(AffineOrder<S> order = {}, int N = kExact) { return Symbol(std::move(order), N); }

    /// b |D|^{alpha(z)} log^l |D|, exact.
    static Symbol term(Family b, AffineOrder<S> order = {}, int l = 0)
    {
        Symbol s(std::move(order), kExact);
        s.add(TermKey{0, l}, std::move(b));
        return s;
    }
    static Symbol term(BElement<S> b, AffineOrder<S> order = {}, int l = 0)
    {
        return term(Family(std::move(b)), std::move(order), l);
    }
    static Symbol unit() { return term(BElement<S>::unit()); }
    static Symbol power(AffineOrder<S> order) { return term(BElement<S>::unit(), std::move(order)); }
    static Symbol power(S a) { return power(AffineOrder<S>{std::move(a), S{}}); }
    static Symbol log_power(int l) { return term(BElement<S>::unit(), AffineOrder<S>{}, l); }

    AffineOrder<S> const& order() const { return order_; }
    Terms const& terms() const { return terms_; }
    int truncation() const { return N_; }
    bool exact() const { return N_ >= kExact; }
    bool is_zero() const { return terms_.empty(); }

    int log_degree() const
    {
        int L = 0;
        for (auto const& [k, f] : terms_) L = std::max(L, k.l);
        return L;
    }

    /// Real part of the order of the dropped remainder; +infinity for exact expansions.
    double remainder_order_tag() const
    {
        if (exact()) return std::numeric_limits<double>::infinity();
        return to_complex(order_.a).real() - N_;
    }
    /// Remainders of expansions with log terms are only controlled up to an epsilon.
    bool remainder_has_epsilon_slack() const { return log_degree() > 0; }

    Family const* find(TermKey key) const
    {
        auto it = terms_.find(key);
        return it == terms_.end() ? nullptr : &it->second;
    }

    /// Add a family at `key`; terms at or beyond the truncation are discarded.
    void add(TermKey key, Family f)
    {
        if (key.j >= N_ || f.is_zero()) return;
        auto [it, inserted] = terms_.try_emplace(key, f);
        if (!inserted) {
            it->second += f;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    Symbol truncated(int N) const
    {
        Symbol r(order_, std::min(N_, N));
        for (auto const& [k, f] : terms_) r.add(k, f);
        if (N >= kExact) r.N_ = N_;
        return r;
    }

    Symbol scaled(S const& s) const
    {
        Symbol r(order_, N_);
        if (nctrace::is_zero(s)) return r;
        for (auto const& [k, f] : terms_) r.add(k, f.scaled(s));
        return r;
    }

    /// Multiply every coefficient by a scalar polynomial in z.
    Symbol times_polynomial(std::vector<S> const& p) const
    {
        Symbol r(order_, N_);
        for (auto const& [k, f] : terms_) r.add(k, f.times_polynomial(p));
        return r;
    }

    template <typename F> Symbol map_coefficients(F&& fn) const
    {
        Symbol r(order_, N_);
        for (auto const& [k, f] : terms_) r.add(k, f.map(fn));
        return r;
    }

    /// Deterministic listing: ascending j, then l, then words in lexicographic order.
    std::string str() const
    {
        std::string s = "order(" + to_string(order_.a) + " - " + to_string(order_.q) + "*z)";
        s += exact() ? " exact" : " N=" + std::to_string(N_);
        s += "\n";
        for (auto const& [k, f] : terms_) {
            s += "  [j=" + std::to_string(k.j) + ",l=" + std::to_string(k.l) + "] ";
            for (int m = 0; m <= f.order(); ++m) {
                for (auto const& [w, c] : f[m].terms()) {
                    s += to_string(c) + "*" + w.str();
                    if (m > 0) s += "*z^" + std::to_string(m);
                    s += " ";
                }
            }
            s += "\n";
        }
        return s;
    }

private:
    AffineOrder<S> order_{};
    Terms terms_;
    int N_ = kExact;
};

template <Scalar S> bool is_integer_value(S const& x, long long* out = nullptr)
{
    FloatComplex const c = to_complex(x);
    if (c.imag() != 0.0) return false;
    double const r = std::round(c.real());
    if constexpr (scalar_traits<S>::exact) {
        if (!(x == from_ratio<S>(static_cast<long long>(r)))) return false;
    } else {
        if (std::abs(c.real() - r) > 1e-12) return false;
    }
    if (out) *out = static_cast<long long>(r);
    return true;
}

/// Re-express x with leading order `target`, where order(x) = target - shift.
template <Scalar S> Symbol<S> shifted_into(Symbol<S> const& x, AffineOrder<S> const& target, int shift)
{
    Symbol<S> r(target, x.exact() ? kExact : x.truncation() + shift);
    for (auto const& [k, f] : x.terms()) r.add(TermKey{k.j + shift, k.l}, f);
    return r;
}

/// Sum of two expansions whose orders differ by an integer (same slope).
template <Scalar S> Symbol<S> sym_add(Symbol<S> const& x, Symbol<S> const& y)
{
    if (x.is_zero() && x.exact()) return y;
    if (y.is_zero() && y.exact()) return x;
    if (!(x.order().q == y.order().q))
        throw IncompatibleOrders("cannot add expansions with different z-slopes");
    long long d = 0;
    if (!is_integer_value(x.order().a - y.order().a, &d))
        throw IncompatibleOrders("cannot add expansions whose orders differ by a non-integer");
    if (d >= 0) {
        Symbol<S> r = x;
        Symbol<S> ys = shifted_into(y, x.order(), static_cast<int>(d));
        Symbol<S> out(x.order(), std::min(r.truncation(), ys.truncation()));
        for (auto const& [k, f] : r.terms()) out.add(k, f);
        for (auto const& [k, f] : ys.terms()) out.add(k, f);
        return out;
    }
    return sym_add(y, x);
}

template <Scalar S> Symbol<S> sym_sub(Symbol<S> const& x, Symbol<S> const& y)
{
    return sym_add(x, y.scaled(from_ratio<S>(-1)));
}

namespace detail {

template <Scalar S> std::vector<S> poly_derivative(std::vector<S> p, int r)
{
    for (int i = 0; i < r; ++i) {
        if (p.size() <= 1) return {S{}};
        std::vector<S> d(p.size() - 1);
        for (std::size_t m = 1; m < p.size(); ++m) d[m - 1] = p[m] * from_ratio<S>(static_cast<long long>(m));
        p = std::move(d);
    }
    return p;
}

template <Scalar S> bool poly_is_zero(std::vector<S> const& p)
{
    return std::all_of(p.begin(), p.end(), [](S const& c) { return is_zero(c); });
}

/// Polynomial coefficients (in z) of  C(l,r) * d^r/dbeta^r c_{beta,k}  at beta = b0 + b1 z.
template <Scalar S> std::vector<S> commutation_coefficient(int k, int l, int r, S const& b0, S const& b1)
{
    auto p = poly_derivative(binomial_polynomial<S>(k), r);
    if (poly_is_zero(p)) return {S{}};
    auto c = compose_affine(p, b0, b1);
    S const f = scalar_traits<S>::from_rational(binomial(l, r));
    for (auto& v : c) v = v * f;
    return c;
}

} // namespace detail

/// Right-normal form of the product A B, keeping terms with j < N.
///
/// Each |D|^{beta(z)} log^l|D| on the left is moved past the coefficients of
/// B with
///     |D|^beta log^l|D| b = sum_{k,r} C(l,r) (d_beta^r c_{beta,k}) delta^k(b) |D|^{beta-k} log^{l-r}|D|,
/// the l-th beta-derivative of the basic commutation rule.
template <Scalar S>
Symbol<S> sym_mul(Symbol<S> const& A, Symbol<S> const& B, int N = kExact, AlgebraLimits const& limits = {})
{
    int const Nres = std::min({N, A.truncation(), B.truncation()});
    if (Nres >= kExact) {
        // Only finite commutations are allowed without a truncation request.
        for (auto const& [ka, fa] : A.terms()) {
            long long b = 0;
            bool const finite = A.order().constant() && is_integer_value(A.order().a - from_ratio<S>(ka.j), &b) &&
                                b >= 0 && ka.l == 0;
            if (finite) continue;
            for (auto const& [kb, fb] : B.terms()) {
                bool scalar_only = true;
                for (int m = 0; m <= fb.order(); ++m)
                    for (auto const& [w, c] : fb[m].terms())
                        if (!w.is_unit()) scalar_only = false;
                if (!scalar_only) throw TruncationError("sym_mul: infinite expansion needs a truncation order N");
            }
        }
    }

    Symbol<S> out(A.order() + B.order(), Nres);
    bool dropped = false;
    S const b1 = -A.order().q;

    for (auto const& [ka, fa] : A.terms()) {
        S const b0 = A.order().a - from_ratio<S>(ka.j);
        // |D|^m with m a non-negative integer (no logs) commutes in finitely many steps.
        long long finite_steps = -1;
        if (ka.l == 0 && A.order().constant() && is_integer_value(b0, &finite_steps) && finite_steps < 0)
            finite_steps = -1;
        for (auto const& [kb, fb] : B.terms()) {
            int const base = ka.j + kb.j;
            if (base >= Nres) {
                dropped = true;
                continue;
            }
            BFamily<S> fbk = fb;
            int k = 0;
            bool vanished = false;
            for (; base + k < Nres; ++k) {
                if (k > 0) fbk = fbk.map([](BElement<S> const& e) { return delta(e); });
                if (fbk.is_zero() || (finite_steps >= 0 && k > finite_steps)) {
                    vanished = true;
                    break;
                }
                auto const prod = fa * fbk;
                for (int r = 0; r <= ka.l; ++r) {
                    auto const coef = detail::commutation_coefficient<S>(k, ka.l, r, b0, b1);
                    if (detail::poly_is_zero(coef)) continue;
                    auto fam = prod.times_polynomial(coef);
                    for (int m = 0; m <= fam.order(); ++m) fam[m].check_limits(limits);
                    out.add(TermKey{base + k, ka.l - r + kb.l}, std::move(fam));
                }
            }
            if (!vanished && !dropped) {
                // The first discarded commutation step decides whether the cut lost anything:
                // both delta^k(b) and the coefficient polynomial vanish for all larger k once they vanish.
                auto const next = fbk.map([](BElement<S> const& e) { return delta(e); });
                if (!next.is_zero())
                    for (int r = 0; r <= ka.l; ++r)
                        if (!detail::poly_is_zero(detail::commutation_coefficient<S>(k, ka.l, r, b0, b1)))
                            dropped = true;
            }
        }
    }
    if (!dropped && A.exact() && B.exact()) {
        Symbol<S> exact(out.order(), kExact);
        for (auto const& [key, f] : out.terms()) exact.add(key, f);
        return exact;
    }
    return out;
}

template <Scalar S>
Symbol<S> sym_bracket(Symbol<S> const& A, Symbol<S> const& B, int N = kExact, AlgebraLimits const& limits = {})
{
    return sym_sub(sym_mul(A, B, N, limits), sym_mul(B, A, N, limits));
}

/// |D|^{beta(z)} A in right-normal form.
template <Scalar S>
Symbol<S> commute_power(AffineOrder<S> const& beta, Symbol<S> const& A, int N, AlgebraLimits const& limits = {})
{
    return sym_mul(Symbol<S>::power(beta), A, N, limits);
}

/// log|D| A in right-normal form.
template <Scalar S> Symbol<S> commute_log(Symbol<S> const& A, int N, AlgebraLimits const& limits = {})
{
    return sym_mul(Symbol<S>::log_power(1), A, N, limits);
}

/// Right-normal form of a symbol: zero families removed, terms beyond N dropped.
template <Scalar S> Symbol<S> normalize(Symbol<S> const& A)
{
    Symbol<S> r(A.order(), A.truncation());
    for (auto const& [k, f] : A.terms()) r.add(k, f);
    return r;
}

/// Right-normal form of an ordered product of factors.
template <Scalar S>
Symbol<S> normalize_product(std::vector<Symbol<S>> const& factors, int N, AlgebraLimits const& limits = {})
{
    Symbol<S> acc = Symbol<S>::unit();
    for (auto const& f : factors) acc = sym_mul(acc, f, N, limits);
    return acc;
}

/// First-order derivation applied to every coefficient.
template <Scalar S> Symbol<S> sym_delta(Symbol<S> const& A)
{
    return A.map_coefficients([](BElement<S> const& e) { return delta(e); });
}

/// Value of a family at z = 0 (its families become constants).
template <Scalar S> Symbol<S> evaluate_at_zero(Symbol<S> const& A)
{
    Symbol<S> r(AffineOrder<S>{A.order().a, S{}}, A.truncation());
    for (auto const& [k, f] : A.terms()) r.add(k, BFamily<S>(f.at_center()));
    return r;
}

/// n-th z-derivative at z = 0 of A(z) = sum b_{j,l}(z)|D|^{a-qz-j}log^l|D|.
/// Each derivative hitting |D|^{-qz} contributes a factor -q log|D|, so the log degree grows by at most n.
template <Scalar S> Symbol<S> family_derivative_at_zero(Symbol<S> const& A, int n)
{
    Symbol<S> r(AffineOrder<S>{A.order().a, S{}}, A.truncation());
    S const mq = -A.order().q;
    for (auto const& [k, fam] : A.terms()) {
        BFamily<S> const f = fam.recentered(S{});
        if (n > f.order() && !f.exact())
            throw TruncationError("family_derivative_at_zero: derivative order exceeds family truncation");
        for (int t = 0; t <= n; ++t) {
            if (t > 0 && is_zero(mq)) break;
            if (n - t > f.order()) continue;
            S const c = scalar_traits<S>::from_rational(binomial(n, t) * factorial(n - t)) * int_power(mq, t);
            BElement<S> const b = f[n - t].scaled(c);
            if (b.is_zero()) continue;
            r.add(TermKey{k.j, k.l + t}, BFamily<S>(b));
        }
    }
    return r;
}

/// n-th z-derivative at z = 0 of A(z)|D|^{qz}: a symbol of constant order a and unchanged log degree.
template <Scalar S> Symbol<S> compensated_derivative_at_zero(Symbol<S> const& A, int n)
{
    Symbol<S> r(AffineOrder<S>{A.order().a, S{}}, A.truncation());
    S const c = scalar_traits<S>::from_rational(factorial(n));
    for (auto const& [k, fam] : A.terms()) {
        BFamily<S> const f = fam.recentered(S{});
        if (n > f.order()) {
            if (!f.exact())
                throw TruncationError("compensated_derivative_at_zero: derivative order exceeds family truncation");
            continue;
        }
        r.add(k, BFamily<S>(f[n].scaled(c)));
    }
    return r;
}

/// sigma(z)(B) = |D|^{-z} B |D|^{z}.
template <Scalar S> Symbol<S> sigma_conj(Symbol<S> const& B, int N, AlgebraLimits const& limits = {})
{
    auto const left = sym_mul(Symbol<S>::power(AffineOrder<S>{S{}, from_ratio<S>(1)}), B, N, limits);
    return sym_mul(left, Symbol<S>::power(AffineOrder<S>{S{}, from_ratio<S>(-1)}), N, limits);
}

/// L^n(B) with L = [log|D|, .].
template <Scalar S> Symbol<S> log_ad_power(Symbol<S> const& B, int n, int N, AlgebraLimits const& limits = {})
{
    Symbol<S> r = B;
    for (int i = 0; i < n; ++i) r = sym_bracket(Symbol<S>::log_power(1), r, N, limits);
    return r;
}

class BoundsTooSmall : public Error
{
public:
    using Error::Error;
};

/// Bounds of the perturbation series for (|D| + P)^{-z}.
struct PerturbationBounds
{
    int max_n = 0; ///< number of P factors
    int max_k = 0; ///< total number of delta applications |k|
};

/// Right-normal expansion of (|D| + P)^{-z} for P of order 0:
///
///     |D|^{-z} + sum_{n>=1} sum_k (-1)^{|k|+n} Gamma(z+|k|+n)/Gamma(z)
///         / (k! (k_1+1)(k_1+k_2+2)...(k_1+...+k_n+n)) delta^{k_1}(P)...delta^{k_n}(P) |D|^{-z-|k|-n}
///
/// keeping terms of order above -z - N.  The bounds must reach every such term.
template <Scalar S>
Symbol<S> perturbed_power(Symbol<S> const& P, int N, PerturbationBounds bounds, AlgebraLimits const& limits = {})
{
    if (!(P.order().a == S{}) || !(P.order().q == S{}))
        throw IncompatibleOrders("perturbed_power: P must have order 0");
    if (P.log_degree() != 0) throw IncompatibleOrders("perturbed_power: P must be free of log terms");
    AffineOrder<S> const lead{S{}, from_ratio<S>(1)};
    Symbol<S> result = Symbol<S>::power(lead);
    if (P.is_zero()) return result;
    if (bounds.max_n < N - 1 || bounds.max_k < N - 2)
        throw BoundsTooSmall("perturbed_power: bounds max_n=" + std::to_string(bounds.max_n) +
                             " max_k=" + std::to_string(bounds.max_k) + " do not reach order -N with N=" +
                             std::to_string(N) + " (need max_n >= N-1, max_k >= N-2)");

    std::vector<Symbol<S>> dP{P};
    auto delta_of = [&](int k) -> Symbol<S> const& {
        while (static_cast<int>(dP.size()) <= k) dP.push_back(sym_delta(dP.back()));
        return dP[static_cast<std::size_t>(k)];
    };

    Symbol<S> acc(lead, N);
    // Depth-first over (k_1, ..., k_n); `prefix` holds delta^{k_1}(P)...delta^{k_t}(P),
    // `shift` = k_1+...+k_t + t, `denom` = prod k_i! * prod (k_1+...+k_i + i).
    std::function<void(Symbol<S> const&, int, int, int, Rational const&)> visit =
        [&](Symbol<S> const& prefix, int t, int ksum, int shift, Rational const& denom) {
            if (t >= 1) {
                int const sign = (shift % 2 == 0) ? 1 : -1;
                auto coef = rising_factorial_polynomial<S>(shift);
                S const f = scalar_traits<S>::from_rational(Rational(sign) / denom);
                for (auto& c : coef) c = c * f;
                auto term = sym_mul(prefix, Symbol<S>::power(AffineOrder<S>{from_ratio<S>(-shift), from_ratio<S>(1)}),
                                    N, limits);
                acc = sym_add(acc, term.times_polynomial(coef));
            }
            if (t == bounds.max_n) return;
            for (int k = 0; shift + k + 1 < N && ksum + k <= bounds.max_k; ++k) {
                int const next_shift = shift + k + 1;
                auto next = t == 0 ? delta_of(k) : sym_mul(prefix, delta_of(k), N - next_shift, limits);
                if (next.is_zero()) continue;
                visit(next, t + 1, ksum + k, next_shift, denom * factorial(k) * next_shift);
            }
        };
    visit(Symbol<S>::unit(), 0, 0, 0, Rational{1});
    return sym_add(result, acc);
}

/// log(|D| + P) - log|D| for P of order 0, through the Campbell-Hausdorff series
///
///     log(|D|+P) = log(|D|(1 + |D|^{-1}P)) = BCH(log|D|, Y),  Y = sum_{i>=1} (-1)^{i-1}/i (|D|^{-1}P)^i,
///
/// so the difference is Y plus the homogeneous BCH components of degree 2..M_ch.
/// Every bracket with log|D| lowers the order by one, so degree d contributes from order -d on.
template <Scalar S>
Symbol<S> log_difference(Symbol<S> const& P, int M_ch, int N, AlgebraLimits const& limits = {})
{
    if (!(P.order().a == S{}) || !(P.order().q == S{}))
        throw IncompatibleOrders("log_difference: P must have order 0");
    if (P.is_zero()) return Symbol<S>::zero();
    if (M_ch < N - 1)
        throw BoundsTooSmall("log_difference: Campbell-Hausdorff depth " + std::to_string(M_ch) +
                             " does not reach order -N with N=" + std::to_string(N));

    auto const x = sym_mul(Symbol<S>::power(from_ratio<S>(-1)), P, N, limits);
    Symbol<S> Y = Symbol<S>::zero(AffineOrder<S>{}, N);
    Symbol<S> xi = Symbol<S>::unit();
    for (int i = 1; i < N; ++i) {
        xi = sym_mul(xi, x, N, limits);
        Y = sym_add(Y, xi.scaled(from_ratio<S>(i % 2 == 1 ? 1 : -1, i)));
    }
    Y = Y.truncated(N);

    Symbol<S> const X = Symbol<S>::log_power(1);
    LieOps<Symbol<S>> ops{
        [&](Symbol<S> const& u, Symbol<S> const& v) { return sym_bracket(u, v, N, limits); },
        [](Symbol<S> const& u, Symbol<S> const& v) { return sym_add(u, v); },
        [](Symbol<S> const& u, Rational const& c) { return u.scaled(scalar_traits<S>::from_rational(c)); },
        [](Symbol<S> const& u) { return u.is_zero(); },
    };
    Symbol<S> out = Y;
    for (int d = 2; d <= std::min(M_ch, N - 1); ++d) {
        auto const c = bch_homogeneous(X, Y, d, ops);
        if (c) out = sym_add(out, *c);
    }
    return normalize(out.truncated(N));
}

/// Coefficient-exact comparison of all terms with j < N.
template <Scalar S> bool same_expansion(Symbol<S> const& x, Symbol<S> const& y, int N)
{
    if (!(x.order() == y.order())) return false;
    auto const d = sym_sub(x, y);
    for (auto const& [k, f] : d.terms())
        if (k.j < N && !f.is_zero()) return false;
    return true;
}

} // namespace nctrace
