#pragma once

#include <nctrace/jet.hpp>

#include <compare>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace nctrace {

enum class GeneratorKind { plain, bracket };

/// delta^n(a) or delta^n([D, a]) for a declared algebra element a.
struct Generator
{
    std::string base;
    GeneratorKind kind = GeneratorKind::plain;
    int delta_power = 0;

    auto operator<=>(Generator const&) const = default;

    std::string str() const
    {
        std::string inner = kind == GeneratorKind::bracket ? "[D," + base + "]" : base;
        if (delta_power == 0) return inner;
        if (delta_power == 1) return "d(" + inner + ")";
        return "d^" + std::to_string(delta_power) + "(" + inner + ")";
    }
};

/// Ordered product of generators; the empty word is the unit.
struct Word
{
    std::vector<Generator> factors;

    auto operator<=>(Word const&) const = default;

    bool is_unit() const { return factors.empty(); }
    std::size_t size() const { return factors.size(); }

    friend Word operator*(Word const& x, Word const& y)
    {
        Word w = x;
        w.factors.insert(w.factors.end(), y.factors.begin(), y.factors.end());
        return w;
    }

    std::string str() const
    {
        if (factors.empty()) return "1";
        std::string s;
        for (auto const& g : factors) {
            if (!s.empty()) s += "*";
            s += g.str();
        }
        return s;
    }
};

inline Word word_of(std::string base, int delta_power = 0, GeneratorKind kind = GeneratorKind::plain)
{
    return Word{{Generator{std::move(base), kind, delta_power}}};
}

/// Bounds that keep the free algebra finite during expansions.
struct AlgebraLimits
{
    std::size_t max_word_length = 6;
    int max_delta_power = 8;
};

class LimitExceeded : public Error
{
public:
    using Error::Error;
};

/// Element of the free algebra generated by the delta-iterates: a finite
/// linear combination of words, zero coefficients never stored.
template <Scalar S> class BElement
{
public:
    using Terms = std::map<Word, S>;

    BElement() = default;
    explicit BElement(Word w, S c = from_ratio<S>(1)) { add_term(std::move(w), std::move(c)); }

    static BElement unit() { return BElement(Word{}); }
    static BElement scalar(S c) { return BElement(Word{}, std::move(c)); }

    Terms const& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    void add_term(Word w, S c)
    {
        if (nctrace::is_zero(c)) return;
        auto [it, inserted] = terms_.try_emplace(std::move(w), c);
        if (!inserted) {
            it->second += c;
            if (nctrace::is_zero(it->second)) terms_.erase(it);
        }
    }

    BElement& operator+=(BElement const& y)
    {
        for (auto const& [w, c] : y.terms_) add_term(w, c);
        return *this;
    }
    friend BElement operator+(BElement x, BElement const& y) { return x += y; }
    friend BElement operator-(BElement x, BElement const& y) { return x += y.scaled(from_ratio<S>(-1)); }

    BElement scaled(S const& s) const
    {
        BElement r;
        if (nctrace::is_zero(s)) return r;
        for (auto const& [w, c] : terms_) r.add_term(w, c * s);
        return r;
    }

    friend BElement operator*(BElement const& x, BElement const& y)
    {
        BElement r;
        for (auto const& [wx, cx] : x.terms_)
            for (auto const& [wy, cy] : y.terms_) r.add_term(wx * wy, cx * cy);
        return r;
    }

    friend bool operator==(BElement const& x, BElement const& y) { return x.terms_ == y.terms_; }

    void check_limits(AlgebraLimits const& lim) const
    {
        for (auto const& [w, c] : terms_) {
            if (w.size() > lim.max_word_length)
                throw LimitExceeded("word length " + std::to_string(w.size()) + " exceeds limit " +
                                    std::to_string(lim.max_word_length) + ": " + w.str());
            for (auto const& g : w.factors)
                if (g.delta_power > lim.max_delta_power)
                    throw LimitExceeded("delta power " + std::to_string(g.delta_power) + " exceeds limit " +
                                        std::to_string(lim.max_delta_power) + ": " + g.str());
        }
    }

    std::string str() const
    {
        if (terms_.empty()) return "0";
        std::string s;
        for (auto const& [w, c] : terms_) {
            if (!s.empty()) s += " + ";
            s += to_string(c) + "*" + w.str();
        }
        return s;
    }

private:
    Terms terms_;
};

/// The derivation delta = [|D|, .] on the free algebra (Leibniz rule on words).
template <Scalar S> BElement<S> delta(BElement<S> const& x)
{
    BElement<S> r;
    for (auto const& [w, c] : x.terms()) {
        for (std::size_t i = 0; i < w.factors.size(); ++i) {
            Word dw = w;
            ++dw.factors[i].delta_power;
            r.add_term(std::move(dw), c);
        }
    }
    return r;
}

template <Scalar S> BElement<S> delta_power(BElement<S> x, int n)
{
    for (int i = 0; i < n; ++i) x = delta(x);
    return x;
}

/// Polynomial in the family parameter z with algebra-valued coefficients,
/// expanded at `center`.  `exact` is false once a nonzero coefficient beyond
/// the truncation order has been dropped.
template <Scalar S> class BFamily
{
public:
    BFamily() : coeffs_(1) {}
    explicit BFamily(BElement<S> b, int K = kDefaultOrder) : coeffs_(static_cast<std::size_t>(K) + 1)
    {
        coeffs_[0] = std::move(b);
    }
    BFamily(S center, std::vector<BElement<S>> coeffs, bool exact = true)
        : center_(std::move(center)), coeffs_(std::move(coeffs)), exact_(exact)
    {
        if (coeffs_.empty()) throw TruncationError("a family needs at least one coefficient");
    }

    static constexpr int kDefaultOrder = 24;

    S const& center() const { return center_; }
    int order() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool exact() const { return exact_; }
    BElement<S> const& operator[](int m) const { return coeffs_.at(static_cast<std::size_t>(m)); }
    std::vector<BElement<S>> const& coefficients() const { return coeffs_; }

    /// Value at the expansion center.
    BElement<S> at_center() const { return coeffs_[0]; }

    bool is_zero() const
    {
        for (auto const& c : coeffs_)
            if (!c.is_zero()) return false;
        return true;
    }

    /// Highest power with a nonzero coefficient (-1 for the zero family).
    int degree() const
    {
        for (int m = order(); m >= 0; --m)
            if (!coeffs_[m].is_zero()) return m;
        return -1;
    }

    BFamily& operator+=(BFamily const& y)
    {
        check_center(y);
        int const K = std::min(order(), y.order());
        bool const dropped = dropped_beyond(K) || y.dropped_beyond(K);
        coeffs_.resize(static_cast<std::size_t>(K) + 1);
        for (int m = 0; m <= K; ++m) coeffs_[m] += y.coeffs_[m];
        exact_ = exact_ && y.exact_ && !dropped;
        return *this;
    }
    friend BFamily operator+(BFamily x, BFamily const& y) { return x += y; }

    BFamily scaled(S const& s) const
    {
        BFamily r = *this;
        for (auto& c : r.coeffs_) c = c.scaled(s);
        return r;
    }

    /// Multiply by a scalar polynomial in z (coefficients about the same center).
    BFamily times_polynomial(std::vector<S> const& p) const
    {
        std::vector<BElement<S>> out(coeffs_.size());
        bool dropped = false;
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
            if (coeffs_[i].is_zero()) continue;
            for (std::size_t k = 0; k < p.size(); ++k) {
                if (nctrace::is_zero(p[k])) continue;
                if (i + k >= out.size()) {
                    dropped = true;
                    continue;
                }
                out[i + k] += coeffs_[i].scaled(p[k]);
            }
        }
        return BFamily(center_, std::move(out), exact_ && !dropped);
    }

    /// Noncommutative product; truncated to the smaller order.
    friend BFamily operator*(BFamily const& x, BFamily const& y)
    {
        x.check_center(y);
        int const K = std::min(x.order(), y.order());
        std::vector<BElement<S>> out(static_cast<std::size_t>(K) + 1);
        bool dropped = false;
        for (int i = 0; i <= x.order(); ++i) {
            if (x.coeffs_[i].is_zero()) continue;
            for (int k = 0; k <= y.order(); ++k) {
                if (y.coeffs_[k].is_zero()) continue;
                if (i + k > K) {
                    dropped = true;
                    continue;
                }
                out[i + k] += x.coeffs_[i] * y.coeffs_[k];
            }
        }
        return BFamily(x.center_, std::move(out), x.exact_ && y.exact_ && !dropped);
    }

    /// Apply an algebra map coefficient-wise (e.g. delta).
    template <typename F> BFamily map(F&& f) const
    {
        BFamily r = *this;
        for (auto& c : r.coeffs_) c = f(c);
        return r;
    }

    /// Re-expand at a new center; only meaningful for families that are exact polynomials.
    BFamily recentered(S const& new_center) const
    {
        if (new_center == center_) return *this;
        if (!exact_) throw TruncationError("cannot recenter a family whose polynomial tail was truncated");
        S const h = new_center - center_;
        int const n = order();
        std::vector<BElement<S>> out(coeffs_.size());
        // p(c + h + t) = sum_m coeffs_m (h + t)^m
        for (int m = 0; m <= n; ++m) {
            if (coeffs_[m].is_zero()) continue;
            for (int i = 0; i <= m; ++i) {
                S const f = scalar_traits<S>::from_rational(binomial(m, i)) * int_power(h, m - i);
                out[i] += coeffs_[m].scaled(f);
            }
        }
        return BFamily(new_center, std::move(out), true);
    }

    friend bool operator==(BFamily const& x, BFamily const& y)
    {
        if (!(x.center_ == y.center_)) return false;
        int const n = std::max(x.order(), y.order());
        for (int m = 0; m <= n; ++m) {
            BElement<S> const a = m <= x.order() ? x.coeffs_[m] : BElement<S>{};
            BElement<S> const b = m <= y.order() ? y.coeffs_[m] : BElement<S>{};
            if (!(a == b)) return false;
        }
        return true;
    }

    std::string str() const
    {
        std::string s;
        for (int m = 0; m <= order(); ++m) {
            if (coeffs_[m].is_zero()) continue;
            if (!s.empty()) s += " + ";
            s += "(" + coeffs_[m].str() + ")";
            if (m > 0) s += "*z^" + std::to_string(m);
        }
        return s.empty() ? "0" : s;
    }

private:
    void check_center(BFamily const& y) const
    {
        if (!(center_ == y.center_)) throw CenterMismatch("family centers differ");
    }
    bool dropped_beyond(int K) const
    {
        for (int m = K + 1; m <= order(); ++m)
            if (!coeffs_[m].is_zero()) return true;
        return false;
    }

    S center_{};
    std::vector<BElement<S>> coeffs_;
    bool exact_ = true;
};

/// n-th z-derivative of a family: coefficient m picks up m!/(m-n)!, order drops by n.
template <Scalar S> BFamily<S> family_derivative(BFamily<S> const& b, int n)
{
    if (n < 0) throw std::invalid_argument("family_derivative: negative order");
    if (n > b.order()) throw TruncationError("family_derivative: order exceeds family truncation");
    if (n == 0) return b;
    std::vector<BElement<S>> out;
    out.reserve(static_cast<std::size_t>(b.order() - n) + 1);
    for (int m = n; m <= b.order(); ++m)
        out.push_back(b[m].scaled(scalar_traits<S>::from_rational(factorial(m) / factorial(m - n))));
    return BFamily<S>(b.center(), std::move(out), b.exact());
}

} // namespace nctrace
