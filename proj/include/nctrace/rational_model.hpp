#pragma once

#include <nctrace/zetatrace.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace nctrace {

/// Synthetic exact model: Tr(w |D|^{-s}) is a rational function with poles of
/// order <= k+1 at the integers 1, 0, ..., -4 and coefficients derived from
/// the word, plus an affine regular part.
class RationalTraceModel final : public TraceModel<ExactComplex>
{
    using E = ExactComplex;
    static E q(long long p, long long d = 1) { return from_ratio<E>(p, d); }

public:
    explicit RationalTraceModel(int k) : k_(k) {}

    LaurentJet<ExactComplex> word_trace(Word const& w, ExactComplex const& center, int pole_bound, int K) const override
    {
        if (pole_bound < k_) throw std::invalid_argument("pole bound below the model's multiplicity");
        long long const h = fingerprint(w);
        std::vector<ExactComplex> c(static_cast<std::size_t>(K) + k_ + 2, E{});
        // Regular part gamma + eta (s - center) + ... about the center.
        E const gamma = q(h % 7 - 3, 1 + h % 5), eta = q(h % 3 - 1, 2);
        auto at = [&](int i) -> E& { return c[static_cast<std::size_t>(i + k_ + 1)]; };
        at(0) += gamma + eta * center;
        if (K >= 1) at(1) += eta;
        for (int p = 1; p >= -4; --p) {
            for (int m = 1; m <= k_ + 1; ++m) {
                E const a = q((h * (m + 3) + 5 * p) % 11 - 5, m + 1 + (h + p) % 3);
                if (is_zero(a)) continue;
                E const d = center - q(p);
                if (is_zero(d)) {
                    at(-m) += a;
                    continue;
                }
                // a (d + t)^{-m} = a sum_n C(-m, n) d^{-m-n} t^n
                E dpow = E(1) / int_power(d, m);
                E const dinv = E(1) / d;
                for (int n = 0; n <= K; ++n) {
                    E const binom = from_rational<E>(generalized_binomial(-m, n));
                    at(n) += a * binom * dpow;
                    dpow = dpow * dinv;
                }
            }
        }
                return LaurentJet<ExactComplex>(center, k_ + 1, std::move(c));
    }

    bool in_dimension_spectrum(ExactComplex const& x) const override
    {
        return x.im == 0 && boost::multiprecision::denominator(x.re) == 1 && x.re <= 1;
    }
    std::vector<ExactComplex> dimension_spectrum_window(double lo, double hi) const override
    {
        std::vector<ExactComplex> out;
        for (long long n = static_cast<long long>(std::ceil(lo)); n <= std::min(hi, 1.0); ++n) out.push_back(q(n));
        return out;
    }
    double summability_degree() const override { return 1.0; }
    int pole_multiplicity_bound() const override { return k_; }
    std::string name() const override { return "rational"; }

private:
    static long long fingerprint(Word const& w)
    {
        long long h = 3;
        for (char ch : w.str()) h = (h * 31 + ch) % 1000003;
        return h;
    }
    static Rational generalized_binomial(int top, int n)
    {
        Rational r{1};
        for (int i = 0; i < n; ++i) r = r * Rational(top - i) / Rational(i + 1);
        return r;
    }
    template <typename T> static T from_rational(Rational const& r) { return scalar_traits<T>::from_rational(r); }

    int k_;
};

} // namespace nctrace
