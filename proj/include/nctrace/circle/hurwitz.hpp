#pragma once

#include <nctrace/jet.hpp>

#include <boost/math/special_functions/bernoulli.hpp>

#include <cmath>
#include <complex>
#include <vector>

namespace nctrace::circle {

using F = FloatComplex;

/// Taylor jet of  x -> base^{-x}  at x0, order K.
inline Jet<F> inverse_power_jet(double base, F x0, int K)
{
    double const L = std::log(base);
    std::vector<F> c(static_cast<std::size_t>(K) + 1);
    F term = std::exp(-x0 * L);
    for (int n = 0; n <= K; ++n) {
        c[n] = term;
        term *= -L / static_cast<double>(n + 1);
    }
    return Jet<F>(x0, std::move(c));
}

struct HurwitzGerm
{
    LaurentJet<F> germ;
    double tail_estimate = 0.0; ///< size of the last Euler-Maclaurin correction used
};

/// Laurent germ at x0 of the Hurwitz zeta function  zeta(x, a) = sum_{m >= a} m^{-x}
/// by Euler-Maclaurin summation from `start` = max(a, min_start):
///
///     sum_{a <= m < B} m^{-x} + B^{1-x}/(x-1) + B^{-x}/2 + sum_p B_{2p}/(2p)! (x)_{2p-1} B^{1-x-2p}.
///
/// The only pole is the simple pole at x = 1 with residue 1.
inline HurwitzGerm hurwitz_germ(F x0, int a, int K, int em_depth, int min_start = 32)
{
    int const B = std::max(a, min_start);
    double const Bd = static_cast<double>(B);
    LaurentJet<F> sum = LaurentJet<F>::zero(K, x0);
    for (int m = a; m < B; ++m) sum = sum + LaurentJet<F>(inverse_power_jet(static_cast<double>(m), x0, K));

    // B^{1-x}/(x-1)
    Jet<F> const b1(x0, inverse_power_jet(Bd, x0 - 1.0, K + 1).coefficients()); // B^{1-x}
    if (std::abs(x0 - 1.0) < 1e-12) {
        LaurentJet<F> const pole(x0, 1, b1.coefficients());
        sum = sum + pole;
    } else {
        std::vector<F> inv(static_cast<std::size_t>(K) + 1);
        F const d = x0 - 1.0;
        F p = 1.0 / d;
        for (int n = 0; n <= K; ++n) {
            inv[n] = p;
            p *= -1.0 / d;
        }
        sum = sum + LaurentJet<F>(b1.truncated(K) * Jet<F>(x0, inv));
    }
    sum = sum + LaurentJet<F>(inverse_power_jet(Bd, x0, K).scaled(F(0.5)));

    double estimate = 0.0;
    Jet<F> const bx = inverse_power_jet(Bd, x0, K);
    for (int p = 1; p <= em_depth; ++p) {
        double const coef = boost::math::bernoulli_b2n<double>(p) / std::tgamma(2.0 * p + 1.0) *
                            std::pow(Bd, 1.0 - 2.0 * p);
        auto rising = taylor_shift(rising_factorial_polynomial<F>(2 * p - 1), x0);
        rising.resize(static_cast<std::size_t>(K) + 1, F{});
        Jet<F> const term = (Jet<F>(x0, rising) * bx).scaled(F(coef));
        sum = sum + LaurentJet<F>(term);
        if (p == em_depth) estimate = std::abs(term[0]);
    }
    return {sum, estimate};
}

} // namespace nctrace::circle
