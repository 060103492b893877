#pragma once

#include <nctrace/scalar.hpp>

#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace nctrace {

/// Lie-algebra operations needed to evaluate Campbell-Hausdorff components.
template <typename T> struct LieOps
{
    std::function<T(T const&, T const&)> bracket;
    std::function<T(T const&, T const&)> add;
    std::function<T(T const&, Rational const&)> scale;
    std::function<bool(T const&)> is_zero;
};

/// Letter sequence over {X = 0, Y = 1} mapped to its Dynkin coefficient.
using DynkinTable = std::map<std::vector<int>, Rational>;

/// Coefficients of the degree-d part of log(e^X e^Y) in Dynkin's form
///
///     sum_n (-1)^{n-1}/n sum_{r_i+s_i>0} [X^{r_1} Y^{s_1} ... X^{r_n} Y^{s_n}] / (d prod r_i! s_i!)
///
/// grouped by the letter sequence of the right-nested bracket.
inline DynkinTable dynkin_coefficients(int d)
{
    DynkinTable table;
    std::vector<int> letters;
    std::function<void(int, int, Rational)> blocks = [&](int n, int remaining, Rational weight) {
        if (remaining == 0) {
            Rational c = weight / (Rational(n) * d);
            if (n % 2 == 0) c = -c;
            table[letters] += c;
            return;
        }
        for (int r = 0; r <= remaining; ++r) {
            for (int s = 0; r + s <= remaining; ++s) {
                if (r + s == 0) continue;
                letters.insert(letters.end(), static_cast<std::size_t>(r), 0);
                letters.insert(letters.end(), static_cast<std::size_t>(s), 1);
                blocks(n + 1, remaining - r - s, weight / (factorial(r) * factorial(s)));
                letters.resize(letters.size() - static_cast<std::size_t>(r + s));
            }
        }
    };
    blocks(0, d, Rational{1});
    for (auto it = table.begin(); it != table.end();) {
        auto const& w = it->first;
        bool const vanishes = it->second == 0 || (w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2]);
        it = vanishes ? table.erase(it) : std::next(it);
    }
    return table;
}

/// Degree-d homogeneous component of log(e^X e^Y); empty when it vanishes.
template <typename T> std::optional<T> bch_homogeneous(T const& X, T const& Y, int d, LieOps<T> const& ops)
{
    if (d == 1) return ops.add(X, Y);
    std::optional<T> out;
    for (auto const& [w, c] : dynkin_coefficients(d)) {
        T acc = w.back() == 0 ? X : Y;
        for (auto i = static_cast<std::ptrdiff_t>(w.size()) - 2; i >= 0; --i) {
            acc = ops.bracket(w[static_cast<std::size_t>(i)] == 0 ? X : Y, acc);
            if (ops.is_zero(acc)) break;
        }
        if (ops.is_zero(acc)) continue;
        T term = ops.scale(acc, c);
        out = out ? ops.add(*out, term) : term;
    }
    return out;
}

} // namespace nctrace
