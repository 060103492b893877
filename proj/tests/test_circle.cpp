#include <nctrace/circle/model.hpp>

#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/zeta.hpp>

using namespace nctrace;
using namespace nctrace::circle;

namespace {

Word w(std::string base, int n = 0, GeneratorKind kind = GeneratorKind::plain) { return word_of(std::move(base), n, kind); }

CircleModel const& model()
{
    static CircleModel const m;
    return m;
}

} // namespace

TEST_CASE("circle unit word: residues at 1 and -1, value at 0", "[circle]")
{
    auto const g1 = model().word_trace(Word{}, F(1.0), 0, 3);
    CHECK(g1.pole_order() == 1);
    CHECK(std::abs(residue(g1, 0) - F(2.0)) < 1e-10);
    auto const gm1 = model().word_trace(Word{}, F(-1.0), 0, 3);
    CHECK(gm1.pole_order() == 1);
    CHECK(std::abs(residue(gm1, 0) - F(1.0)) < 1e-10);
    auto const g0 = model().word_trace(Word{}, F(0.0), 0, 3);
    CHECK(g0.pole_order() == 0);
    CHECK(std::abs(residue(g0, -1)) < 1e-10);
}

TEST_CASE("circle unit word in the convergence region matches a direct sum", "[circle]")
{
    // Tr(|D|^{-4}) = 1 + 2 sum_{n >= 1} (1+n^2)^{-2}; tail beyond 10^5 below 1e-15.
    double tail = 0.0;
    for (int n = 100000; n >= 1; --n) tail += 2.0 / ((1.0 + double(n) * n) * (1.0 + double(n) * n));
    double const direct = 1.0 + tail;
    auto const g = model().word_trace(Word{}, F(4.0), 0, 2);
    CHECK(std::abs(g.coeff(0) - direct) < 1e-12);
}

TEST_CASE("circle off-diagonal words have zero trace", "[circle]")
{
    auto const g = model().word_trace(w("u"), F(0.3), 0, 3);
    CHECK(g.pole_order() == 0);
    for (int i = 0; i <= 3; ++i) CHECK(g.coeff(i) == F{});
}

TEST_CASE("circle words with an odd number of deltas have poles at even integers", "[circle]")
{
    Word const uv1{{Generator{"u", GeneratorKind::plain, 0}, Generator{"v", GeneratorKind::plain, 1}}};
    auto const g2 = model().word_trace(uv1, F(-2.0), 0, 2);
    CHECK(g2.pole_order() == 1);
    CHECK(std::abs(residue(g2, 0)) > 1e-3);
    auto const g0 = model().word_trace(uv1, F(0.0), 0, 2);
    CHECK(g0.pole_order() == 0);
}

TEST_CASE("circle diagonal asymptotics of the unit word", "[circle]")
{
    auto const a = model().diag_asymptotics(Word{}, 6);
    CHECK(a.plus[0] == F(1.0));
    for (int r = 1; r <= 6; ++r) CHECK(a.plus[r] == F{});
}

TEST_CASE("circle diagonal asymptotics match diagonal entries", "[circle]")
{
    Word const word{{Generator{"u", GeneratorKind::plain, 1}, Generator{"v", GeneratorKind::plain, 2},
                     Generator{"c", GeneratorKind::bracket, 0}, Generator{"c", GeneratorKind::plain, 1}}};
    auto const a = model().diag_asymptotics(word, 30);
    auto const paths = model().diagonal_paths(word);
    for (long long n : {200LL, 400LL}) {
        F plus{}, minus{};
        for (int r = 30; r >= 0; --r) {
            plus = plus / double(n) + a.plus[r];
            minus = minus / double(n) + a.minus[r];
        }
        F const dp = model().diagonal_entry(paths, n), dm = model().diagonal_entry(paths, -n);
        CHECK(std::abs(plus - dp) < 1e-12 * std::max(1.0, std::abs(dp)));
        CHECK(std::abs(minus - dm) < 1e-12 * std::max(1.0, std::abs(dm)));
    }
}

TEST_CASE("circle parity: reflection-invariant words cancel odd coefficients", "[circle][property]")
{
    // c and its brackets are invariant under n -> -n up to the bracket sign.
    for (auto const& word : {Word{{Generator{"c", GeneratorKind::plain, 1}, Generator{"c", GeneratorKind::plain, 1}}},
                             Word{{Generator{"c", GeneratorKind::plain, 2}, Generator{"c", GeneratorKind::plain, 0}}}}) {
        auto const a = model().diag_asymptotics(word, 12);
        for (int r = 1; r <= 12; r += 2) CHECK(std::abs(a.plus[r] + a.minus[r]) < 1e-14);
    }
}

TEST_CASE("circle Hurwitz germ against boost zeta", "[circle]")
{
    for (double x : {2.5, -1.5, 0.5}) {
        auto const h = hurwitz_germ(F(x), 1, 1, 14);
        CHECK(std::abs(h.germ.coeff(0).real() - boost::math::zeta(x)) < 1e-12 * std::max(1.0, std::abs(boost::math::zeta(x))));
    }
    auto const h1 = hurwitz_germ(F(1.0), 1, 1, 14);
    CHECK(std::abs(residue(h1.germ, 0) - F(1.0)) < 1e-14);
    CHECK(std::abs(h1.germ.coeff(0).real() - 0.5772156649015329) < 1e-12);
}

TEST_CASE("circle realize: shift, delta, and the literal commutator", "[circle]")
{
    CircleParams p;
    p.mode_cutoff = 256;
    CircleModel const m(p);
    auto const U = m.realize(w("u"));
    CHECK(U.entry(6, 5) == F(1.0));
    CHECK(U.entry(5, 5) == F{});
    auto const dU = m.realize(w("u", 1));
    CHECK(std::abs(dU.entry(4, 3) - (eigenvalue(4) - eigenvalue(3))) < 1e-14);
    CHECK(m.realize(Word{}).trace() == F(513.0));
}
