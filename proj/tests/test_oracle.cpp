#include <nctrace/circle/oracle.hpp>

#include <catch_amalgamated.hpp>

using namespace nctrace;
using namespace nctrace::circle;

namespace {

Generator gen(std::string base, int n = 0, GeneratorKind kind = GeneratorKind::plain) { return {std::move(base), kind, n}; }

CircleModel const& model()
{
    static CircleModel const m;
    return m;
}

double rel(F a, F b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

} // namespace

TEST_CASE("oracle reproduces a convergent direct sum", "[oracle]")
{
    double tail = 0.0;
    for (int n = 100000; n >= 1; --n) tail += 2.0 / ((1.0 + double(n) * n) * (1.0 + double(n) * n));
    double const direct = 1.0 + tail;
    ContinuationOracle const o(model(), Word{});
    CHECK(std::abs(o.value(F(4.0)) - direct) < 1e-14);
}

TEST_CASE("oracle diagonal of a net-shift word is zero", "[oracle]")
{
    Word const w{{gen("u"), gen("u", 1)}};
    for (long long m : {-7LL, 0LL, 3LL}) CHECK(ContinuationOracle::diagonal(model(), w, m) == ContinuationOracle::Cplx(0));
}

TEST_CASE("oracle diagonal agrees with the banded realization", "[oracle]")
{
    Word const w{{gen("u", 1), gen("c", 2, GeneratorKind::bracket), gen("v")}};
    auto const M = model().realize(w);
    for (int m : {-40, -1, 0, 5, 60})
        CHECK(std::abs(ContinuationOracle::to_f(ContinuationOracle::diagonal(model(), w, m)) - M.entry(m, m)) < 1e-14);
}

TEST_CASE("word_trace agrees with the oracle for a word with deltas", "[oracle]")
{
    Word const w{{gen("u", 1), gen("v", 1), gen("c"), gen("c", 0, GeneratorKind::bracket)}};
    ContinuationOracle const o(model(), w);
    for (F z : {F(3.0), F(2.2, 0.7), F(0.4), F(-0.6, -0.3)}) {
        auto const g = model().word_trace(w, z, 0, 0);
        CHECK(rel(g.coeff(0), o.value(z)) < 1e-10);
    }
}

TEST_CASE("oracle and word_trace see the same pole at an even integer", "[oracle]")
{
    Word const w{{gen("u"), gen("v", 1)}};
    ContinuationOracle const o(model(), w);
    auto const L = o.laurent(F(-2.0), 1);
    auto const g = model().word_trace(w, F(-2.0), 0, 1);
    CHECK(std::abs(L[0] - residue(g, 0)) < 1e-9);
    CHECK(std::abs(L[1] - residue(g, -1)) < 1e-9);
}

TEST_CASE("dense eigen-oracle without perturbation reproduces the plain trace", "[oracle]")
{
    CircleModel const m;
    auto const I = BandedOp::identity(m.params().mode_cutoff);
    BandedOp const zero(m.params().mode_cutoff);
    auto const t = perturbed_trace(I, zero, F(6.0));
    CHECK(rel(t, m.word_trace(Word{}, F(6.0), 0, 0).coeff(0)) < 1e-12);
}
