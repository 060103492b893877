#include <nctrace/rational_model.hpp>

#include <catch_amalgamated.hpp>

#include <random>

using namespace nctrace;
using E = ExactComplex;
using Sym = Symbol<E>;
using B = BElement<E>;

namespace {

E q(long long p, long long d = 1) { return from_ratio<E>(p, d); }

B gen(std::string base, int n = 0) { return B(word_of(std::move(base), n)); }

B random_coefficient(std::mt19937& rng)
{
    static char const* const names[] = {"a", "b", "p"};
    std::uniform_int_distribution<int> pick(0, 2), len(0, 2), num(-3, 3), dpow(0, 1);
    B x;
    int const terms = 1 + pick(rng) % 2;
    for (int t = 0; t < terms; ++t) {
        Word w;
        int const l = len(rng);
        for (int i = 0; i < l; ++i) w.factors.push_back(Generator{names[pick(rng)], GeneratorKind::plain, dpow(rng)});
        x.add_term(w, q(num(rng) == 0 ? 1 : num(rng), 1 + pick(rng)));
    }
    return x;
}

/// b_0 + b_1 z + b_2 z^2 at order a - q z, plus a log term and a j = 1 term.
Sym random_family(std::mt19937& rng, E a, E qq)
{
    AffineOrder<E> const ord{a, qq};
    std::vector<B> coeffs{random_coefficient(rng), random_coefficient(rng), random_coefficient(rng)};
    Sym A = Sym::term(BFamily<E>(E{}, coeffs), ord);
    A.add(TermKey{1, 0}, BFamily<E>(E{}, {random_coefficient(rng), random_coefficient(rng)}));
    A.add(TermKey{0, 1}, BFamily<E>(E{}, {random_coefficient(rng)}));
    return A;
}

} // namespace

TEST_CASE("synthetic model germs respect the pole bound", "[zetatrace]")
{
    RationalTraceModel const m(1);
    auto const g = m.word_trace(Word{}, q(0), 1, 3);
    CHECK(g.pole_order() <= 2);
    auto const r = m.word_trace(Word{}, q(1, 2), 1, 3);
    CHECK(r.pole_order() == 0);
}

TEST_CASE("tau vanishes above the multiplicity bound", "[zetatrace]")
{
    RationalTraceModel const m(1);
    auto const A = Sym::term(gen("a"), AffineOrder<E>{q(1), q(0)});
    CHECK(tau(2, A, m) == E{});
    CHECK(tau(5, A, m) == E{});
}

TEST_CASE("tr_mer of the unit family at a regular point", "[zetatrace]")
{
    RationalTraceModel const m(1);
    auto const A = Sym::power(AffineOrder<E>{q(0), q(1)});
    CHECK(tr_mer(A, q(1, 3), m).germ.pole_order() == 0);
}

TEST_CASE("tr_mer audit partials sum to the germ", "[zetatrace][property]")
{
    RationalTraceModel const m(1);
    std::mt19937 rng(5);
    auto const A = random_family(rng, q(1, 2), q(1));
    auto const t = tr_mer(A, q(0), m, 3, true);
    REQUIRE(!t.contributing_terms.empty());
    auto sum = LaurentJet<E>::zero(3, q(0));
    for (auto const& [label, part] : t.contributing_terms) sum = sum + part;
    for (int i = -2; i <= 3; ++i) CHECK(sum.coeff(i) == t.germ.coeff(i));
}

TEST_CASE("tr_mer rejects a truncation whose remainder is not trace class", "[zetatrace]")
{
    RationalTraceModel const m(1);
    Sym A(AffineOrder<E>{q(2), q(1)}, 2);
    A.add(TermKey{0, 0}, BFamily<E>(gen("a")));
    CHECK_THROWS_AS(tr_mer(A, q(0), m), TruncationError);
    CHECK_NOTHROW(tr_mer(A, q(3), m));
}

TEST_CASE("tr_mer reports germs beyond the multiplicity bound", "[zetatrace]")
{
    class Overreaching final : public TraceModel<E>
    {
    public:
        LaurentJet<E> word_trace(Word const&, E const& c, int, int K) const override
        {
            std::vector<E> v(static_cast<std::size_t>(K) + 3, E{});
            v[0] = q(1);
            return LaurentJet<E>(c, 2, v);
        }
        bool in_dimension_spectrum(E const&) const override { return true; }
        std::vector<E> dimension_spectrum_window(double, double) const override { return {}; }
        double summability_degree() const override { return 1.0; }
        int pole_multiplicity_bound() const override { return 0; }
        std::string name() const override { return "overreaching"; }
    } const bad;
    CHECK_THROWS_AS(tau(0, Sym::unit(), bad), ModelContractViolation);
}

TEST_CASE("residue theorem on a generated battery, exact", "[zetatrace][property]")
{
    RationalTraceModel const m(1);
    std::mt19937 rng(2718);
    int families = 0;
    for (E const& a : {q(-1, 2), q(0), q(1), q(3, 2)})
        for (E const& qq : {q(1), q(2)}) {
            auto const A = random_family(rng, a, qq);
            ++families;
            for (int j = -1; j <= 1; ++j) {
                auto const r = residue_theorem_check(A, j, m, 0.0);
                INFO(to_string(a) << " q=" << to_string(qq) << " j=" << j << " lhs=" << r.lhs_exact
                                  << " rhs=" << r.rhs_exact);
                CHECK(r.exact);
                CHECK(r.pass);
            }
        }
    CHECK(families == 8);
}

TEST_CASE("residue theorem collapses for a constant family", "[zetatrace]")
{
    RationalTraceModel const m(1);
    auto const A0 = Sym::term(gen("a") * gen("b", 1), AffineOrder<E>{q(1, 2), q(0)});
    auto const A = weighted(A0);
    CHECK(compensated_derivative_at_zero(A, 1).is_zero());
    for (int j = -1; j <= 1; ++j) {
        auto const r = residue_theorem_check(A, j, m, 0.0);
        CHECK(r.pass);
        CHECK(r.lhs_exact == to_string(tau(j, A0, m)));
    }
}

TEST_CASE("weight discrepancy, exact on the synthetic model", "[zetatrace]")
{
    RationalTraceModel const m(1);
    PerturbationSettings ps;
    ps.N = 4;
    ps.bounds = {3, 2};
    ps.M_ch = 3;
    auto const P = Sym::term(gen("p") + B::scalar(q(1, 3)));
    for (auto const& A : {Sym::term(gen("a"), AffineOrder<E>{q(1), q(0)}),
                          Sym::term(gen("b", 1) * gen("a"), AffineOrder<E>{q(1, 2), q(0)})}) {
        for (int j = -1; j <= 1; ++j) {
            auto const r = weight_discrepancy_check(j, A, P, m, ps, 0.0);
            INFO("j=" << j << " lhs=" << r.lhs_exact << " rhs=" << r.rhs_exact);
            CHECK(r.pass);
        }
        CHECK(tau_perturbed(1, A, P, m, ps) == tau(1, A, m));
        CHECK(tau_perturbed(0, A, Sym::zero(), m, ps) == tau(0, A, m));
    }
}

TEST_CASE("weight discrepancy log form, exact on a simple-pole model", "[zetatrace]")
{
    RationalTraceModel const m(0);
    PerturbationSettings ps;
    ps.N = 4;
    ps.bounds = {3, 2};
    ps.M_ch = 3;
    auto const P = Sym::term(gen("p"));
    auto const A = Sym::term(gen("a"), AffineOrder<E>{q(1), q(0)});
    auto const general = weight_discrepancy_check(-1, A, P, m, ps, 0.0);
    auto const logform = weight_discrepancy_log_check(A, P, m, ps, 0.0);
    CHECK(general.pass);
    CHECK(logform.pass);
    CHECK(general.rhs_exact == logform.rhs_exact);
}

TEST_CASE("canonical trace gate", "[zetatrace]")
{
    RationalTraceModel const m(0);
    CHECK_THROWS_AS(canonical_trace(Sym::term(gen("a"), AffineOrder<E>{q(1), q(0)}), m), OrderInDimensionSpectrum);
    CHECK_THROWS_AS(canonical_trace(Sym::term(gen("a"), AffineOrder<E>{q(2), q(0)}), m), OrderInDimensionSpectrum);
    CHECK_NOTHROW(canonical_trace(Sym::term(gen("a"), AffineOrder<E>{q(-3), q(0)}), m));
    CHECK_NOTHROW(canonical_trace(Sym::term(gen("a"), AffineOrder<E>{q(1, 2), q(0)}), m));
    auto const skip = canonical_trace_commutator_check(Sym::term(gen("a"), AffineOrder<E>{q(1, 2), q(0)}),
                                                       Sym::term(gen("b"), AffineOrder<E>{q(1, 2), q(0)}), m, 4, 0.0);
    CHECK(skip.skipped);
    CHECK(skip.pass);
}

TEST_CASE("check report pass rule", "[zetatrace]")
{
    auto const r = make_report<FloatComplex>("x", "y", FloatComplex(1.0), FloatComplex(1.0 + 1e-7), 1e-6);
    CHECK(r.pass);
    auto const s = make_report<FloatComplex>("x", "y", FloatComplex(1e-10), FloatComplex(0.0), 1e-9);
    CHECK(s.pass);
    auto const t = make_report<FloatComplex>("x", "y", FloatComplex(1.0), FloatComplex(2.0), 1e-6);
    CHECK(!t.pass);
    auto const u = make_report<E>("x", "y", q(1, 3), q(1, 3), 0.0);
    CHECK(u.pass);
    CHECK(u.lhs_exact == "1/3");
}
