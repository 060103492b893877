// One pass/fail line per acceptance criterion.
// Usage: acceptance <path to ncresidue> <config file> <scratch directory>

#include <nctrace/battery.hpp>
#include <nctrace/circle/oracle.hpp>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace nctrace;
using E = ExactComplex;
using circle::F;

namespace {

struct Verdict
{
    bool pass = true;
    std::string detail;

    void require(bool ok, std::string const& what)
    {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

int failures = 0;

void criterion(int n, std::string const& title, double limit_seconds, std::function<Verdict()> const& body)
{
    auto const start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (std::exception const& e) {
        v.pass = false;
        v.detail = std::string("exception: ") + e.what();
    }
    double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > limit_seconds) v.require(false, "time limit " + std::to_string(limit_seconds) + " s exceeded");
    if (!v.pass) ++failures;
    std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", v.pass ? "PASS" : "FAIL", n, title.c_str(), secs,
                v.detail.empty() ? "" : " -- ", v.detail.c_str());
    std::fflush(stdout);
}

E q(long long p, long long d = 1) { return from_ratio<E>(p, d); }

BElement<E> random_word(std::mt19937_64& rng, int max_len)
{
    static char const* const names[] = {"a", "b", "c"};
    Word w;
    int const len = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_len));
    for (int i = 0; i < len; ++i)
        w.factors.push_back(Generator{names[rng() % 3], rng() % 2 ? GeneratorKind::bracket : GeneratorKind::plain,
                                      static_cast<int>(rng() % 2)});
    return BElement<E>(w);
}

Verdict exact_symbolic()
{
    Verdict v;
    std::mt19937_64 rng(7);
    // Conjugating by |D|^alpha and back returns the operator up to the truncation.
    for (int trial = 0; trial < 24; ++trial) {
        int const N = 1 + static_cast<int>(rng() % 5);
        AffineOrder<E> const alpha{q(static_cast<long long>(rng() % 11) - 5, 3), q(static_cast<long long>(rng() % 3))};
        AffineOrder<E> const back{E{} - alpha.a, E{} - alpha.q};
        Symbol<E> A(AffineOrder<E>{q(1, 2), E{}}, N);
        for (int j = 0; j < 3; ++j) A.add(TermKey{j, 0}, BFamily<E>(random_word(rng, 3).scaled(q(j + 1, 2))));
        auto const there = commute_power(alpha, A, N);
        v.require(same_expansion(normalize(sym_mul(Symbol<E>::power(back), there, N)), A, N), "power round trip");
    }
    // delta is a derivation.
    for (int trial = 0; trial < 24; ++trial) {
        auto const x = random_word(rng, 3) + random_word(rng, 2).scaled(q(-2, 3));
        auto const y = random_word(rng, 3);
        v.require(delta(x * y) == delta(x) * y + x * delta(y), "delta Leibniz");
    }
    // Pascal recurrence of the binomial jets, seen through a unit shift.
    for (int k = 1; k <= 8; ++k) {
        auto const lhs = binomial_polynomial<E>(k);
        auto const a = taylor_shift(binomial_polynomial<E>(k), q(-1));
        auto const b = taylor_shift(binomial_polynomial<E>(k - 1), q(-1));
        std::vector<E> rhs(lhs.size());
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = a[i] + (i < b.size() ? b[i] : E{});
        v.require(lhs == rhs, "binom_jet recurrence");
    }
    // Gamma(z+m+1)/Gamma(z) = (z+m) Gamma(z+m)/Gamma(z).
    for (int m = 0; m <= 8; ++m) {
        std::vector<E> lin(10, E{});
        lin[0] = q(m);
        lin[1] = q(1);
        v.require(gamma_ratio_jet<E>(m, 9) * Jet<E>(E{}, lin) == gamma_ratio_jet<E>(m + 1, 9),
                  "gamma_ratio_jet factorization");
    }
    // log|D| b = b log|D| + sum_k c'_{0,k} delta^k(b) |D|^{-k}.
    auto const b = BElement<E>(word_of("b"));
    auto const r = commute_log(Symbol<E>::term(b), 4);
    E const expected[] = {q(1), q(-1, 2), q(1, 3)};
    for (int k = 1; k <= 3; ++k) {
        auto const* f = r.find(TermKey{k, 0});
        v.require(f && *f == BFamily<E>(delta_power(b, k).scaled(expected[k - 1])), "commute_log coefficient");
        v.require(binom_jet<E>(k, 2)[1] == expected[k - 1], "commute_log equals the binomial jet derivative");
    }
    // (|D|+P)^{-z} at z = 0 is the unit.
    auto const P = Symbol<E>::term(BElement<E>(word_of("p")) + BElement<E>(word_of("a", 1)).scaled(q(1, 3)));
    auto const at0 = evaluate_at_zero(perturbed_power(P, 5, {4, 3}));
    v.require(at0.terms().size() == 1 && *at0.find(TermKey{0, 0}) == BFamily<E>(BElement<E>::unit()),
              "perturbed_power at z = 0");
    return v;
}

Verdict circle_constants()
{
    Verdict v;
    circle::CircleModel const m;
    circle::ContinuationOracle const oracle(m, Word{});
    struct C
    {
        double center;
        int index;
        double expected;
        char const* name;
    };
    for (auto const& c : {C{1.0, 0, 2.0, "Res at 1"}, C{-1.0, 0, 1.0, "Res at -1"}, C{0.0, -1, 0.0, "value at 0"}}) {
        F const closed = residue(m.word_trace(Word{}, F(c.center), 0, 2), c.index);
        F const brute = oracle.laurent(F(c.center), 1)[static_cast<std::size_t>(-c.index)];
        v.require(std::abs(closed - c.expected) <= 1e-8, std::string(c.name) + " by word_trace");
        v.require(std::abs(brute - c.expected) <= 1e-8, std::string(c.name) + " by oracle");
        v.require(std::abs(closed - brute) <= 1e-8, std::string(c.name) + " agreement");
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: %.12f vs %.12f", c.name, closed.real(), brute.real());
        if (!v.detail.empty()) v.detail += "; ";
        v.detail += buf;
    }
    return v;
}

/// Runs suites through the battery runner; every check must pass and none may be skipped.
Verdict suites(battery::Settings const& s, std::vector<std::string> const& names,
               std::function<bool(battery::Outcome const&)> const& filter = {})
{
    Verdict v;
    battery::Context const ctx(s);
    int count = 0;
    for (auto const& name : names) {
        auto const outcomes = battery::run_tasks(battery::make_tasks(ctx, name), 1);
        for (auto const& o : outcomes) {
            if (filter && !filter(o)) continue;
            ++count;
            v.require(o.report.pass && !o.report.skipped, o.suite + ": " + o.label + " " + o.report.notes);
        }
    }
    if (v.pass) v.detail = std::to_string(count) + " checks";
    return v;
}

std::string read_file(std::string const& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism(std::string const& cli, std::string const& config, std::string const& scratch)
{
    Verdict v;
    std::string const a = scratch + "/determinism_a.json", b = scratch + "/determinism_b.json";
    std::string const base = "\"" + cli + "\" --report ";
    int const ra = std::system((base + "\"" + a + "\" --jobs 1 all \"" + config + "\" > /dev/null").c_str());
    int const rb = std::system((base + "\"" + b + "\" --jobs 3 all \"" + config + "\" > /dev/null").c_str());
    v.require(ra == 0 && rb == 0, "runs did not exit 0");
    auto ja = nlohmann::json::parse(read_file(a));
    auto jb = nlohmann::json::parse(read_file(b));
    v.require(ja.contains("timestamp") && jb.contains("timestamp"), "timestamp field missing");
    ja.erase("timestamp");
    jb.erase("timestamp");
    v.require(ja.dump(2) == jb.dump(2), "reports differ outside the timestamp field");
    if (v.pass) v.detail = std::to_string(ja["summary"]["total"].get<int>()) + " checks, identical reports";
    return v;
}

} // namespace

int main(int argc, char** argv)
{
    if (argc < 4) {
        std::cerr << "usage: acceptance <ncresidue> <config> <scratch dir>\n";
        return 2;
    }
    std::string const cli = argv[1], config = argv[2], scratch = argv[3];

    battery::Settings floating;
    floating.circle.mode_cutoff = 256;
    floating.perturbation.limits = floating.commutator_limits = AlgebraLimits{12, 80};
    battery::Settings exact = floating;
    exact.backend = battery::Backend::exact;

    criterion(1, "exact symbolic suite", 10, exact_symbolic);
    criterion(2, "circle model constants by word_trace and by the continuation oracle", 60, circle_constants);
    criterion(3, "residue theorem battery, circle and synthetic exact model", 300, [&] {
        auto v = suites(floating, {"residue-theorem"});
        auto w = suites(exact, {"residue-theorem"});
        v.require(w.pass, "exact: " + w.detail);
        v.detail += ", exact " + w.detail;
        return v;
    });
    criterion(4, "weight and commutator discrepancy suites", 300,
              [&] { return suites(floating, {"weight-discrepancy", "commutator-discrepancy"}); });
    criterion(5, "canonical trace suite", 120, [&] { return suites(floating, {"canonical-trace"}); });
    criterion(6, "model contract suite", 120, [&] {
        return suites(floating, {"model"}, [](battery::Outcome const& o) {
            return o.label.rfind("honesty", 0) == 0 || o.label.rfind("pole order", 0) == 0 ||
                   o.label.rfind("delta consistency", 0) == 0;
        });
    });
    criterion(7, "determinism of two full runs", 600, [&] { return determinism(cli, config, scratch); });
    return failures == 0 ? 0 : 1;
}
