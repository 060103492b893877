#pragma once

#include <nctrace/circle/oracle.hpp>
#include <nctrace/rational_model.hpp>
#include <nctrace/zetatrace.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace nctrace::battery {

using circle::F;

enum class Backend { exact, floating };

struct Tolerances
{
    double identity = 1e-6;     ///< relative, discrepancy and residue identities
    double canonical = 1e-8;    ///< absolute, vanishing statements
    double model = 1e-8;        ///< relative, word_trace against the oracle
    double consistency = 1e-10; ///< absolute, realized delta against the matrix commutator
};

struct Settings
{
    Backend backend = Backend::floating;
    std::uint64_t seed = 20240611;
    int families = 16;   ///< residue theorem families
    int operators = 4;   ///< operators per perturbation battery
    int pairs = 6;       ///< commutator pairs
    int log_degree = 1;  ///< largest log power in generated families
    int laurent_depth = -1;
    PerturbationSettings perturbation{};
    int commutator_N = 48;
    AlgebraLimits commutator_limits{6, 80};
    int exact_pole_bound = 1;
    circle::CircleParams circle{};
    int consistency_cutoff = 512;
    Tolerances tol{};
};

inline std::vector<std::string> const& suite_names()
{
    static std::vector<std::string> const names{"residue-theorem", "weight-discrepancy", "commutator-discrepancy",
                                                "canonical-trace", "model"};
    return names;
}

/// One check waiting to run.
struct Task
{
    std::string suite;
    std::string label;
    std::function<CheckReport()> run;
};

struct Outcome
{
    std::string suite;
    std::string label;
    CheckReport report;
    bool contract_violation = false;
    std::string violated_invariant;
    double seconds = 0.0;
};

/// Deterministic stream: seed mixed with the suite name so that suites do not depend on each other.
class Rng
{
public:
    Rng(std::uint64_t seed, std::string const& stream)
    {
        std::uint64_t h = 1469598103934665603ULL;
        for (char c : stream) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
        engine_.seed(seed ^ h);
    }
    int below(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }
    int between(int lo, int hi) { return lo + below(hi - lo + 1); }

private:
    std::mt19937_64 engine_;
};

template <Scalar S> S ratio(long long p, long long q = 1) { return from_ratio<S>(p, q); }

inline std::vector<std::string> alphabet(Backend b)
{
    if (b == Backend::exact) return {"a", "b", "p"};
    return {"u", "v", "c", "s"};
}

template <Scalar S> S random_coefficient(Rng& rng)
{
    int num = rng.between(-3, 3);
    if (num == 0) num = 1;
    return ratio<S>(num, rng.between(1, 3));
}

/// Sum of one or two words of length <= max_len, each letter with delta power <= 1.
template <Scalar S> BElement<S> random_element(Rng& rng, std::vector<std::string> const& letters, int max_len = 2)
{
    BElement<S> x;
    int const terms = rng.between(1, 2);
    for (int t = 0; t < terms; ++t) {
        Word w;
        int const len = rng.between(0, max_len);
        for (int i = 0; i < len; ++i)
            w.factors.push_back(Generator{letters[static_cast<std::size_t>(rng.below(static_cast<int>(letters.size())))],
                                          GeneratorKind::plain, rng.below(2)});
        x.add_term(w, random_coefficient<S>(rng));
    }
    return x;
}

/// b_0 + b_1 z + b_2 z^2 at order a - qz, a j = 1 term of degree 1 and optionally a log term.
template <Scalar S>
Symbol<S> random_family(Rng& rng, std::vector<std::string> const& letters, S const& a, S const& q, int log_degree)
{
    AffineOrder<S> const ord{a, q};
    Symbol<S> A = Symbol<S>::term(
        BFamily<S>(S{}, {random_element<S>(rng, letters), random_element<S>(rng, letters), random_element<S>(rng, letters)}),
        ord);
    A.add(TermKey{1, 0}, BFamily<S>(S{}, {random_element<S>(rng, letters), random_element<S>(rng, letters)}));
    for (int l = 1; l <= log_degree; ++l) A.add(TermKey{0, l}, BFamily<S>(S{}, {random_element<S>(rng, letters)}));
    return A;
}

/// b_0 |D|^a + b_1 |D|^{a-1} with words of length <= max_len.
template <Scalar S>
Symbol<S> random_operator(Rng& rng, std::vector<std::string> const& letters, S const& a, int max_len = 2)
{
    Symbol<S> A = Symbol<S>::term(random_element<S>(rng, letters, max_len), AffineOrder<S>{a, S{}});
    A.add(TermKey{1, 0}, BFamily<S>(random_element<S>(rng, letters, max_len)));
    return A;
}

template <Scalar S> std::string order_label(S const& a)
{
    if constexpr (scalar_traits<S>::exact) {
        return to_string(a);
    } else {
        auto const c = to_complex(a);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", c.real());
        return buf;
    }
}

/// Weight perturbations of order 0 used by the float batteries.
inline std::vector<std::pair<std::string, Symbol<F>>> circle_perturbations()
{
    using B = BElement<F>;
    return {{"P=1/2", Symbol<F>::term(B::scalar(F(0.5)))},
            {"P=c/4", Symbol<F>::term(B(word_of("c")).scaled(F(0.25)))},
            {"P=c/4+s/8", Symbol<F>::term(B(word_of("c")).scaled(F(0.25)) + B(word_of("s")).scaled(F(0.125)))}};
}

inline std::vector<std::pair<std::string, Symbol<ExactComplex>>> exact_perturbations()
{
    using E = ExactComplex;
    using B = BElement<E>;
    return {{"P=1", Symbol<E>::term(B::unit())},
            {"P=p/2", Symbol<E>::term(B(word_of("p")).scaled(ratio<E>(1, 2)))},
            {"P=p+d(a)/3", Symbol<E>::term(B(word_of("p")) + B(word_of("a", 1)).scaled(ratio<E>(1, 3)))}};
}

/// Owns the models; tasks refer to it and must not outlive it.
class Context
{
public:
    explicit Context(Settings s)
        : settings_(std::move(s)), circle_(settings_.circle), rational_(settings_.exact_pole_bound)
    {
    }
    Settings const& settings() const { return settings_; }
    circle::CircleModel const& circle_model() const { return circle_; }
    RationalTraceModel const& rational_model() const { return rational_; }

private:
    Settings settings_;
    circle::CircleModel circle_;
    RationalTraceModel rational_;
};

/// Net-shift-0 words of length <= 4 for the model checks.
inline std::vector<Word> model_words()
{
    auto g = [](char const* b, int n = 0) { return Generator{b, GeneratorKind::plain, n}; };
    return {Word{},
            Word{{g("u"), g("v")}},
            Word{{g("c"), g("c")}},
            Word{{g("u"), g("v", 1)}},
            Word{{g("c", 1), g("c", 1)}},
            Word{{g("u"), g("c", 2), g("v"), g("c")}},
            Word{{g("s"), g("u", 1), g("v"), g("c", 1)}}};
}

namespace detail {

template <Scalar S> TraceModel<S> const& model_of(Context const& ctx)
{
    if constexpr (scalar_traits<S>::exact)
        return ctx.rational_model();
    else
        return ctx.circle_model();
}

inline CheckReport custom_report(std::string name, std::string anchor, double lhs, double rhs, double tol, bool pass,
                                 std::string notes = {})
{
    CheckReport r = make_report<F>(std::move(name), std::move(anchor), F(lhs), F(rhs), tol, std::move(notes));
    r.pass = pass;
    return r;
}

template <Scalar S> void residue_theorem_tasks(Context const& ctx, std::vector<Task>& out)
{
    auto const& st = ctx.settings();
    auto const& model = model_of<S>(ctx);
    auto const letters = alphabet(st.backend);
    Rng rng(st.seed, "residue-theorem");
    S const orders[] = {ratio<S>(-1, 2), S{}, ratio<S>(1), ratio<S>(3, 2)};
    S const slopes[] = {ratio<S>(1), ratio<S>(2)};
    int const k = model.pole_multiplicity_bound();
    for (int i = 0; i < st.families; ++i) {
        S const a = orders[i % 4], q = slopes[(i / 4) % 2];
        auto const A = random_family<S>(rng, letters, a, q, st.log_degree);
        for (int j = -1; j <= k; ++j) {
            std::string const label = "family " + std::to_string(i) + " a=" + order_label(a) +
                                      " q=" + order_label(q) + " j=" + std::to_string(j);
            out.push_back({"residue-theorem", label, [A, j, &model, tol = st.tol.identity, K = st.laurent_depth] {
                               return residue_theorem_check(A, j, model, tol, K);
                           }});
        }
    }
    // Constant family with q = 1: both sides must coincide to the last bit.
    auto const C = Symbol<S>::term(random_element<S>(rng, letters), AffineOrder<S>{ratio<S>(1, 2), ratio<S>(1)});
    for (int j = -1; j <= k; ++j)
        out.push_back({"residue-theorem", "constant family j=" + std::to_string(j),
                       [C, j, &model, K = st.laurent_depth] {
                           auto r = residue_theorem_check(C, j, model, 0.0, K);
                           r.check_name = "residue_theorem_constant";
                           r.pass = r.abs_err == 0.0;
                           r.notes = "constant family collapse, exact equality required";
                           return r;
                       }});
}

template <Scalar S>
void weight_discrepancy_tasks(Context const& ctx, std::vector<Task>& out,
                              std::vector<std::pair<std::string, Symbol<S>>> const& perturbations)
{
    auto const& st = ctx.settings();
    auto const& model = model_of<S>(ctx);
    auto const letters = alphabet(st.backend);
    Rng rng(st.seed, "weight-discrepancy");
    S const orders[] = {ratio<S>(-1, 2), S{}, ratio<S>(1), ratio<S>(3, 2)};
    int const k = model.pole_multiplicity_bound();
    for (int i = 0; i < st.operators; ++i) {
        S const a = orders[i % 4];
        auto const A = random_operator<S>(rng, letters, a);
        for (auto const& [pname, P] : perturbations) {
            std::string const base = "operator " + std::to_string(i) + " a=" + order_label(a) + " " + pname;
            for (int j = -1; j <= k; ++j) {
                double const tol = j == k ? st.tol.canonical : st.tol.identity;
                out.push_back({"weight-discrepancy", base + " j=" + std::to_string(j),
                               [A, P, j, &model, tol, ps = st.perturbation, K = st.laurent_depth] {
                                   return weight_discrepancy_check(j, A, P, model, ps, tol, K);
                               }});
            }
            if (k == 0)
                out.push_back({"weight-discrepancy", base + " log form",
                               [A, P, &model, tol = st.tol.identity, ps = st.perturbation, K = st.laurent_depth] {
                                   return weight_discrepancy_log_check(A, P, model, ps, tol, K);
                               }});
        }
    }
}

/// Commutator pairs use single letters: the coefficients then shift modes by at most one, where
/// the expansion of |D|^a b |D|^{-a} converges at every mode and the truncated commutator
/// approximates the global value.
inline void commutator_discrepancy_tasks(Context const& ctx, std::vector<Task>& out)
{
    auto const& st = ctx.settings();
    if (st.backend == Backend::exact) {
        out.push_back({"commutator-discrepancy", "synthetic model", [] {
                           return skipped_report("commutator_discrepancy", "commutator discrepancy",
                                                 "the synthetic exact model is not tracial");
                       }});
        return;
    }
    auto const& model = ctx.circle_model();
    auto const letters = alphabet(st.backend);
    Rng rng(st.seed, "commutator-discrepancy");
    std::pair<double, double> const orders[] = {{0, 1}, {-0.5, 0.5}, {1, 0}, {0.5, -0.25}, {1.5, -0.5}, {0, 0}};
    for (int i = 0; i < st.pairs; ++i) {
        auto const [oa, ob] = orders[i % 6];
        auto const A = random_operator<F>(rng, letters, F(oa), 1);
        auto const B = random_operator<F>(rng, letters, F(ob), 1);
        std::string const base = "pair " + std::to_string(i) + " a=" + order_label(F(oa)) + " b=" + order_label(F(ob));
        for (int j = -1; j <= 0; ++j) {
            double const tol = j == 0 ? st.tol.canonical : st.tol.identity;
            out.push_back({"commutator-discrepancy", base + " j=" + std::to_string(j),
                           [A, B, j, &model, tol, N = st.commutator_N, lim = st.commutator_limits,
                            K = st.laurent_depth] {
                               return commutator_discrepancy_check(j, A, B, model, N, tol, lim, K);
                           }});
        }
        out.push_back({"commutator-discrepancy", base + " log form",
                       [A, B, &model, tol = st.tol.identity, N = st.commutator_N, lim = st.commutator_limits,
                        K = st.laurent_depth] {
                           return commutator_discrepancy_log_check(A, B, model, N, tol, lim, K);
                       }});
    }
}

inline void canonical_trace_tasks(Context const& ctx, std::vector<Task>& out)
{
    auto const& st = ctx.settings();
    if (st.backend == Backend::exact) {
        out.push_back({"canonical-trace", "synthetic model", [] {
                           return skipped_report("canonical_trace", "canonical trace",
                                                 "the synthetic exact model is not tracial");
                       }});
        return;
    }
    auto const& model = ctx.circle_model();
    auto const letters = alphabet(st.backend);
    Rng rng(st.seed, "canonical-trace");
    std::pair<double, double> const orders[] = {{-0.5, -0.25}, {0.5, 0.25}, {1.5, -0.25},
                                                {1.0 / 3, 1.0 / 3}, {-1, -1.5}, {-2, -1}};
    for (int i = 0; i < st.pairs; ++i) {
        auto const [oa, ob] = orders[i % 6];
        auto const A = random_operator<F>(rng, letters, F(oa), 1);
        auto const B = random_operator<F>(rng, letters, F(ob), 1);
        out.push_back({"canonical-trace",
                       "commutator pair " + std::to_string(i) + " a=" + order_label(F(oa)) + " b=" + order_label(F(ob)),
                       [A, B, &model, tol = st.tol.canonical, N = st.commutator_N, lim = st.commutator_limits,
                        K = st.laurent_depth] {
                           return canonical_trace_commutator_check(A, B, model, N, tol, lim, K);
                       }});
    }
    double const op_orders[] = {-0.5, 0.5, 1.5, -2.5};
    auto const perturbations = circle_perturbations();
    for (int i = 0; i < st.operators; ++i) {
        double const a = op_orders[i % 4];
        auto const A = random_operator<F>(rng, letters, F(a));
        for (std::size_t p = 1; p < perturbations.size(); ++p) {
            auto const& [pname, P] = perturbations[p];
            out.push_back({"canonical-trace", "operator " + std::to_string(i) + " a=" + order_label(F(a)) + " " + pname,
                           [A, P, &model, tol = st.tol.canonical, ps = st.perturbation, K = st.laurent_depth] {
                               return canonical_trace_perturbation_check(A, P, model, ps, tol, K);
                           }});
        }
    }
    for (double a : {1.0, -1.0, 0.0}) {
        auto const A = random_operator<F>(rng, letters, F(a));
        out.push_back({"canonical-trace", "gate rejects order " + order_label(F(a)), [A, a, &model] {
                           std::string const anchor = "canonical trace gate";
                           try {
                               (void)canonical_trace(A, model);
                           } catch (OrderInDimensionSpectrum const& e) {
                               return custom_report("canonical_trace_gate", anchor, a, a, 0.0, true, e.what());
                           }
                           return custom_report("canonical_trace_gate", anchor, a, a, 0.0, false,
                                                "order in -Sd was not rejected");
                       }});
    }
}

inline void model_tasks(Context const& ctx, std::vector<Task>& out)
{
    auto const& st = ctx.settings();
    if (st.backend == Backend::exact) {
        out.push_back({"model", "synthetic model", [] {
                           return skipped_report("model", "model contract", "model checks target the circle");
                       }});
        return;
    }
    auto const& model = ctx.circle_model();
    using circle::ContinuationOracle;

    struct Constant
    {
        char const* what;
        double center;
        int index; ///< Laurent index: 0 residue, -1 finite part
        double expected;
    };
    Constant const constants[] = {{"residue at 1", 1.0, 0, 2.0}, {"residue at -1", -1.0, 0, 1.0},
                                  {"value at 0", 0.0, -1, 0.0}};
    for (auto const& c : constants) {
        out.push_back({"model", std::string("unit word ") + c.what + " by word_trace", [c, &model, tol = st.tol.model] {
                           auto const g = model.word_trace(Word{}, F(c.center), 0, 2);
                           if (g.pole_order() > 1) throw ModelContractViolation("pole simplicity", "unit word");
                           return make_report("circle_constant", std::string("unit word ") + c.what,
                                              residue(g, c.index), F(c.expected), tol);
                       }});
        out.push_back({"model", std::string("unit word ") + c.what + " by oracle", [c, &model, tol = st.tol.model] {
                           ContinuationOracle const oracle(model, Word{});
                           auto const a = oracle.laurent(F(c.center), 1);
                           return make_report("circle_constant_oracle", std::string("unit word ") + c.what,
                                              a[static_cast<std::size_t>(-c.index)], F(c.expected), tol,
                                              "contour continuation in quad precision");
                       }});
        out.push_back({"model", std::string("unit word ") + c.what + " agreement", [c, &model, tol = st.tol.model] {
                           auto const g = model.word_trace(Word{}, F(c.center), 0, 2);
                           ContinuationOracle const oracle(model, Word{});
                           auto const a = oracle.laurent(F(c.center), 1);
                           return make_report("circle_constant_agreement", std::string("unit word ") + c.what,
                                              residue(g, c.index), a[static_cast<std::size_t>(-c.index)], tol);
                       }});
    }

    // word_trace against the oracle at 20 points of the convergence half-plane.
    Rng rng(st.seed, "model");
    auto const words = model_words();
    for (int i = 0; i < 20; ++i) {
        Word const w = words[static_cast<std::size_t>(i) % words.size()];
        F const z(1.25 + 0.25 * rng.between(0, 10), 0.5 * rng.between(-4, 4));
        char buf[64];
        std::snprintf(buf, sizeof buf, " at z=%g%+gi", z.real(), z.imag());
        std::string const label = w.str() + buf;
        out.push_back({"model", "honesty " + label, [w, z, &model, tol = st.tol.model, label] {
                           ContinuationOracle const oracle(model, w);
                           F const lhs = model.word_trace(w, z, 0, 0).coeff(0);
                           F const rhs = oracle.value(z);
                           auto r = make_report("word_trace_vs_oracle", "model honesty " + label, lhs, rhs, tol);
                           r.pass = r.rel_err <= tol;
                           return r;
                       }});
    }

    // Pole simplicity over the scanned centers.
    for (auto const& w : words)
        for (double c : {1.0, -1.0, -3.0}) {
            std::string const label = w.str() + " at " + order_label(F(c));
            out.push_back({"model", "pole order " + label, [w, c, &model, label] {
                               int const p = model.word_trace(w, F(c), 0, 1).pole_order();
                               if (p > 1)
                                   throw ModelContractViolation("pole simplicity",
                                                                label + " has pole order " + std::to_string(p));
                               return custom_report("pole_simplicity", "simple poles " + label, p, 1, 0.0, true);
                           }});
        }

    // Realized delta against the literal commutator with |D|.
    for (auto const& w : words) {
        if (w.is_unit()) continue;
        for (int n : {1, 2}) {
            std::string const label = w.str() + " delta^" + std::to_string(n);
            out.push_back({"model", "delta consistency " + label,
                           [w, n, label, tol = st.tol.consistency, params = st.circle, cut = st.consistency_cutoff] {
                               circle::CircleParams p = params;
                               p.mode_cutoff = cut;
                               circle::CircleModel const m(p);
                               auto const direct = m.realize(delta_power(BElement<F>(w), n));
                               auto lit = m.realize(w);
                               for (int i = 0; i < n; ++i) lit = commutator(m.abs_d(), lit);
                               int const margin = m.band_support(w) + n + 1;
                               double worst = 0.0;
                               for (int col = -cut + margin; col <= cut - margin; ++col)
                                   for (int off = -margin; off <= margin; ++off)
                                       worst = std::max(worst, std::abs(direct.entry(col + off, col) -
                                                                        lit.entry(col + off, col)));
                               return custom_report("delta_consistency", "realized delta " + label, worst, 0.0, tol,
                                                    worst <= tol, "largest interior entry difference");
                           }});
        }
    }
}

} // namespace detail

/// Tasks of one suite in a fixed order.
inline std::vector<Task> make_tasks(Context const& ctx, std::string const& suite)
{
    std::vector<Task> out;
    bool const exact = ctx.settings().backend == Backend::exact;
    if (suite == "residue-theorem") {
        if (exact)
            detail::residue_theorem_tasks<ExactComplex>(ctx, out);
        else
            detail::residue_theorem_tasks<F>(ctx, out);
    } else if (suite == "weight-discrepancy") {
        if (exact)
            detail::weight_discrepancy_tasks<ExactComplex>(ctx, out, exact_perturbations());
        else
            detail::weight_discrepancy_tasks<F>(ctx, out, circle_perturbations());
    } else if (suite == "commutator-discrepancy") {
        detail::commutator_discrepancy_tasks(ctx, out);
    } else if (suite == "canonical-trace") {
        detail::canonical_trace_tasks(ctx, out);
    } else if (suite == "model") {
        detail::model_tasks(ctx, out);
    } else {
        throw std::invalid_argument("unknown suite " + suite);
    }
    return out;
}

/// Runs every task on `jobs` workers; outcomes keep the task order.
inline std::vector<Outcome> run_tasks(std::vector<Task> const& tasks, int jobs,
                                      std::function<void(Outcome const&)> const& progress = {})
{
    std::vector<Outcome> out(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            auto const& t = tasks[i];
            Outcome o{t.suite, t.label, {}, false, {}, 0.0};
            auto const start = std::chrono::steady_clock::now();
            try {
                o.report = t.run();
            } catch (ModelContractViolation const& e) {
                o.contract_violation = true;
                o.violated_invariant = e.invariant();
                o.report = skipped_report("contract_violation", t.label, e.what());
                o.report.skipped = false;
                o.report.pass = false;
            } catch (std::exception const& e) {
                o.report = skipped_report("error", t.label, e.what());
                o.report.skipped = false;
                o.report.pass = false;
            }
            o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(o);
            }
            out[i] = std::move(o);
        }
    };
    int const n = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

} // namespace nctrace::battery
