#include <nctrace/battery.hpp>

#include <catch_amalgamated.hpp>

using namespace nctrace;
using namespace nctrace::battery;

namespace {

std::vector<std::string> labels(Settings const& s, std::string const& suite)
{
    Context const ctx(s);
    std::vector<std::string> out;
    for (auto const& t : make_tasks(ctx, suite)) out.push_back(t.label);
    return out;
}

} // namespace

TEST_CASE("battery task lists are a function of the seed", "[battery]")
{
    Settings s;
    for (auto const& suite : suite_names()) CHECK(labels(s, suite) == labels(s, suite));
    Settings other = s;
    other.seed = s.seed + 1;
    Context const a(s), b(other);
    auto const ta = make_tasks(a, "residue-theorem");
    auto const tb = make_tasks(b, "residue-theorem");
    REQUIRE(ta.size() == tb.size());
    bool differs = false;
    for (std::size_t i = 0; i < ta.size() && !differs; ++i) differs = ta[i].run().lhs != tb[i].run().lhs;
    CHECK(differs);
}

TEST_CASE("battery sizes meet the acceptance minimums", "[battery]")
{
    Settings s;
    Context const ctx(s);
    CHECK(make_tasks(ctx, "residue-theorem").size() >= 12 * 2);
    int honesty = 0;
    for (auto const& t : make_tasks(ctx, "model"))
        if (t.label.rfind("honesty", 0) == 0) ++honesty;
    CHECK(honesty == 20);
}

TEST_CASE("runner keeps task order and reports contract violations", "[battery]")
{
    std::vector<Task> tasks;
    for (int i = 0; i < 12; ++i)
        tasks.push_back({"s", "t" + std::to_string(i), [i] {
                             if (i == 5) throw ModelContractViolation("pole multiplicity", "synthetic");
                             if (i == 7) throw std::runtime_error("boom");
                             return make_report<circle::F>("c", "a", circle::F(i), circle::F(i), 0.0);
                         }});
    auto const out = run_tasks(tasks, 3);
    REQUIRE(out.size() == tasks.size());
    for (int i = 0; i < 12; ++i) CHECK(out[static_cast<std::size_t>(i)].label == "t" + std::to_string(i));
    CHECK(out[5].contract_violation);
    CHECK(out[5].violated_invariant == "pole multiplicity");
    CHECK_FALSE(out[5].report.pass);
    CHECK_FALSE(out[7].contract_violation);
    CHECK_FALSE(out[7].report.pass);
    CHECK(out[3].report.pass);
}

TEST_CASE("exact backend skips the suites that need a tracial model", "[battery]")
{
    Settings s;
    s.backend = Backend::exact;
    Context const ctx(s);
    for (char const* suite : {"commutator-discrepancy", "canonical-trace", "model"}) {
        auto const tasks = make_tasks(ctx, suite);
        REQUIRE(tasks.size() == 1);
        CHECK(tasks[0].run().skipped);
    }
}
