#include <nctrace/battery.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

namespace {

using nctrace::battery::Backend;
using nctrace::battery::Settings;
using json = nlohmann::json;

constexpr char const* kSchemaVersion = "1.0";

enum Exit { ok = 0, check_failed = 1, config_error = 2, contract_violation = 3 };

struct ConfigError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct RunConfig
{
    Settings settings;
    std::string report_path = "ncresidue-report.json";
};

template <typename T> T parse_value(std::string const& key, std::string const& text)
{
    std::istringstream in(text);
    T value{};
    in >> value;
    if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("invalid value '" + text + "' for key " + key);
    return value;
}

template <typename T> std::function<void(std::string const&, std::string const&)> positive(T& target)
{
    return [&target](std::string const& key, std::string const& text) {
        T const v = parse_value<T>(key, text);
        if (!(v > 0)) throw ConfigError("key " + key + " must be positive");
        target = v;
    };
}

Backend parse_backend(std::string const& key, std::string const& text)
{
    if (text == "exact") return Backend::exact;
    if (text == "float") return Backend::floating;
    throw ConfigError("key " + key + " must be exact or float, got '" + text + "'");
}

/// Reads the sectioned key-value file; every key must be known.
RunConfig read_config(std::string const& path)
{
    RunConfig cfg;
    auto& s = cfg.settings;
    using Setter = std::function<void(std::string const&, std::string const&)>;
    std::map<std::string, Setter> const keys{
        {"model.backend", [&](auto const& k, auto const& v) { s.backend = parse_backend(k, v); }},
        {"model.mode_cutoff", positive(s.circle.mode_cutoff)},
        {"model.asym_order", positive(s.circle.asym_order)},
        {"model.em_depth", positive(s.circle.em_depth)},
        {"model.head", positive(s.circle.head)},
        {"model.consistency_cutoff", positive(s.consistency_cutoff)},
        {"calculus.perturbation_order", positive(s.perturbation.N)},
        {"calculus.max_factors", positive(s.perturbation.bounds.max_n)},
        {"calculus.max_deltas", positive(s.perturbation.bounds.max_k)},
        {"calculus.campbell_hausdorff_depth", positive(s.perturbation.M_ch)},
        {"calculus.commutator_order", positive(s.commutator_N)},
        {"calculus.max_word_length", positive(s.commutator_limits.max_word_length)},
        {"calculus.max_delta_power", positive(s.commutator_limits.max_delta_power)},
        {"calculus.log_degree", [&](auto const& k, auto const& v) {
             int const d = parse_value<int>(k, v);
             if (d < 0) throw ConfigError("key " + k + " must be non-negative");
             s.log_degree = d;
         }},
        {"calculus.laurent_depth", positive(s.laurent_depth)},
        {"calculus.pole_bound", [&](auto const& k, auto const& v) {
             int const d = parse_value<int>(k, v);
             if (d < 0) throw ConfigError("key " + k + " must be non-negative");
             s.exact_pole_bound = d;
         }},
        {"battery.seed", [&](auto const& k, auto const& v) { s.seed = parse_value<std::uint64_t>(k, v); }},
        {"battery.families", positive(s.families)},
        {"battery.operators", positive(s.operators)},
        {"battery.pairs", positive(s.pairs)},
        {"tolerance.identity", positive(s.tol.identity)},
        {"tolerance.canonical", positive(s.tol.canonical)},
        {"tolerance.model", positive(s.tol.model)},
        {"tolerance.consistency", positive(s.tol.consistency)},
        {"output.report", [&](auto const&, auto const& v) { cfg.report_path = v; }},
    };

    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (boost::property_tree::ini_parser_error const& e) {
        throw ConfigError(e.what());
    }
    for (auto const& [section, body] : tree) {
        if (body.empty()) throw ConfigError("key " + section + " lies outside any section");
        for (auto const& [name, value] : body) {
            std::string const key = section + "." + name;
            auto it = keys.find(key);
            if (it == keys.end()) throw ConfigError("unknown key " + key);
            it->second(key, value.get_value<std::string>());
        }
    }
    // The shared algebra limits also bound the perturbation expansions.
    s.perturbation.limits = s.commutator_limits;
    return cfg;
}

json complex_json(nctrace::FloatComplex c) { return json::array({c.real(), c.imag()}); }

json check_json(nctrace::battery::Outcome const& o)
{
    auto const& r = o.report;
    json j{{"label", o.label},
           {"check", r.check_name},
           {"anchor", r.anchor},
           {"lhs", complex_json(r.lhs)},
           {"rhs", complex_json(r.rhs)},
           {"abs_err", r.abs_err},
           {"rel_err", r.rel_err},
           {"tolerance", r.tolerance},
           {"exact", r.exact},
           {"pass", r.pass},
           {"skipped", r.skipped}};
    if (r.exact) {
        j["lhs_exact"] = r.lhs_exact;
        j["rhs_exact"] = r.rhs_exact;
    }
    if (!r.notes.empty()) j["notes"] = r.notes;
    if (o.contract_violation) j["violated_invariant"] = o.violated_invariant;
    return j;
}

json settings_json(RunConfig const& cfg)
{
    auto const& s = cfg.settings;
    return {{"model",
             {{"backend", s.backend == Backend::exact ? "exact" : "float"},
              {"mode_cutoff", s.circle.mode_cutoff},
              {"asym_order", s.circle.asym_order},
              {"em_depth", s.circle.em_depth},
              {"head", s.circle.head},
              {"consistency_cutoff", s.consistency_cutoff}}},
            {"calculus",
             {{"perturbation_order", s.perturbation.N},
              {"max_factors", s.perturbation.bounds.max_n},
              {"max_deltas", s.perturbation.bounds.max_k},
              {"campbell_hausdorff_depth", s.perturbation.M_ch},
              {"commutator_order", s.commutator_N},
              {"max_word_length", s.commutator_limits.max_word_length},
              {"max_delta_power", s.commutator_limits.max_delta_power},
              {"log_degree", s.log_degree},
              {"laurent_depth", s.laurent_depth},
              {"pole_bound", s.exact_pole_bound}}},
            {"battery", {{"seed", s.seed}, {"families", s.families}, {"operators", s.operators}, {"pairs", s.pairs}}},
            {"tolerance",
             {{"identity", s.tol.identity},
              {"canonical", s.tol.canonical},
              {"model", s.tol.model},
              {"consistency", s.tol.consistency}}}};
}

std::string utc_now()
{
    std::time_t const t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int run(std::string const& subcommand, RunConfig const& cfg, int jobs)
{
    std::vector<std::string> suites;
    if (subcommand == "all")
        suites = nctrace::battery::suite_names();
    else
        suites = {subcommand.substr(std::string("verify-").size())};

    nctrace::battery::Context const ctx(cfg.settings);
    json report{{"schema_version", kSchemaVersion},
                {"tool", "ncresidue"},
                {"subcommand", subcommand},
                {"config", settings_json(cfg)},
                {"suites", json::array()}};
    json wall = json::object();
    int total = 0, passed = 0, failed = 0, skipped = 0, violations = 0;
    std::vector<std::string> violated;

    for (auto const& suite : suites) {
        auto const tasks = nctrace::battery::make_tasks(ctx, suite);
        auto const start = std::chrono::steady_clock::now();
        auto const outcomes = nctrace::battery::run_tasks(tasks, jobs, [](auto const& o) {
            char const* tag = o.report.skipped ? "SKIP" : o.report.pass ? "PASS" : "FAIL";
            std::cout << "[" << tag << "] " << o.suite << ": " << o.label << " (abs " << o.report.abs_err << ", rel "
                      << o.report.rel_err << ")" << std::endl;
        });
        wall[suite] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        json checks = json::array();
        int sp = 0, sf = 0, ss = 0;
        for (auto const& o : outcomes) {
            checks.push_back(check_json(o));
            if (o.report.skipped)
                ++ss;
            else if (o.report.pass)
                ++sp;
            else
                ++sf;
            if (o.contract_violation) {
                ++violations;
                violated.push_back(o.violated_invariant);
            }
        }
        report["suites"].push_back({{"name", suite},
                                    {"checks", checks},
                                    {"summary", {{"total", checks.size()}, {"passed", sp}, {"failed", sf}, {"skipped", ss}}}});
        total += static_cast<int>(checks.size());
        passed += sp;
        failed += sf;
        skipped += ss;
    }
    report["summary"] = {{"total", total},
                         {"passed", passed},
                         {"failed", failed},
                         {"skipped", skipped},
                         {"contract_violations", violations},
                         {"violated_invariants", violated}};
    // Everything that varies between identical runs lives under this one field.
    report["timestamp"] = {{"utc", utc_now()}, {"wall_seconds", wall}};

    std::ofstream out(cfg.report_path);
    if (!out) {
        std::cerr << "cannot write report " << cfg.report_path << "\n";
        return check_failed;
    }
    out << report.dump(2) << "\n";
    std::cout << "summary: " << passed << " passed, " << failed << " failed, " << skipped << " skipped; report "
              << cfg.report_path << std::endl;
    if (violations > 0) {
        for (auto const& v : violated) std::cerr << "model contract violation: " << v << "\n";
        return contract_violation;
    }
    return failed > 0 ? check_failed : ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Verification batteries for zeta-regularized residue traces"};
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> report_path, backend;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--tol", tol, "Override every tolerance in the config");
    app.add_option("--seed", seed, "Override the battery seed");
    app.add_option("--report", report_path, "Report output path");
    app.add_option("--backend", backend, "Scalar backend")->check(CLI::IsMember({"exact", "float"}));
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    std::string config_path;
    std::string chosen;
    char const* const names[] = {"verify-residue-theorem", "verify-weight-discrepancy",
                                 "verify-commutator-discrepancy", "verify-canonical-trace", "verify-model", "all"};
    for (char const* name : names) {
        auto* sub = app.add_subcommand(name, std::string("Run ") + name);
        sub->add_option("config", config_path, "Config file")->required();
        sub->callback([&chosen, name] { chosen = name; });
    }
    app.require_subcommand(1);
    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    RunConfig cfg;
    try {
        cfg = read_config(config_path);
    } catch (ConfigError const& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    }
    if (tol) {
        if (!(*tol >= 0.0)) {
            std::cerr << "config error: --tol must be non-negative\n";
            return config_error;
        }
        cfg.settings.tol = {*tol, *tol, *tol, *tol};
    }
    if (seed) cfg.settings.seed = *seed;
    if (report_path) cfg.report_path = *report_path;
    if (backend) cfg.settings.backend = *backend == "exact" ? Backend::exact : Backend::floating;

    try {
        return run(chosen, cfg, jobs);
    } catch (nctrace::ModelContractViolation const& e) {
        std::cerr << "model contract violation: " << e.invariant() << ": " << e.what() << "\n";
        return contract_violation;
    }
}
