#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "switchdiff/experiments.hpp"
#include "switchdiff/io.hpp"

using namespace switchdiff;

namespace {

// Small budgets so suite-level tests stay fast; statistical strength is the
// acceptance binary's job.
RunConfig small_config(const std::string& preset) {
    RunConfig cfg = parse_config(R"({
        "schema_version": 1,
        "model": { "preset": ")" + preset + R"(" },
        "engine": { "dt": 0.002, "horizon": 5000.0 },
        "estimation": { "replicas": 600, "replicas_tau": 200,
                        "replicas_clock": 20000 },
        "suites": ["conditions"],
        "seed": 5
    })");
    return cfg;
}

bool all_non_diagnostic_pass(const SuiteOutput& out) {
    return std::all_of(out.reports.begin(), out.reports.end(),
                       [](const SuiteReport& r) {
                           return r.verdict == "pass" ||
                                  r.verdict == "diagnostic";
                       });
}

}  // namespace

TEST_CASE("preset catalogue resolves all names with admissible M1") {
    for (const auto& name : preset_names()) {
        const Preset& preset = preset_catalogue(name);
        CHECK(preset.name == name);
        CHECK(preset.params.M1 > preset.params.M);
        CHECK_NOTHROW(preset.params.validate());
    }
    // Regression anchors for the doubling search with its fixed seed.
    CHECK(preset_catalogue("canonical-1d").params.M1 == 8.0);
    CHECK(preset_catalogue("boundary-c1").params.M1 == 4.0);
    CHECK_THROWS_AS(preset_catalogue("no-such"), std::invalid_argument);
}

TEST_CASE("M1 doubling search is reproducible and respects its threshold") {
    const Preset& preset = preset_catalogue("canonical-1d");
    const auto s1 = select_M1(preset.params, preset.kappa_minus,
                              preset.kappa_plus, 123, 2000, false);
    const auto s2 = select_M1(preset.params, preset.kappa_minus,
                              preset.kappa_plus, 123, 2000, false);
    CHECK(s1.M1 == s2.M1);
    CHECK(s1.delta > 0.0);
    CHECK(s1.epsilon > 0.0);
    REQUIRE_FALSE(s1.estimates.empty());
    // The accepted candidate sits below delta; every earlier one did not.
    CHECK(s1.estimates.back() < s1.delta);
    for (std::size_t i = 0; i + 1 < s1.estimates.size(); ++i)
        CHECK(s1.estimates[i] >= s1.delta);
    CHECK(s1.candidates.back() == s1.M1);
}

TEST_CASE("minimal preset config fills documented defaults") {
    const RunConfig cfg = parse_config(R"({
        "model": { "preset": "canonical-1d" },
        "suites": ["conditions"]
    })");
    CHECK(cfg.schema_version == 1);
    CHECK(cfg.preset == "canonical-1d");
    CHECK(cfg.params.d == 1);
    CHECK(cfg.params.M1 == 8.0);
    CHECK(cfg.estimation.replicas == 4000);
    CHECK(cfg.estimation.confidence == 0.99);
    CHECK(cfg.workers == 1);
    CHECK(cfg.seed == 1);
    CHECK(cfg.output_dir == "out");
}

TEST_CASE("config loader rejects malformed input with the key path") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"model": {"preset": "canonical-1d"},
                                          "bogus": 1})"),
                         doctest::Contains("bogus"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"model": {"preset": "canonical-1d",
                                                    "M": 2.0}})"),
                         doctest::Contains("model.M"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"model": {"preset": "nope"}})"),
                         doctest::Contains("nope"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"model": {"preset": "canonical-1d"},
                                          "suites": ["wat"]})"),
                         doctest::Contains("wat"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"preset": "canonical-1d"},
                                     "workers": 0})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"schema_version": 2,
                                     "model": {"preset": "canonical-1d"}})"),
                    ConfigError);
}

TEST_CASE("zero switching intensity is an invariant error naming the bound") {
    CHECK_THROWS_WITH_AS(parse_config(R"({
        "model": { "d": 1, "lambda_minus": 0.0, "lambda_plus": 10.0,
                   "kappa_minus": 4.0, "kappa_plus": 0.1,
                   "M": 1.0, "M1": 4.0 }
    })"),
                         doctest::Contains("0 < lambda_-"), ConfigError);
}

TEST_CASE("custom model with automatic M1 resolution") {
    const RunConfig cfg = parse_config(R"({
        "model": { "d": 1, "lambda_minus": 1.0, "lambda_plus": 10.0,
                   "kappa_minus": 4.0, "kappa_plus": 0.1,
                   "M": 1.0, "M1": "auto" },
        "suites": ["conditions"]
    })");
    CHECK(cfg.preset.empty());
    CHECK(cfg.params.M1 == 8.0);  // same model as the canonical-1d preset
    CHECK(cfg.params.r_minus == 4.0);
    CHECK(cfg.params.R_plus == 0.1);
}

TEST_CASE("config serialization round-trips through the hash") {
    const RunConfig cfg = small_config("canonical-1d");
    const RunConfig back = parse_config(serialize_config(cfg));
    CHECK(config_hash(cfg) == config_hash(back));
    CHECK(serialize_config(cfg) == serialize_config(back));
    // The hash separates distinct configs.
    RunConfig other = cfg;
    other.estimation.replicas += 1;
    CHECK(config_hash(cfg) != config_hash(other));
}

TEST_CASE("suites gate on the exact condition tier") {
    const RunConfig boundary = small_config("boundary-c1");
    // (c1) holds: second-moment machinery is available.
    CHECK_NOTHROW(run_suite("conditions", boundary));
    // (c2)/(c2a) fail: higher-moment suites refuse to run.
    CHECK_THROWS_WITH_AS(run_suite("lemma99a", boundary),
                         doctest::Contains("(c2)"), ConditionGateError);
    CHECK_THROWS_WITH_AS(run_suite("lemma58", boundary),
                         doctest::Contains("(c2)"), ConditionGateError);
    // The gate reports the first unmet tier on the way to (c2a).
    CHECK_THROWS_WITH_AS(run_suite("theorem2", boundary),
                         doctest::Contains("requires condition"),
                         ConditionGateError);
    CHECK_THROWS_AS(run_suite("no-such-suite", boundary),
                    std::invalid_argument);
}

TEST_CASE("negative control: lemma11 still passes where lemma99a is gated") {
    RunConfig boundary = small_config("boundary-c1");
    boundary.estimation.replicas = 1500;
    boundary.estimation.replicas_tau = 300;
    const SuiteOutput out = run_suite("lemma11", boundary);
    REQUIRE_FALSE(out.reports.empty());
    CHECK(all_non_diagnostic_pass(out));
    CHECK_FALSE(out.drift_rows.empty());
}

TEST_CASE("suite runs are pure functions of (config, seed, suite)") {
    const RunConfig cfg = small_config("canonical-1d");
    const SuiteOutput a = run_suite("holding-times", cfg);
    const SuiteOutput b = run_suite("holding-times", cfg);
    CHECK(a == b);

    RunConfig more_workers = cfg;
    more_workers.workers = 4;
    const SuiteOutput c = run_suite("holding-times", more_workers);
    CHECK(a == c);

    RunConfig reseeded = cfg;
    reseeded.seed = 6;
    const SuiteOutput d = run_suite("holding-times", reseeded);
    CHECK(a.reports.size() == d.reports.size());
    CHECK(a != d);  // estimates move with the seed
}

TEST_CASE("reports are sorted by check id and carry the config hash") {
    const RunConfig cfg = small_config("canonical-1d");
    const SuiteOutput out = run_suite("conditions", cfg);
    REQUIRE(out.reports.size() >= 4);
    for (std::size_t i = 1; i < out.reports.size(); ++i)
        CHECK(out.reports[i - 1].check_id < out.reports[i].check_id);
    for (const auto& r : out.reports) {
        CHECK(r.config_hash == config_hash(cfg));
        CHECK(r.seed == cfg.seed);
        CHECK_FALSE(r.claim.empty());
    }
}

TEST_CASE("report JSON round-trips exactly") {
    const RunConfig cfg = small_config("canonical-1d");
    SuiteResults results;
    results.emplace_back("conditions", run_suite("conditions", cfg));
    results.emplace_back("holding-times", run_suite("holding-times", cfg));

    const std::string text = reports_to_json(cfg, results);
    const SuiteResults back = reports_from_json(text);
    REQUIRE(back.size() == results.size());
    CHECK(back == results);
    // Serialization is deterministic byte-for-byte.
    CHECK(text == reports_to_json(cfg, results));
}

TEST_CASE("CSV output has the fixed column header") {
    const RunConfig cfg = small_config("canonical-1d");
    SuiteResults results;
    results.emplace_back("conditions", run_suite("conditions", cfg));

    std::ostringstream os;
    write_reports_csv(os, results);
    const std::string csv = os.str();
    CHECK(csv.rfind("check_id,suite,claim,estimate,threshold,margin,"
                    "ci_lo,ci_hi,verdict,config_hash,seed\n",
                    0) == 0);
    // One row per report plus the header.
    const auto lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == static_cast<long>(results[0].second.reports.size()) + 1);

    std::ostringstream od;
    write_drift_csv(od, results);
    CHECK(od.str().rfind("y_radius,m,estimate,se,ci_lo,ci_hi,n,verdict\n", 0) ==
          0);
}

TEST_CASE("suite catalogue is stable") {
    const auto names = suite_names();
    CHECK(names.size() == 12);
    for (const auto& required :
         {"conditions", "engine-oracles", "lemma11", "lemma99a", "prop1",
          "theorem2", "diagnostics"})
        CHECK(std::find(names.begin(), names.end(), required) != names.end());
}
