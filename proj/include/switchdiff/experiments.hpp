#pragma once

#include <string>
#include <vector>

#include "switchdiff/config.hpp"
#include "switchdiff/embedded.hpp"
#include "switchdiff/estimators.hpp"

namespace switchdiff {

struct Preset {
    std::string name;
    ModelParams params;  // M1 filled by the doubling search
    double kappa_minus = 1.0;
    double kappa_plus = 1.0;
};

std::vector<std::string> preset_names();
const Preset& preset_catalogue(const std::string& name);

struct M1SearchResult {
    double M1 = 0.0;
    double delta = 0.0;    // occupation threshold from the epsilon choice
    double epsilon = 0.0;
    std::vector<double> candidates;
    std::vector<double> estimates;  // worst-case occupation per candidate
};

// Doubling search for the smallest M1 = 2^k M at which the worst-case
// occupation estimate near the M-ball falls below
// delta = eps / (lambda_- (2 M ||b|| + 2 r_-)), with margin for noise.
M1SearchResult select_M1(ModelParams params, double kappa_minus,
                         double kappa_plus, std::uint64_t seed,
                         long n_replicas = 4000, bool parallel = true);

struct SuiteReport {
    std::string check_id;
    std::string claim;      // rendered inequality
    double estimate = 0.0;
    double threshold = 0.0;
    double margin = 0.0;    // signed slack towards the pass side
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::string verdict;    // "pass", "fail" or "diagnostic"
    std::string config_hash;
    std::uint64_t seed = 0;

    bool operator==(const SuiteReport&) const = default;
};

struct DriftTableRow {
    double y_radius = 0.0;
    int m = 0;
    double estimate = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long n = 0;
    std::string verdict;

    bool operator==(const DriftTableRow&) const = default;
};

struct SuiteOutput {
    std::vector<SuiteReport> reports;
    std::vector<DriftTableRow> drift_rows;

    bool operator==(const SuiteOutput&) const = default;
};

std::vector<std::string> suite_names();

// Runs one named suite. Fails fast (ConditionGateError) when the condition
// tier the suite needs does not hold for the configured model.
SuiteOutput run_suite(const std::string& suite_id, const RunConfig& cfg);

struct ConditionGateError : std::runtime_error {
    explicit ConditionGateError(const std::string& what)
        : std::runtime_error(what) {}
};

}  // namespace switchdiff
