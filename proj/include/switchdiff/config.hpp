#pragma once

#include <string>
#include <vector>

#include "switchdiff/engine.hpp"
#include "switchdiff/model.hpp"

namespace switchdiff {

// Thrown for parse errors, schema violations and invariant violations; the
// message carries the offending key path.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct EstimationConfig {
    long replicas = 4000;        // default per-check ensemble size
    long replicas_tau = 1500;    // stopping-time ensembles (long paths)
    long replicas_clock = 1000000;  // pure clock checks (no SDE steps)
    double confidence = 0.99;
    std::vector<double> drift_radius_factors = {2.0, 5.0, 10.0};  // x M1
    std::vector<double> tau_radius_factors = {2.0, 4.0, 8.0};     // x M1
    std::vector<double> coef_radius_factors = {1.5, 2.0, 3.0, 4.0};  // x M1
    std::vector<double> t_grid = {1.0, 2.0, 4.0, 8.0, 16.0};
    double reference_time = 40.0;
    int bins = 64;
    double exp_tol_quadratic = 0.3;  // slack on the quadratic growth exponent
    double exp_tol_sixth = 0.5;      // slack on the sixth-power exponent
    double coef_tolerance = 0.15;    // relative slack on fitted coefficients
};

struct RunConfig {
    int schema_version = 1;
    std::string preset;  // empty for fully custom models
    ModelParams params;  // resolved, including M1
    double kappa_minus = 1.0;
    double kappa_plus = 1.0;
    EngineConfig engine;
    EstimationConfig estimation;
    std::vector<std::string> suites;
    std::string output_dir = "out";
    int workers = 1;
    std::uint64_t seed = 1;

    DriftSpec make_drift() const { return canonical_model(params, kappa_minus, kappa_plus); }
};

// Strict loader: unknown keys rejected with their path, defaults filled,
// invariants checked. The model section either names a preset or spells out
// a custom canonical-family model.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

// Canonical serialization (sorted keys); hash of these bytes identifies the
// run configuration in every report.
std::string serialize_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace switchdiff
