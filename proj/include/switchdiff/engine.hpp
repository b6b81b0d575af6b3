#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "switchdiff/model.hpp"
#include "switchdiff/rng.hpp"

namespace switchdiff {

struct EngineConfig {
    double dt = 0.0;            // 0 -> default 1e-3 * min(1/lambda_-, 1/lambda_+)
    double horizon = 1e5;       // maximum simulated time before censoring
    double overflow_radius = 1e9;

    double effective_dt(const ModelParams& p) const {
        if (dt > 0.0) return dt;
        return 1e-3 * std::min(1.0 / p.lambda_minus, 1.0 / p.lambda_plus);
    }

    void validate() const {
        if (dt < 0.0) throw std::invalid_argument("EngineConfig: dt must be > 0");
        if (!(horizon > 0.0))
            throw std::invalid_argument("EngineConfig: horizon must be > 0");
        if (dt > horizon)
            throw std::invalid_argument("EngineConfig: dt must not exceed horizon");
    }
};

// Thrown when a path overflows or turns non-finite; counted separately from
// horizon censoring.
struct PathAbort : std::runtime_error {
    explicit PathAbort(const std::string& what) : std::runtime_error(what) {}
};

// One recorded trajectory (optional; the estimators work on summaries).
struct Path {
    std::vector<double> times;
    std::vector<double> states;   // row-major, d entries per sample time
    std::vector<int> regimes;     // cadlag: value on [T_n, T_{n+1})
    std::vector<double> jump_times;
    int d = 1;
    bool censored = false;
};

struct CycleRecord {
    std::vector<double> y_start, y_mid, y_end;  // X at T_2k, T_2k+1, T_2k+2
    double dur_minus = 0.0, dur_plus = 0.0;
    bool stopped = false;  // |y_start| <= M1: the embedded stopping fired
};

struct TauRun {
    double tau = 0.0;        // continuous time of the embedded stop T_2N
    long cycles = 0;         // N, completed cycles
    double t0 = 0.0;         // initial segment to the first entry of regime 0
    double tau_m1 = 0.0;     // first grid time with |X| <= M1 on the same path
    bool tau_m1_hit = false;
    std::vector<double> eta;  // per-cycle durations T_{2i+2} - T_{2i}
    std::vector<double> x_final;
    bool censored = false;
};

// Exponential holding time of the given regime; rate lambda_- in regime 0,
// lambda_+ in regime 1, independent of the Wiener increments.
double sample_holding_time(int regime, const ModelParams& p, Rng& rng);

// Euler-Maruyama over [0, duration] with the last partial step shortened to
// land exactly on the jump time. x is updated in place; returns the first
// grid time (relative to segment start) with |x| <= M, or -1 if the M-ball
// is never touched. record, when non-null, appends every grid point.
double integrate_between_jumps(std::vector<double>& x, int regime,
                               double duration, const ModelParams& p,
                               const DriftSpec& spec, const EngineConfig& cfg,
                               Rng& rng, Path* record = nullptr,
                               double t_offset = 0.0);

// One embedded-chain cycle from an even jump time in regime 0: a regime-0
// holding followed by a regime-1 holding. Entry states inside the M1-ball
// stop immediately with no simulation.
CycleRecord simulate_cycle(const std::vector<double>& y, const ModelParams& p,
                           const DriftSpec& spec, const EngineConfig& cfg,
                           Rng& rng);

// Runs (X, Z) from (x, z) until the embedded stop tau = T_2N, tracking the
// continuous first entry to the M1-ball on the same trajectory.
TauRun run_to_tau(const std::vector<double>& x, int z, const ModelParams& p,
                  const DriftSpec& spec, const EngineConfig& cfg, Rng& rng);

// First grid time with |X_t| <= radius (grid-crossing approximation).
// Returns nullopt when the horizon is exhausted first.
std::optional<double> hitting_time_continuous(const std::vector<double>& x,
                                              int z, const ModelParams& p,
                                              const DriftSpec& spec,
                                              const EngineConfig& cfg, Rng& rng,
                                              double radius);

// Simulates the full switching pair to time t and returns X_t.
std::vector<double> state_at_time(const std::vector<double>& x, int z, double t,
                                  const ModelParams& p, const DriftSpec& spec,
                                  const EngineConfig& cfg, Rng& rng);

// Records a full trajectory over [0, t_max] with its jump times.
Path simulate_path(const std::vector<double>& x, int z, double t_max,
                   const ModelParams& p, const DriftSpec& spec,
                   const EngineConfig& cfg, Rng& rng);

// Columnar text dump: header then one row per sample time.
void write_path(std::ostream& os, const Path& path);

inline double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

}  // namespace switchdiff
