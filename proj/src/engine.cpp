#include "switchdiff/engine.hpp"

#include <cmath>

namespace switchdiff {

double sample_holding_time(int regime, const ModelParams& p, Rng& rng) {
    return rng.exponential(regime == 0 ? p.lambda_minus : p.lambda_plus);
}

namespace {

void record_point(Path* record, double t, const std::vector<double>& x,
                  int regime) {
    if (!record) return;
    record->times.push_back(t);
    record->states.insert(record->states.end(), x.begin(), x.end());
    record->regimes.push_back(regime);
}

}  // namespace

double integrate_between_jumps(std::vector<double>& x, int regime,
                               double duration, const ModelParams& p,
                               const DriftSpec& spec, const EngineConfig& cfg,
                               Rng& rng, Path* record, double t_offset) {
    if (!(duration > 0.0))
        throw std::invalid_argument("integrate_between_jumps: duration must be > 0");

    const double dt = cfg.effective_dt(p);
    const int d = p.d;
    std::vector<double> b(d);

    double first_hit_m = -1.0;  // first grid time with |x| <= M, relative to t_offset
    double t = 0.0;
    if (norm2(x) <= p.M * p.M) first_hit_m = 0.0;
    record_point(record, t_offset, x, regime);

    while (t < duration) {
        const double h = std::min(dt, duration - t);
        const double sqrt_h = std::sqrt(h);
        spec.eval(regime, x, b);
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) {
            x[i] += b[i] * h + sqrt_h * rng.gaussian();
            r2 += x[i] * x[i];
        }
        t += h;
        if (!std::isfinite(r2) || r2 > cfg.overflow_radius * cfg.overflow_radius)
            throw PathAbort("state overflow at t=" + std::to_string(t_offset + t));
        if (first_hit_m < 0.0 && r2 <= p.M * p.M) first_hit_m = t;
        record_point(record, t_offset + t, x, regime);
    }
    return first_hit_m;
}

CycleRecord simulate_cycle(const std::vector<double>& y, const ModelParams& p,
                           const DriftSpec& spec, const EngineConfig& cfg,
                           Rng& rng) {
    CycleRecord rec;
    rec.y_start = y;
    if (norm2(y) <= p.M1 * p.M1) {
        rec.stopped = true;
        return rec;
    }
    std::vector<double> x = y;
    rec.dur_minus = sample_holding_time(0, p, rng);
    integrate_between_jumps(x, 0, rec.dur_minus, p, spec, cfg, rng);
    rec.y_mid = x;
    // The chain never stops at odd jump times: the regime-1 leg always runs.
    rec.dur_plus = sample_holding_time(1, p, rng);
    integrate_between_jumps(x, 1, rec.dur_plus, p, spec, cfg, rng);
    rec.y_end = x;
    return rec;
}

TauRun run_to_tau(const std::vector<double>& x0, int z, const ModelParams& p,
                  const DriftSpec& spec, const EngineConfig& cfg, Rng& rng) {
    cfg.validate();
    TauRun run;
    std::vector<double> x = x0;
    const double M1_2 = p.M1 * p.M1;
    double t = 0.0;

    auto probe_segment = [&](int regime, double duration) {
        // Track the first grid time inside the M1-ball along the way.
        const double dt = cfg.effective_dt(p);
        const int d = p.d;
        std::vector<double> b(d);
        double s = 0.0;
        if (!run.tau_m1_hit && norm2(x) <= M1_2) {
            run.tau_m1 = t;
            run.tau_m1_hit = true;
        }
        while (s < duration) {
            const double h = std::min(dt, duration - s);
            const double sqrt_h = std::sqrt(h);
            spec.eval(regime, x, b);
            double r2 = 0.0;
            for (int i = 0; i < d; ++i) {
                x[i] += b[i] * h + sqrt_h * rng.gaussian();
                r2 += x[i] * x[i];
            }
            s += h;
            if (!std::isfinite(r2) ||
                r2 > cfg.overflow_radius * cfg.overflow_radius)
                throw PathAbort("state overflow at t=" + std::to_string(t + s));
            if (!run.tau_m1_hit && r2 <= M1_2) {
                run.tau_m1 = t + s;
                run.tau_m1_hit = true;
            }
        }
        t += duration;
    };

    if (z == 1) {
        // T_0 = first entry to regime 0.
        const double t0 = sample_holding_time(1, p, rng);
        if (t + t0 > cfg.horizon) {
            probe_segment(1, cfg.horizon - t);
            run.censored = true;
            run.x_final = x;
            return run;
        }
        probe_segment(1, t0);
        run.t0 = t0;
    }

    while (true) {
        if (norm2(x) <= M1_2) {
            run.tau = t;
            if (!run.tau_m1_hit) {  // the embedded stop is also a grid point
                run.tau_m1 = t;
                run.tau_m1_hit = true;
            }
            run.x_final = x;
            return run;
        }
        const double dm = sample_holding_time(0, p, rng);
        const double dp = sample_holding_time(1, p, rng);
        if (t + dm + dp > cfg.horizon) {
            probe_segment(0, std::min(dm, cfg.horizon - t));
            if (t < cfg.horizon) probe_segment(1, cfg.horizon - t);
            run.censored = true;
            run.x_final = x;
            return run;
        }
        probe_segment(0, dm);
        probe_segment(1, dp);
        run.eta.push_back(dm + dp);
        ++run.cycles;
    }
}

std::optional<double> hitting_time_continuous(const std::vector<double>& x0,
                                              int z, const ModelParams& p,
                                              const DriftSpec& spec,
                                              const EngineConfig& cfg, Rng& rng,
                                              double radius) {
    if (!(radius > 0.0))
        throw std::invalid_argument("hitting_time_continuous: radius must be > 0");
    cfg.validate();
    if (norm2(x0) <= radius * radius) return 0.0;

    std::vector<double> x = x0;
    std::vector<double> b(p.d);
    const double dt = cfg.effective_dt(p);
    const double r2_target = radius * radius;
    double t = 0.0;
    int regime = z;
    double until_jump = sample_holding_time(regime, p, rng);

    while (t < cfg.horizon) {
        const double h = std::min({dt, until_jump, cfg.horizon - t});
        const double sqrt_h = std::sqrt(h);
        spec.eval(regime, x, b);
        double r2 = 0.0;
        for (int i = 0; i < p.d; ++i) {
            x[i] += b[i] * h + sqrt_h * rng.gaussian();
            r2 += x[i] * x[i];
        }
        t += h;
        until_jump -= h;
        if (!std::isfinite(r2) || r2 > cfg.overflow_radius * cfg.overflow_radius)
            throw PathAbort("state overflow at t=" + std::to_string(t));
        if (r2 <= r2_target) return t;
        if (until_jump <= 0.0) {
            regime = 1 - regime;
            until_jump = sample_holding_time(regime, p, rng);
        }
    }
    return std::nullopt;
}

std::vector<double> state_at_time(const std::vector<double>& x0, int z, double t,
                                  const ModelParams& p, const DriftSpec& spec,
                                  const EngineConfig& cfg, Rng& rng) {
    std::vector<double> x = x0;
    double remaining = t;
    int regime = z;
    while (remaining > 0.0) {
        const double hold = sample_holding_time(regime, p, rng);
        const double seg = std::min(hold, remaining);
        integrate_between_jumps(x, regime, seg, p, spec, cfg, rng);
        remaining -= seg;
        regime = 1 - regime;
    }
    return x;
}

Path simulate_path(const std::vector<double>& x0, int z, double t_max,
                   const ModelParams& p, const DriftSpec& spec,
                   const EngineConfig& cfg, Rng& rng) {
    Path path;
    path.d = p.d;
    std::vector<double> x = x0;
    double t = 0.0;
    int regime = z;
    while (t < t_max) {
        const double hold = sample_holding_time(regime, p, rng);
        const double seg = std::min(hold, t_max - t);
        integrate_between_jumps(x, regime, seg, p, spec, cfg, rng, &path, t);
        t += seg;
        if (seg < hold) break;  // horizon reached mid-holding
        path.jump_times.push_back(t);
        regime = 1 - regime;
    }
    return path;
}

void write_path(std::ostream& os, const Path& path) {
    os << "time";
    for (int i = 0; i < path.d; ++i) os << " x" << i;
    os << " regime\n";
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        os << path.times[k];
        for (int i = 0; i < path.d; ++i)
            os << ' ' << path.states[k * path.d + i];
        os << ' ' << path.regimes[k] << '\n';
    }
}

}  // namespace switchdiff
