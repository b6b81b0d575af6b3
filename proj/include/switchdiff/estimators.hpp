#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "switchdiff/engine.hpp"
#include "switchdiff/model.hpp"
#include "switchdiff/rng.hpp"

namespace switchdiff {

struct MomentEstimate {
    double mean = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long n = 0;
    double censored_fraction = 0.0;
    std::string method = "normal";
};

struct GrowthFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double exponent_se = 0.0;
    double r2 = 0.0;
    std::vector<double> radii;
};

// Everything an estimator needs to run an ensemble. Replica i of block b
// always draws from stream_of(b, i), so the result is a pure function of
// (seed, block) regardless of thread count.
struct EstimatorContext {
    ModelParams params;
    DriftSpec spec;
    EngineConfig cfg;
    std::uint64_t master_seed = 0;
    bool parallel = true;
    double confidence = 0.99;
};

// Indexed-buffer ensemble map. Each replica writes its own slot; the
// reduction order downstream is fixed, so the parallel and serial paths
// produce bit-identical results.
template <class R, class F>
std::vector<R> map_replicas(long n, std::uint64_t master_seed,
                            std::uint64_t block, bool parallel, F&& f) {
    std::vector<R> out(static_cast<std::size_t>(n));
    bool aborted = false;
    std::string abort_msg;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
#endif
    for (long i = 0; i < n; ++i) {
        try {
            Rng rng(master_seed, stream_of(block, static_cast<std::uint64_t>(i)));
            out[static_cast<std::size_t>(i)] = f(i, rng);
        } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
            {
                aborted = true;
                abort_msg = e.what();
            }
        }
    }
    if (aborted) throw PathAbort("replica aborted: " + abort_msg);
    return out;
}

double normal_quantile(double p);

// Normal-approximation summary of an i.i.d. sample.
MomentEstimate summarize(std::span<const double> values, double confidence,
                         double censored_fraction = 0.0);

// Percentile bootstrap of the mean; used for heavy-ish tails (tau^2).
MomentEstimate summarize_bootstrap(std::span<const double> values,
                                   double confidence, std::uint64_t seed,
                                   double censored_fraction = 0.0,
                                   int n_resamples = 400);

// Weighted least squares y ~ basis coefficients; basis is row-major with
// n_coef entries per observation. Returns coefficients, their standard
// errors and R^2.
struct WlsFit {
    std::vector<double> coef;
    std::vector<double> coef_se;
    double r2 = 0.0;
};
WlsFit fit_wls(std::span<const double> basis, int n_coef,
               std::span<const double> y, std::span<const double> weights);

// --- estimator operations ------------------------------------------------

// Plain Monte Carlo mean of |X_t|^power, power in {2,4,6}.
MomentEstimate moment_at_time(const EstimatorContext& ctx,
                              const std::vector<double>& x, int z, double t,
                              int power, long n_replicas, std::uint64_t block);

// E[|X_T|^p - |x|^p] over one exponential holding interval of the regime.
MomentEstimate interval_moment_change(const EstimatorContext& ctx,
                                      const std::vector<double>& x, int regime,
                                      int power, long n_replicas,
                                      std::uint64_t block);

enum class OccupationUpTo { T1, T2, T0 };

// E of the running-minimum occupation functional near the M-ball up to the
// designated jump time.
MomentEstimate occupation_near_ball(const EstimatorContext& ctx,
                                    const std::vector<double>& x, int z,
                                    OccupationUpTo upto, long n_replicas,
                                    std::uint64_t block);

struct HittingMoments {
    MomentEstimate tau, tau_sq, tau_m1, tau_m1_sq;
    MomentEstimate cycles, cycles_sq;  // the embedded counter N and N^2
    double censored_fraction = 0.0;
    bool second_moment_unreliable = false;  // censoring > 0.1%
};

// One ensemble of run_to_tau per starting point; censored samples enter as
// lower bounds and are reported, never imputed.
HittingMoments hitting_moments(const EstimatorContext& ctx,
                               const std::vector<double>& x, int z,
                               long n_replicas, std::uint64_t block);

// Weighted log-log slope of estimate means against radii.
GrowthFit growth_exponent(const std::vector<MomentEstimate>& values,
                          const std::vector<double>& radii);

struct TvDecayResult {
    std::vector<double> t_grid;
    std::vector<double> tv;        // empirical TV to the reference ensemble
    double undercoverage = 0.0;    // worst overflow-bin mass
    double decay_slope = 0.0;      // log TV vs log(1+t), one-sided diagnostic
    bool monotone_within_noise = false;
};

// Histogram TV distance between the time-t marginals of (|X|, Z) and the
// reference-time ensemble.
TvDecayResult tv_decay(const EstimatorContext& ctx, const std::vector<double>& x,
                       int z, const std::vector<double>& t_grid,
                       double reference_time, long n_replicas, int bins,
                       std::uint64_t block);

inline std::vector<double> radial_point(int d, double radius) {
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    x[0] = radius;
    return x;
}

}  // namespace switchdiff
