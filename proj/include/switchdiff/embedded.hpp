#pragma once

#include "switchdiff/estimators.hpp"

namespace switchdiff {

// Mean cycle duration and the compensator slope of the centered cycle sums.
// c2 equals the raw second moment of a cycle duration, which is what the
// quadratic-variation compensator of S_n grows by per cycle.
struct MartingaleConstants {
    double c1 = 0.0;  // 1/lambda_- + 1/lambda_+
    double c2 = 0.0;  // 2 (1/lambda_-^2 + 1/(lambda_- lambda_+) + 1/lambda_+^2)
};

MartingaleConstants martingale_constants(const ModelParams& p);

// Variance of one cycle duration (two independent exponentials).
double cycle_duration_variance(const ModelParams& p);

// The per-cycle second-moment decrease constant from the embedded-chain
// drift bound: c = (1/lambda_-)((2r_- - d) - eps) - (1/lambda_+)((2r_+ + d) + eps).
double lemma_drift_constant(const ModelParams& p, double epsilon);

struct TauDecomposition {
    double t0 = 0.0;
    long cycles = 0;
    double martingale = 0.0;  // S_N = sum (eta_i - c1)
};

// tau = T0 + c1 N + S_N, exact per sample up to roundoff.
TauDecomposition decompose_tau(const TauRun& run, const MartingaleConstants& c);

// Monte Carlo estimate of E[|Y_1|^{2m} | Y_0 = y] - |y|^{2m} by a restart
// ensemble of single cycles; m in {1,2,3}. Exactly zero inside the M1-ball.
MomentEstimate conditional_moment_drift(const EstimatorContext& ctx,
                                        const std::vector<double>& y, int m,
                                        long n_replicas, std::uint64_t block);

struct CycleCountMoments {
    MomentEstimate n;       // E N
    MomentEstimate n_sq;    // E N^2
    double censored_fraction = 0.0;
};

CycleCountMoments estimate_EN(const EstimatorContext& ctx,
                              const std::vector<double>& x, int z,
                              long n_replicas, std::uint64_t block);

}  // namespace switchdiff
