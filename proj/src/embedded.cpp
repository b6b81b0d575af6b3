#include "switchdiff/embedded.hpp"

#include <cmath>

namespace switchdiff {

MartingaleConstants martingale_constants(const ModelParams& p) {
    p.validate();
    const double a = 1.0 / p.lambda_minus, b = 1.0 / p.lambda_plus;
    MartingaleConstants c;
    c.c1 = a + b;
    c.c2 = 2.0 * (a * a + a * b + b * b);
    // Arithmetic guard against transcription slips: c2 - c1^2 = a^2 + b^2.
    if (!(c.c2 >= c.c1 * c.c1 / 2.0))
        throw std::logic_error("martingale_constants: c2 >= c1^2/2 violated");
    return c;
}

double cycle_duration_variance(const ModelParams& p) {
    const double a = 1.0 / p.lambda_minus, b = 1.0 / p.lambda_plus;
    return a * a + b * b;
}

double lemma_drift_constant(const ModelParams& p, double epsilon) {
    const double d = static_cast<double>(p.d);
    return (1.0 / p.lambda_minus) * ((2.0 * p.r_minus - d) - epsilon) -
           (1.0 / p.lambda_plus) * ((2.0 * p.r_plus + d) + epsilon);
}

TauDecomposition decompose_tau(const TauRun& run, const MartingaleConstants& c) {
    if (run.censored)
        throw std::invalid_argument("decompose_tau: censored run rejected");
    TauDecomposition dec;
    dec.t0 = run.t0;
    dec.cycles = run.cycles;
    for (double eta : run.eta) dec.martingale += eta - c.c1;
    return dec;
}

MomentEstimate conditional_moment_drift(const EstimatorContext& ctx,
                                        const std::vector<double>& y, int m,
                                        long n_replicas, std::uint64_t block) {
    if (m < 1 || m > 3)
        throw std::invalid_argument("conditional_moment_drift: m must be 1, 2 or 3");
    if (n_replicas < 100)
        throw std::invalid_argument(
            "conditional_moment_drift: fewer than 100 replicas");

    const double r2 = norm2(y);
    if (r2 <= ctx.params.M1 * ctx.params.M1) {
        MomentEstimate est;  // the cycle stops at its start
        est.n = n_replicas;
        est.method = "exact";
        return est;
    }

    auto pw = [m](double v2) {
        return m == 1 ? v2 : (m == 2 ? v2 * v2 : v2 * v2 * v2);
    };
    const double base = pw(r2);
    auto values = map_replicas<double>(
        n_replicas, ctx.master_seed, block, ctx.parallel,
        [&](long, Rng& rng) {
            const CycleRecord rec =
                simulate_cycle(y, ctx.params, ctx.spec, ctx.cfg, rng);
            return pw(norm2(rec.y_end)) - base;
        });
    return summarize(values, ctx.confidence);
}

CycleCountMoments estimate_EN(const EstimatorContext& ctx,
                              const std::vector<double>& x, int z,
                              long n_replicas, std::uint64_t block) {
    if (n_replicas < 100)
        throw std::invalid_argument("estimate_EN: fewer than 100 replicas");
    struct Sample {
        double n = 0.0;
        bool censored = false;
    };
    auto samples = map_replicas<Sample>(
        n_replicas, ctx.master_seed, block, ctx.parallel,
        [&](long, Rng& rng) {
            const TauRun run =
                run_to_tau(x, z, ctx.params, ctx.spec, ctx.cfg, rng);
            return Sample{static_cast<double>(run.cycles), run.censored};
        });
    std::vector<double> n1(samples.size()), n2(samples.size());
    long censored = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        n1[i] = samples[i].n;
        n2[i] = samples[i].n * samples[i].n;
        if (samples[i].censored) ++censored;
    }
    CycleCountMoments res;
    res.censored_fraction =
        static_cast<double>(censored) / static_cast<double>(n_replicas);
    res.n = summarize(n1, ctx.confidence, res.censored_fraction);
    res.n_sq = summarize(n2, ctx.confidence, res.censored_fraction);
    return res;
}

}  // namespace switchdiff
