#include "switchdiff/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace switchdiff {

namespace {

void check_replica_floor(long n) {
    if (n < 100)
        throw std::invalid_argument(
            "estimator: fewer than 100 replicas, confidence interval meaningless");
}

void check_power(int power) {
    if (power != 2 && power != 4 && power != 6)
        throw std::invalid_argument("estimator: power must be one of {2,4,6}");
}

double pow_even(double r2, int power) {
    switch (power) {
        case 2: return r2;
        case 4: return r2 * r2;
        default: return r2 * r2 * r2;
    }
}

}  // namespace

// Acklam's rational approximation to the standard normal quantile.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    if (p > phigh) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

MomentEstimate summarize(std::span<const double> values, double confidence,
                         double censored_fraction) {
    MomentEstimate est;
    est.n = static_cast<long>(values.size());
    est.censored_fraction = censored_fraction;
    if (est.n == 0) return est;
    double sum = 0.0;
    for (double v : values) sum += v;
    est.mean = sum / static_cast<double>(est.n);
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    const double var = est.n > 1 ? ss / static_cast<double>(est.n - 1) : 0.0;
    est.se = std::sqrt(var / static_cast<double>(est.n));
    const double z = normal_quantile(0.5 + confidence / 2.0);
    est.ci_lo = est.mean - z * est.se;
    est.ci_hi = est.mean + z * est.se;
    est.method = "normal";
    return est;
}

MomentEstimate summarize_bootstrap(std::span<const double> values,
                                   double confidence, std::uint64_t seed,
                                   double censored_fraction, int n_resamples) {
    MomentEstimate est = summarize(values, confidence, censored_fraction);
    if (values.size() < 2) return est;
    Rng rng(seed, 0x626f6f74ULL);
    const std::size_t n = values.size();
    std::vector<double> means(static_cast<std::size_t>(n_resamples));
    for (int b = 0; b < n_resamples; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += values[static_cast<std::size_t>(rng.next_u64() % n)];
        means[static_cast<std::size_t>(b)] = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double alpha = (1.0 - confidence) / 2.0;
    auto pick = [&](double p) {
        const double idx = p * static_cast<double>(n_resamples - 1);
        return means[static_cast<std::size_t>(std::llround(idx))];
    };
    est.ci_lo = pick(alpha);
    est.ci_hi = pick(1.0 - alpha);
    est.method = "bootstrap";
    return est;
}

WlsFit fit_wls(std::span<const double> basis, int n_coef,
               std::span<const double> y, std::span<const double> weights) {
    const std::size_t n = y.size();
    if (basis.size() != n * static_cast<std::size_t>(n_coef) ||
        weights.size() != n || n < static_cast<std::size_t>(n_coef))
        throw std::invalid_argument("fit_wls: inconsistent dimensions");

    const int k = n_coef;
    std::vector<double> A(static_cast<std::size_t>(k * k), 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights[i];
        const double* row = &basis[i * static_cast<std::size_t>(k)];
        for (int a = 0; a < k; ++a) {
            rhs[static_cast<std::size_t>(a)] += w * row[a] * y[i];
            for (int b = 0; b < k; ++b)
                A[static_cast<std::size_t>(a * k + b)] += w * row[a] * row[b];
        }
    }

    // Invert A (tiny, <= 4x4) by Gauss-Jordan with partial pivoting.
    std::vector<double> inv(static_cast<std::size_t>(k * k), 0.0);
    for (int i = 0; i < k; ++i) inv[static_cast<std::size_t>(i * k + i)] = 1.0;
    std::vector<double> m = A;
    for (int col = 0; col < k; ++col) {
        int piv = col;
        for (int r = col + 1; r < k; ++r)
            if (std::abs(m[static_cast<std::size_t>(r * k + col)]) >
                std::abs(m[static_cast<std::size_t>(piv * k + col)]))
                piv = r;
        if (std::abs(m[static_cast<std::size_t>(piv * k + col)]) < 1e-300)
            throw std::invalid_argument("fit_wls: singular normal equations");
        if (piv != col)
            for (int c = 0; c < k; ++c) {
                std::swap(m[static_cast<std::size_t>(col * k + c)],
                          m[static_cast<std::size_t>(piv * k + c)]);
                std::swap(inv[static_cast<std::size_t>(col * k + c)],
                          inv[static_cast<std::size_t>(piv * k + c)]);
            }
        const double diag = m[static_cast<std::size_t>(col * k + col)];
        for (int c = 0; c < k; ++c) {
            m[static_cast<std::size_t>(col * k + c)] /= diag;
            inv[static_cast<std::size_t>(col * k + c)] /= diag;
        }
        for (int r = 0; r < k; ++r) {
            if (r == col) continue;
            const double f = m[static_cast<std::size_t>(r * k + col)];
            if (f == 0.0) continue;
            for (int c = 0; c < k; ++c) {
                m[static_cast<std::size_t>(r * k + c)] -=
                    f * m[static_cast<std::size_t>(col * k + c)];
                inv[static_cast<std::size_t>(r * k + c)] -=
                    f * inv[static_cast<std::size_t>(col * k + c)];
            }
        }
    }

    WlsFit fit;
    fit.coef.assign(static_cast<std::size_t>(k), 0.0);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
            fit.coef[static_cast<std::size_t>(a)] +=
                inv[static_cast<std::size_t>(a * k + b)] *
                rhs[static_cast<std::size_t>(b)];
    fit.coef_se.assign(static_cast<std::size_t>(k), 0.0);
    for (int a = 0; a < k; ++a)
        fit.coef_se[static_cast<std::size_t>(a)] =
            std::sqrt(std::max(0.0, inv[static_cast<std::size_t>(a * k + a)]));

    double wsum = 0.0, wy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        wsum += weights[i];
        wy += weights[i] * y[i];
    }
    const double ybar = wy / wsum;
    double rss = 0.0, tss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = 0.0;
        const double* row = &basis[i * static_cast<std::size_t>(k)];
        for (int a = 0; a < k; ++a) pred += row[a] * fit.coef[static_cast<std::size_t>(a)];
        rss += weights[i] * (y[i] - pred) * (y[i] - pred);
        tss += weights[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;
    return fit;
}

MomentEstimate moment_at_time(const EstimatorContext& ctx,
                              const std::vector<double>& x, int z, double t,
                              int power, long n_replicas, std::uint64_t block) {
    check_power(power);
    check_replica_floor(n_replicas);
    if (t > ctx.cfg.horizon)
        throw std::invalid_argument("moment_at_time: t exceeds the horizon");
    if (t == 0.0) {
        MomentEstimate est;
        est.mean = pow_even(norm2(x), power);
        est.ci_lo = est.ci_hi = est.mean;
        est.n = n_replicas;
        est.method = "exact";
        return est;
    }
    auto values = map_replicas<double>(
        n_replicas, ctx.master_seed, block, ctx.parallel,
        [&](long, Rng& rng) {
            auto xt = state_at_time(x, z, t, ctx.params, ctx.spec, ctx.cfg, rng);
            return pow_even(norm2(xt), power);
        });
    return summarize(values, ctx.confidence);
}

MomentEstimate interval_moment_change(const EstimatorContext& ctx,
                                      const std::vector<double>& x, int regime,
                                      int power, long n_replicas,
                                      std::uint64_t block) {
    check_power(power);
    check_replica_floor(n_replicas);
    const double base = pow_even(norm2(x), power);
    auto values = map_replicas<double>(
        n_replicas, ctx.master_seed, block, ctx.parallel,
        [&](long, Rng& rng) {
            std::vector<double> xs = x;
            const double dur = sample_holding_time(regime, ctx.params, rng);
            integrate_between_jumps(xs, regime, dur, ctx.params, ctx.spec,
                                    ctx.cfg, rng);
            return pow_even(norm2(xs), power) - base;
        });
    return summarize(values, ctx.confidence);
}

MomentEstimate occupation_near_ball(const EstimatorContext& ctx,
                                    const std::vector<double>& x, int z,
                                    OccupationUpTo upto, long n_replicas,
                                    std::uint64_t block) {
    check_replica_floor(n_replicas);
    // Lemma cases: from regime 0 the windows end at T1 or T2, from regime 1
    // at T0 or T1.
    std::vector<int> legs;
    if (z == 0) {
        if (upto == OccupationUpTo::T1) legs = {0};
        else if (upto == OccupationUpTo::T2) legs = {0, 1};
        else throw std::invalid_argument("occupation_near_ball: z=0 requires T1 or T2");
    } else {
        if (upto == OccupationUpTo::T0) legs = {1};
        else if (upto == OccupationUpTo::T1) legs = {1, 0};
        else throw std::invalid_argument("occupation_near_ball: z=1 requires T0 or T1");
    }
    auto values = map_replicas<double>(
        n_replicas, ctx.master_seed, block, ctx.parallel,
        [&](long, Rng& rng) {
            std::vector<double> xs = x;
            double occupation = 0.0;
            bool hit = false;
            for (int regime : legs) {
                const double dur = sample_holding_time(regime, ctx.params, rng);
                if (hit) {
                    // Running minimum already inside: whole leg counts.
                    integrate_between_jumps(xs, regime, dur, ctx.params,
                                            ctx.spec, ctx.cfg, rng);
                    occupation += dur;
                } else {
                    const double t_hit = integrate_between_jumps(
                        xs, regime, dur, ctx.params, ctx.spec, ctx.cfg, rng);
                    if (t_hit >= 0.0) {
                        hit = true;
                        occupation += dur - t_hit;
                    }
                }
            }
            return occupation;
        });
    return summarize(values, ctx.confidence);
}

HittingMoments hitting_moments(const EstimatorContext& ctx,
                               const std::vector<double>& x, int z,
                               long n_replicas, std::uint64_t block) {
    check_replica_floor(n_replicas);
    struct Sample {
        double tau = 0.0, tm1 = 0.0, n = 0.0;
        bool censored = false;
    };
    auto samples = map_replicas<Sample>(
        n_replicas, ctx.master_seed, block, ctx.parallel,
        [&](long, Rng& rng) {
            const TauRun run =
                run_to_tau(x, z, ctx.params, ctx.spec, ctx.cfg, rng);
            Sample s;
            s.censored = run.censored;
            // Censored runs contribute the horizon as a lower bound.
            s.tau = run.censored ? ctx.cfg.horizon : run.tau;
            s.tm1 = run.tau_m1_hit ? run.tau_m1 : ctx.cfg.horizon;
            s.n = static_cast<double>(run.cycles);
            return s;
        });

    std::vector<double> tau(samples.size()), tau2(samples.size()),
        tm1(samples.size()), tm12(samples.size()), nn(samples.size()),
        nn2(samples.size());
    long censored = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        tau[i] = samples[i].tau;
        tau2[i] = samples[i].tau * samples[i].tau;
        tm1[i] = samples[i].tm1;
        tm12[i] = samples[i].tm1 * samples[i].tm1;
        nn[i] = samples[i].n;
        nn2[i] = samples[i].n * samples[i].n;
        if (samples[i].censored) ++censored;
    }
    const double cf =
        static_cast<double>(censored) / static_cast<double>(n_replicas);

    HittingMoments hm;
    hm.censored_fraction = cf;
    hm.second_moment_unreliable = cf > 1e-3;
    hm.tau = summarize(tau, ctx.confidence, cf);
    hm.tau_m1 = summarize(tm1, ctx.confidence, cf);
    hm.cycles = summarize(nn, ctx.confidence, cf);
    hm.cycles_sq = summarize(nn2, ctx.confidence, cf);
    hm.tau_sq = summarize_bootstrap(tau2, ctx.confidence,
                                    ctx.master_seed ^ block, cf);
    hm.tau_m1_sq = summarize_bootstrap(tm12, ctx.confidence,
                                       ctx.master_seed ^ (block + 1), cf);
    return hm;
}

GrowthFit growth_exponent(const std::vector<MomentEstimate>& values,
                          const std::vector<double>& radii) {
    if (radii.size() < 3 || values.size() != radii.size())
        throw std::invalid_argument("growth_exponent: need >= 3 radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1]))
            throw std::invalid_argument("growth_exponent: radii must increase");

    const std::size_t n = radii.size();
    std::vector<double> basis(2 * n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(values[i].mean > 0.0))
            throw std::invalid_argument("growth_exponent: non-positive mean");
        basis[2 * i] = 1.0;
        basis[2 * i + 1] = std::log(radii[i]);
        y[i] = std::log(values[i].mean);
        const double rel = values[i].se / values[i].mean;  // sd of log mean
        w[i] = rel > 0.0 ? 1.0 / (rel * rel) : 1e12;
    }
    const WlsFit fit = fit_wls(basis, 2, y, w);

    GrowthFit gf;
    gf.intercept = fit.coef[0];
    gf.exponent = fit.coef[1];
    gf.exponent_se = fit.coef_se[1];
    gf.r2 = fit.r2;
    gf.radii = radii;
    return gf;
}

TvDecayResult tv_decay(const EstimatorContext& ctx, const std::vector<double>& x,
                       int z, const std::vector<double>& t_grid,
                       double reference_time, long n_replicas, int bins,
                       std::uint64_t block) {
    check_replica_floor(n_replicas);
    if (bins < 2) throw std::invalid_argument("tv_decay: need at least 2 bins");
    for (double t : t_grid)
        if (!(t < reference_time))
            throw std::invalid_argument(
                "tv_decay: reference_time must exceed every grid time");

    const std::size_t nt = t_grid.size();
    struct Obs {
        std::vector<double> radius;  // per query time, then the reference
        std::vector<int> regime;
    };
    auto obs = map_replicas<Obs>(
        n_replicas, ctx.master_seed, block, ctx.parallel,
        [&](long, Rng& rng) {
            Obs o;
            o.radius.reserve(nt + 1);
            o.regime.reserve(nt + 1);
            std::vector<double> xs = x;
            std::vector<double> b(ctx.params.d);
            const double dt = ctx.cfg.effective_dt(ctx.params);
            double t = 0.0;
            int regime = z;
            double until_jump = sample_holding_time(regime, ctx.params, rng);
            std::size_t qi = 0;
            auto query_time = [&](std::size_t i) {
                return i < nt ? t_grid[i] : reference_time;
            };
            while (qi <= nt) {
                if (t >= query_time(qi)) {
                    o.radius.push_back(std::sqrt(norm2(xs)));
                    o.regime.push_back(regime);
                    ++qi;
                    continue;
                }
                const double h =
                    std::min({dt, until_jump, query_time(qi) - t});
                const double sqrt_h = std::sqrt(h);
                ctx.spec.eval(regime, xs, b);
                double r2 = 0.0;
                for (int i = 0; i < ctx.params.d; ++i) {
                    xs[i] += b[i] * h + sqrt_h * rng.gaussian();
                    r2 += xs[i] * xs[i];
                }
                t += h;
                until_jump -= h;
                if (!std::isfinite(r2) ||
                    r2 > ctx.cfg.overflow_radius * ctx.cfg.overflow_radius)
                    throw PathAbort("state overflow in tv_decay");
                if (until_jump <= 0.0) {
                    regime = 1 - regime;
                    until_jump = sample_holding_time(regime, ctx.params, rng);
                }
            }
            return o;
        });

    // Bin range from the reference ensemble with headroom; overflow mass is
    // the undercoverage diagnostic.
    std::vector<double> ref_radii(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) ref_radii[i] = obs[i].radius[nt];
    std::vector<double> sorted = ref_radii;
    std::sort(sorted.begin(), sorted.end());
    const double r_cap =
        1.5 * sorted[static_cast<std::size_t>(0.999 * (sorted.size() - 1))];
    const double bin_w = r_cap / bins;

    auto histogram = [&](std::size_t query_index) {
        std::vector<double> h(static_cast<std::size_t>(2 * bins + 2), 0.0);
        for (const Obs& o : obs) {
            const double r = o.radius[query_index];
            const int zz = o.regime[query_index];
            int bi = static_cast<int>(r / bin_w);
            if (bi >= bins) bi = bins;  // overflow bin
            h[static_cast<std::size_t>(zz * (bins + 1) + bi)] += 1.0;
        }
        for (double& v : h) v /= static_cast<double>(obs.size());
        return h;
    };

    const auto ref_hist = histogram(nt);
    TvDecayResult res;
    res.t_grid = t_grid;
    res.undercoverage =
        ref_hist[static_cast<std::size_t>(bins)] +
        ref_hist[static_cast<std::size_t>(2 * bins + 1)];
    for (std::size_t i = 0; i < nt; ++i) {
        const auto h = histogram(i);
        double tv = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k)
            tv += std::abs(h[k] - ref_hist[k]);
        res.tv.push_back(0.5 * tv);
        res.undercoverage = std::max(
            res.undercoverage, h[static_cast<std::size_t>(bins)] +
                                   h[static_cast<std::size_t>(2 * bins + 1)]);
    }

    // Diagnostics: noise allowance scales like sqrt(bins/n).
    const double noise =
        3.0 * std::sqrt(static_cast<double>(bins) /
                        static_cast<double>(n_replicas));
    res.monotone_within_noise = true;
    for (std::size_t i = 1; i < res.tv.size(); ++i)
        if (res.tv[i] > res.tv[i - 1] + noise) res.monotone_within_noise = false;

    std::vector<double> lb, ly, lw;
    for (std::size_t i = 0; i < res.tv.size(); ++i) {
        if (res.tv[i] <= noise / 3.0) continue;  // below the noise floor
        lb.push_back(1.0);
        lb.push_back(std::log1p(t_grid[i]));
        ly.push_back(std::log(res.tv[i]));
        lw.push_back(1.0);
    }
    if (ly.size() >= 2) {
        const WlsFit fit = fit_wls(lb, 2, ly, lw);
        res.decay_slope = fit.coef[1];
    }
    return res;
}

}  // namespace switchdiff
