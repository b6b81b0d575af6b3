#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "switchdiff/estimators.hpp"

using namespace switchdiff;

namespace {

EstimatorContext canonical_ctx(bool parallel = false) {
    EstimatorContext ctx;
    ctx.params.d = 1;
    ctx.params.lambda_minus = 1.0;
    ctx.params.lambda_plus = 10.0;
    ctx.params.r_minus = ctx.params.R_minus = 4.0;
    ctx.params.r_plus = ctx.params.R_plus = 0.1;
    ctx.params.M = 1.0;
    ctx.params.M1 = 8.0;
    ctx.spec = canonical_model(ctx.params, 4.0, 0.1);
    ctx.cfg.dt = 2e-3;
    ctx.master_seed = 1;
    ctx.parallel = parallel;
    return ctx;
}

MomentEstimate synthetic(double mean, double se) {
    MomentEstimate est;
    est.mean = mean;
    est.se = se;
    est.ci_lo = mean - 2.58 * se;
    est.ci_hi = mean + 2.58 * se;
    est.n = 1000;
    return est;
}

}  // namespace

TEST_CASE("normal_quantile matches tabulated values") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.9599640).epsilon(1e-4));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293).epsilon(1e-4));
    CHECK(normal_quantile(0.025) == doctest::Approx(-1.9599640).epsilon(1e-4));
    CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
    CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("summarize on a hand-checked sample") {
    // Oracle: mean 2, sample variance 10/3, se = sqrt(10/12).
    const std::vector<double> v = {0.0, 1.0, 3.0, 4.0};
    const auto est = summarize(v, 0.95);
    CHECK(est.mean == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(est.se == doctest::Approx(std::sqrt(10.0 / 12.0)).epsilon(1e-12));
    CHECK(est.n == 4);
    CHECK(est.ci_lo < est.mean);
    CHECK(est.ci_hi > est.mean);
    CHECK(est.method == "normal");
}

TEST_CASE("confidence interval width shrinks like n^{-1/2}") {
    Rng rng(17, 0);
    std::vector<double> small(4000), big(16000);
    for (auto& v : small) v = rng.gaussian();
    for (auto& v : big) v = rng.gaussian();
    const auto e1 = summarize(small, 0.99);
    const auto e2 = summarize(big, 0.99);
    const double ratio = (e2.ci_hi - e2.ci_lo) / (e1.ci_hi - e1.ci_lo);
    // Quadrupling n should halve the width within 20%.
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("bootstrap interval brackets the mean") {
    Rng rng(18, 0);
    std::vector<double> v(2000);
    for (auto& x : v) x = rng.exponential(1.0);
    const auto est = summarize_bootstrap(v, 0.99, 42);
    CHECK(est.method == "bootstrap");
    CHECK(est.ci_lo < est.mean);
    CHECK(est.ci_hi > est.mean);
    CHECK(est.mean == doctest::Approx(1.0).epsilon(0.1));
    // Same seed, same interval.
    const auto est2 = summarize_bootstrap(v, 0.99, 42);
    CHECK(est.ci_lo == est2.ci_lo);
    CHECK(est.ci_hi == est2.ci_hi);
}

TEST_CASE("weighted least squares recovers exact coefficients") {
    // y = 3 x^2 - 5 x + 2 sampled without noise.
    std::vector<double> basis, y, w;
    for (double x : {1.0, 2.0, 3.0, 4.0, 7.0}) {
        basis.insert(basis.end(), {x * x, x, 1.0});
        y.push_back(3.0 * x * x - 5.0 * x + 2.0);
        w.push_back(1.0 + x);  // arbitrary positive weights
    }
    const auto fit = fit_wls(basis, 3, y, w);
    CHECK(fit.coef[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.coef[1] == doctest::Approx(-5.0).epsilon(1e-10));
    CHECK(fit.coef[2] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(fit_wls(basis, 4, y, w), std::invalid_argument);
}

TEST_CASE("growth exponent is exact on synthetic power laws") {
    const std::vector<double> radii = {4.0, 8.0, 16.0, 32.0};
    {
        std::vector<MomentEstimate> vals;
        for (double r : radii) vals.push_back(synthetic(r * r, 1e-9 * r * r));
        const auto fit = growth_exponent(vals, radii);
        CHECK(fit.exponent == doctest::Approx(2.0).epsilon(1e-9));
    }
    {
        std::vector<MomentEstimate> vals;
        for (double r : radii)
            vals.push_back(synthetic(2.0 * std::pow(r, 6.0), 1.0));
        const auto fit = growth_exponent(vals, radii);
        CHECK(fit.exponent == doctest::Approx(6.0).epsilon(1e-6));
        CHECK(fit.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-4));
    }
    {
        std::vector<MomentEstimate> bad = {synthetic(1.0, 0.1),
                                           synthetic(-1.0, 0.1),
                                           synthetic(1.0, 0.1)};
        CHECK_THROWS_AS(growth_exponent(bad, {1.0, 2.0, 3.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("moment_at_time with t=0 is deterministic") {
    const auto ctx = canonical_ctx();
    const auto est = moment_at_time(ctx, {3.0}, 0, 0.0, 4, 500, 1);
    CHECK(est.mean == 81.0);
    CHECK(est.ci_lo == 81.0);
    CHECK(est.ci_hi == 81.0);
    CHECK(est.method == "exact");
}

TEST_CASE("map_replicas is bitwise identical serial vs parallel") {
    const auto kernel = [](long i, Rng& rng) {
        double s = static_cast<double>(i);
        for (int k = 0; k < 50; ++k) s += rng.gaussian();
        return s;
    };
    const auto a = map_replicas<double>(5000, 9, 77, false, kernel);
    const auto b = map_replicas<double>(5000, 9, 77, true, kernel);
    CHECK(a == b);
    // Different blocks decorrelate.
    const auto c = map_replicas<double>(5000, 9, 78, false, kernel);
    CHECK(a != c);
}

TEST_CASE("estimator ensembles are reproducible across parallel modes") {
    const auto e1 = interval_moment_change(canonical_ctx(false), {16.0}, 0, 2,
                                           2000, 5);
    const auto e2 = interval_moment_change(canonical_ctx(true), {16.0}, 0, 2,
                                           2000, 5);
    CHECK(e1.mean == e2.mean);
    CHECK(e1.se == e2.se);
}

TEST_CASE("interval change sign pattern with 99% CIs") {
    const auto ctx = canonical_ctx();
    for (double r : {12.0, 24.0}) {
        for (int power : {2, 4, 6}) {
            // Noise/signal grows with radius and power; scale the budget.
            const long n = power == 2 ? 60000 : 30000;
            const long n_r = static_cast<long>(
                static_cast<double>(n) * (r / 12.0) * (r / 12.0));
            const auto neg = interval_moment_change(
                ctx, {r}, 0, power, n_r,
                static_cast<std::uint64_t>(100 * r + power));
            CHECK(neg.ci_hi < 0.0);
            const auto pos = interval_moment_change(
                ctx, {r}, 1, power, n_r,
                static_cast<std::uint64_t>(100 * r + power + 50));
            CHECK(pos.ci_lo > 0.0);
        }
    }
}

TEST_CASE("occupation functional validates the lemma's case pairing") {
    const auto ctx = canonical_ctx();
    CHECK_THROWS_AS(
        occupation_near_ball(ctx, {16.0}, 0, OccupationUpTo::T0, 200, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(
        occupation_near_ball(ctx, {16.0}, 1, OccupationUpTo::T2, 200, 1),
        std::invalid_argument);
    // Far starting point: the M-ball is essentially never reached before T1.
    const auto far = occupation_near_ball(ctx, {200.0}, 0, OccupationUpTo::T1,
                                          300, 2);
    CHECK(far.mean <= 1e-6);
    // Starting just outside M: the running minimum enters almost surely.
    const auto near = occupation_near_ball(ctx, {1.1}, 0, OccupationUpTo::T1,
                                           300, 3);
    CHECK(near.ci_lo > 0.0);
}

TEST_CASE("hitting_moments reports censoring honestly") {
    auto ctx = canonical_ctx();
    ctx.cfg.horizon = 2000.0;
    const auto hm = hitting_moments(ctx, {16.0}, 0, 400, 6);
    CHECK(hm.censored_fraction == 0.0);
    CHECK_FALSE(hm.second_moment_unreliable);
    CHECK(hm.tau_m1.mean <= hm.tau.mean);
    CHECK(hm.tau_sq.method == "bootstrap");

    ctx.cfg.horizon = 0.5;  // force censoring
    const auto censored = hitting_moments(ctx, {100.0}, 0, 200, 7);
    CHECK(censored.censored_fraction > 0.5);
    CHECK(censored.second_moment_unreliable);
    // Censored samples enter at the horizon: a visible lower bound.
    CHECK(censored.tau.mean <= ctx.cfg.horizon);
}

TEST_CASE("replica floor and power validation") {
    const auto ctx = canonical_ctx();
    CHECK_THROWS_AS(interval_moment_change(ctx, {16.0}, 0, 3, 1000, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(interval_moment_change(ctx, {16.0}, 0, 2, 50, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(hitting_moments(ctx, {16.0}, 0, 50, 1),
                    std::invalid_argument);
}

TEST_CASE("tv decay to the late-time ensemble shrinks and stays covered") {
    auto ctx = canonical_ctx();
    ctx.cfg.dt = 5e-3;
    const auto res = tv_decay(ctx, {16.0}, 0, {0.5, 4.0}, 12.0, 1500, 32, 9);
    REQUIRE(res.tv.size() == 2);
    CHECK(res.tv[1] < res.tv[0]);
    CHECK(res.undercoverage < 0.05);
    CHECK(res.monotone_within_noise);

    CHECK_THROWS_AS(tv_decay(ctx, {16.0}, 0, {15.0}, 12.0, 1500, 32, 9),
                    std::invalid_argument);
}
