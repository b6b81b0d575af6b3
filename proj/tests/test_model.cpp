#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "switchdiff/model.hpp"

using namespace switchdiff;

namespace {

ModelParams reference_params() {
    // d=1, r_-=4, r_+=0.1, lambda_-=1, lambda_+=10.
    ModelParams p;
    p.d = 1;
    p.lambda_minus = 1.0;
    p.lambda_plus = 10.0;
    p.r_minus = p.R_minus = 4.0;
    p.r_plus = p.R_plus = 0.1;
    p.M = 1.0;
    p.M1 = 2.0;
    return p;
}

ModelParams random_params(Rng& rng) {
    auto logu = [&rng](double lo, double hi) {
        return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform());
    };
    ModelParams p;
    p.d = 1 + static_cast<int>(rng.next_u64() % 5);
    p.lambda_minus = logu(0.05, 20.0);
    p.lambda_plus = logu(0.05, 20.0);
    p.r_minus = p.R_minus = logu(0.05, 50.0);
    p.r_plus = p.R_plus = logu(0.05, 50.0);
    p.M = 1.0;
    p.M1 = 2.0;
    return p;
}

}  // namespace

TEST_CASE("conditions on the reference parameter set") {
    // Oracle: the three inequalities evaluated by hand.
    //   c1: 2*4 - 1 = 7 > 0 and 7/1 - 1.2/10 = 6.88 > 0
    //   c2: (16-6)/1 - (0.4+6)/10 = 10 - 0.64 = 9.36 > 0
    //   c2a: (24-15)/1 - (0.6+15)/10 = 9 - 1.56 = 7.44 > 0
    const auto rep = check_conditions(reference_params());
    CHECK(rep.holds_c1);
    CHECK(rep.holds_c2);
    CHECK(rep.holds_c2a);
    CHECK(rep.margins.c1 == doctest::Approx(6.88).epsilon(1e-12));
    CHECK(rep.margins.c2 == doctest::Approx(9.36).epsilon(1e-12));
    CHECK(rep.margins.c2a == doctest::Approx(7.44).epsilon(1e-12));
    REQUIRE(rep.epsilon.has_value());
    REQUIRE(rep.q.has_value());
    CHECK(*rep.epsilon > 0.0);
    CHECK(*rep.q > 0.0);
    CHECK(*rep.q < 1.0);
}

TEST_CASE("q matches the hand-solved balance equation at epsilon = 0.5") {
    // Oracle: q = (2*0.1 + 1 + 0.5) / (10*(2*4 - 1 - 0.5)) = 1.7/65.
    const ModelParams p = reference_params();
    CHECK(q_for_epsilon(p, 0.5) == doctest::Approx(1.7 / 65.0).epsilon(1e-12));
}

TEST_CASE("condition implication chain over random tuples") {
    Rng rng(12345, 0);
    for (int i = 0; i < 10000; ++i) {
        const auto rep = check_conditions(random_params(rng));
        if (rep.holds_c2a) CHECK(rep.holds_c2);
        if (rep.holds_c2) CHECK(rep.holds_c1);
        // Margins carry the booleans' signs.
        CHECK(rep.holds_c2 == (rep.margins.c2 > 0.0));
        CHECK(rep.holds_c2a == (rep.margins.c2a > 0.0));
    }
}

TEST_CASE("solve_epsilon_q satisfies the balance identity to 1e-12") {
    Rng rng(999, 0);
    int solved = 0;
    for (int i = 0; i < 5000; ++i) {
        const ModelParams p = random_params(rng);
        const auto rep = check_conditions(p);
        if (!rep.holds_c1) {
            CHECK_THROWS_AS(solve_epsilon_q(p), std::domain_error);
            continue;
        }
        const auto [eps, q] = solve_epsilon_q(p);
        ++solved;
        CHECK(eps > 0.0);
        CHECK(q > 0.0);
        CHECK(q < 1.0);
        const double d = static_cast<double>(p.d);
        const double lhs = p.lambda_minus * (2.0 * p.r_plus + d + eps);
        const double rhs = q * p.lambda_plus * (2.0 * p.r_minus - d - eps);
        const double scale = std::max(std::abs(lhs), std::abs(rhs));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
    }
    CHECK(solved > 100);  // the sweep exercises the solvable branch
}

TEST_CASE("epsilon_max is the boundary of admissibility") {
    const ModelParams p = reference_params();
    const double em = epsilon_max(p);
    CHECK(em > 0.0);
    CHECK(q_for_epsilon(p, em) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q_for_epsilon(p, 0.99 * em) < 1.0);
}

TEST_CASE("canonical model radial products are exact outside the M-ball") {
    const ModelParams p = reference_params();
    const DriftSpec spec = canonical_model(p, 4.0, 0.1);
    Rng rng(7, 0);
    std::vector<double> x(1), b(1);
    for (int i = 0; i < 2000; ++i) {
        const double r = p.M * std::exp(3.0 * rng.uniform());
        x[0] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * r;
        spec.eval(0, x, b);
        CHECK(x[0] * b[0] == doctest::Approx(-4.0).epsilon(1e-14));
        spec.eval(1, x, b);
        CHECK(x[0] * b[0] == doctest::Approx(0.1).epsilon(1e-14));
    }
    // Inside the ball the field is linear and bounded by the declared norm.
    x[0] = 0.5;
    spec.eval(0, x, b);
    CHECK(std::abs(b[0]) <= spec.norm_bound + 1e-15);
    CHECK(spec.norm_bound == doctest::Approx(4.0));
}

TEST_CASE("canonical model exactness in three dimensions") {
    ModelParams p = reference_params();
    p.d = 3;
    const DriftSpec spec = canonical_model(p, 10.0, 0.1);
    Rng rng(8, 0);
    std::vector<double> x(3), b(3);
    for (int i = 0; i < 2000; ++i) {
        double n2 = 0.0;
        for (auto& xi : x) {
            xi = rng.gaussian();
            n2 += xi * xi;
        }
        const double r = p.M * std::exp(3.0 * rng.uniform());
        for (auto& xi : x) xi *= r / std::sqrt(n2);
        spec.eval(0, x, b);
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += x[k] * b[k];
        CHECK(dot == doctest::Approx(-10.0).epsilon(1e-14));
    }
}

TEST_CASE("drift audit accepts the canonical model and flags a broken one") {
    const ModelParams p = reference_params();
    {
        Rng rng(42, 0);
        const auto res =
            drift_bounds_audit(canonical_model(p, 4.0, 0.1), p, 5000, rng);
        CHECK(res.clean());
        CHECK(res.n_samples == 5000);
    }
    {
        // A drift that decays too fast violates the lower bound R_- far out.
        DriftSpec weak = canonical_model(p, 4.0, 0.1);
        weak.b_minus = [](std::span<const double> x, std::span<double> out) {
            double r2 = 0.0;
            for (double xi : x) r2 += xi * xi;
            for (std::size_t i = 0; i < x.size(); ++i)
                out[i] = -x[i] / std::max(r2 * r2, 1.0);
        };
        Rng rng(42, 0);
        const auto res = drift_bounds_audit(weak, p, 5000, rng);
        CHECK_FALSE(res.clean());
        CHECK(res.worst_violation > 0.0);
    }
}

TEST_CASE("parameter validation names the violated constraint") {
    ModelParams p = reference_params();
    p.lambda_minus = 0.0;
    CHECK_THROWS_WITH_AS(p.validate(),
                         doctest::Contains("0 < lambda_-"),
                         std::invalid_argument);
    p = reference_params();
    p.M1 = 0.5;  // below M
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = reference_params();
    p.R_minus = 1.0;  // R_- < r_-
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = reference_params();
    p.d = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("canonical_model rejects non-positive kappa") {
    CHECK_THROWS_AS(canonical_model(reference_params(), 0.0, 0.1),
                    std::invalid_argument);
}
