#include "switchdiff/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace switchdiff {

void ModelParams::validate() const {
    auto fail = [](const std::string& msg) {
        throw std::invalid_argument("ModelParams: " + msg);
    };
    if (d < 1) fail("dimension d must be a positive integer");
    if (!(lambda_minus > 0.0) || !(lambda_plus > 0.0))
        fail("switching intensities must satisfy 0 < lambda_- and 0 < lambda_+");
    if (!(r_minus > 0.0) || !(r_plus > 0.0))
        fail("drift-bound constants r_-, r_+ must be positive");
    if (!(R_minus > 0.0) || !(R_plus > 0.0))
        fail("lower drift-bound constants R_-, R_+ must be positive");
    if (R_plus > r_plus) fail("R_+ <= r_+ violated");
    if (R_minus < r_minus) fail("R_- >= r_- violated");
    if (!(M > 0.0)) fail("inner radius M must be positive");
    if (!(M1 > M)) fail("recurrence radius must satisfy M1 > M");
}

ConditionReport check_conditions(const ModelParams& p) {
    p.validate();
    ConditionReport rep;

    const double d = static_cast<double>(p.d);
    const double lm = p.lambda_minus, lp = p.lambda_plus;
    const double rm = p.r_minus, rp = p.r_plus;

    const double c1_a = 2.0 * rm - d;
    const double c1_b = (2.0 * rm - d) / lm - (2.0 * rp + d) / lp;
    rep.margins.c1 = std::min(c1_a, c1_b);
    rep.holds_c1 = c1_a > 0.0 && c1_b > 0.0;

    rep.margins.c2 =
        (4.0 * rm - (2.0 * d + 4.0)) / lm - (4.0 * rp + (2.0 * d + 4.0)) / lp;
    rep.holds_c2 = rep.margins.c2 > 0.0;

    rep.margins.c2a =
        (6.0 * rm - (3.0 * d + 12.0)) / lm - (6.0 * rp + (3.0 * d + 12.0)) / lp;
    rep.holds_c2a = rep.margins.c2a > 0.0;

    if (rep.holds_c1) {
        auto [eps, q] = solve_epsilon_q(p);
        rep.epsilon = eps;
        rep.q = q;
    }
    return rep;
}

double epsilon_max(const ModelParams& p) {
    const double d = static_cast<double>(p.d);
    return (p.lambda_plus * (2.0 * p.r_minus - d) -
            p.lambda_minus * (2.0 * p.r_plus + d)) /
           (p.lambda_plus + p.lambda_minus);
}

double q_for_epsilon(const ModelParams& p, double epsilon) {
    const double d = static_cast<double>(p.d);
    return p.lambda_minus * (2.0 * p.r_plus + d + epsilon) /
           (p.lambda_plus * (2.0 * p.r_minus - d - epsilon));
}

std::pair<double, double> solve_epsilon_q(const ModelParams& p,
                                          double epsilon_fraction) {
    const double d = static_cast<double>(p.d);
    const double c1_a = 2.0 * p.r_minus - d;
    const double c1_b =
        (2.0 * p.r_minus - d) / p.lambda_minus - (2.0 * p.r_plus + d) / p.lambda_plus;
    if (!(c1_a > 0.0 && c1_b > 0.0))
        throw std::domain_error(
            "solve_epsilon_q: the balance condition fails, no admissible (epsilon, q)");
    if (!(epsilon_fraction > 0.0 && epsilon_fraction < 1.0))
        throw std::invalid_argument("solve_epsilon_q: epsilon_fraction must lie in (0,1)");

    const double eps = epsilon_fraction * epsilon_max(p);
    return {eps, q_for_epsilon(p, eps)};
}

DriftSpec canonical_model(const ModelParams& p, double kappa_minus,
                          double kappa_plus) {
    if (!(kappa_minus > 0.0) || !(kappa_plus > 0.0))
        throw std::invalid_argument("canonical_model: kappa values must be positive");
    const double M2 = p.M * p.M;

    auto radial = [M2](double kappa, std::span<const double> x,
                       std::span<double> out) {
        double r2 = 0.0;
        for (double xi : x) r2 += xi * xi;
        const double scale = kappa / std::max(r2, M2);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * x[i];
    };

    DriftSpec spec;
    spec.b_minus = [radial, kappa_minus](std::span<const double> x,
                                         std::span<double> out) {
        radial(-kappa_minus, x, out);
    };
    spec.b_plus = [radial, kappa_plus](std::span<const double> x,
                                       std::span<double> out) {
        radial(kappa_plus, x, out);
    };
    spec.norm_bound = std::max(kappa_minus, kappa_plus) / p.M;
    return spec;
}

DriftAuditResult drift_bounds_audit(const DriftSpec& spec, const ModelParams& p,
                                    long n_samples, Rng& rng) {
    DriftAuditResult res;
    res.n_samples = n_samples;

    const int d = p.d;
    std::vector<double> x(d), b(d);
    const double log_lo = std::log(p.M), log_hi = std::log(1000.0 * p.M);

    auto note = [&res](double excess, long& counter) {
        if (excess > 0.0) {
            ++counter;
            res.worst_violation = std::max(res.worst_violation, excess);
        }
    };

    // Tolerance for exact-equality families evaluated in floating point.
    const double tol = 1e-12 * std::max(1.0, p.R_minus + p.R_plus);

    for (long s = 0; s < n_samples; ++s) {
        // Uniform direction, log-uniform radius in [M, 1000 M].
        double n2 = 0.0;
        for (int i = 0; i < d; ++i) {
            x[i] = rng.gaussian();
            n2 += x[i] * x[i];
        }
        const double radius = std::exp(log_lo + (log_hi - log_lo) * rng.uniform());
        const double scale = radius / std::sqrt(std::max(n2, 1e-300));
        for (int i = 0; i < d; ++i) x[i] *= scale;

        for (int regime : {0, 1}) {
            spec.eval(regime, x, b);
            double dot = 0.0, b2 = 0.0;
            for (int i = 0; i < d; ++i) {
                dot += x[i] * b[i];
                b2 += b[i] * b[i];
            }
            if (regime == 0) {
                note(dot - (-p.r_minus) - tol, res.violations_b);
                note((-p.R_minus) - dot - tol, res.violations_b2);
            } else {
                note(dot - p.r_plus - tol, res.violations_b);
                note(p.R_plus - dot - tol, res.violations_b2);
            }
            note(std::sqrt(b2) - spec.norm_bound - tol, res.violations_norm);
        }
    }
    return res;
}

}  // namespace switchdiff
