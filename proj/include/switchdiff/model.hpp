#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "switchdiff/rng.hpp"

namespace switchdiff {

// Scalar constants of the two-regime switching model. Regime 0 is the
// inward-drifting (recurrent) one with switching rate lambda_minus; regime 1
// drifts outward with rate lambda_plus.
struct ModelParams {
    int d = 1;
    double lambda_minus = 1.0;
    double lambda_plus = 1.0;
    double r_minus = 1.0;
    double r_plus = 1.0;
    double R_minus = 1.0;
    double R_plus = 1.0;
    double M = 1.0;
    double M1 = 2.0;

    // Throws std::invalid_argument naming the violated constraint.
    void validate() const;
};

using DriftFn =
    std::function<void(std::span<const double> x, std::span<double> out)>;

// The pair of drift fields with a declared sup-norm bound.
struct DriftSpec {
    DriftFn b_minus;
    DriftFn b_plus;
    double norm_bound = 0.0;

    void eval(int regime, std::span<const double> x, std::span<double> out) const {
        (regime == 0 ? b_minus : b_plus)(x, out);
    }
};

struct ConditionMargins {
    double c1 = 0.0;   // min of the two clauses of (c1), signed slack
    double c2 = 0.0;
    double c2a = 0.0;
};

struct ConditionReport {
    bool holds_c1 = false;
    bool holds_c2 = false;
    bool holds_c2a = false;
    bool holds_b_audit = false;
    bool holds_b2_audit = false;
    ConditionMargins margins;
    std::optional<double> epsilon;
    std::optional<double> q;
};

struct DriftAuditResult {
    long violations_b = 0;       // upper bounds x.b_- <= -r_-, x.b_+ <= r_+
    long violations_b2 = 0;      // lower bounds x.b_- >= -R_-, x.b_+ >= R_+
    long violations_norm = 0;    // |b| <= norm_bound
    double worst_violation = 0.0;  // largest positive excess over any bound
    long n_samples = 0;

    bool clean() const {
        return violations_b == 0 && violations_b2 == 0 && violations_norm == 0;
    }
};

// Exact evaluation of the switching-rate/drift inequalities with signed
// slack per condition; (epsilon, q) populated when the weakest tier holds.
ConditionReport check_conditions(const ModelParams& p);

// Largest epsilon still admitting q < 1; positive iff the weakest condition
// tier holds.
double epsilon_max(const ModelParams& p);

// q paired with a concrete epsilon choice.
double q_for_epsilon(const ModelParams& p, double epsilon);

// epsilon_fraction in (0,1) selects epsilon as that fraction of epsilon_max.
// Throws std::domain_error when the condition tier fails.
std::pair<double, double> solve_epsilon_q(const ModelParams& p,
                                          double epsilon_fraction = 0.5);

// Radial reference family: b_-(x) = -k_- x / max(|x|^2, M^2) and
// b_+(x) = +k_+ x / max(|x|^2, M^2). Outside the M-ball the radial
// inner products are exactly -k_- and +k_+.
DriftSpec canonical_model(const ModelParams& p, double kappa_minus,
                          double kappa_plus);

// Samples |x| log-uniform in [M, 1000*M] with uniform directions and checks
// the four inner-product bounds plus the norm bound.
DriftAuditResult drift_bounds_audit(const DriftSpec& spec, const ModelParams& p,
                                    long n_samples, Rng& rng);

}  // namespace switchdiff
