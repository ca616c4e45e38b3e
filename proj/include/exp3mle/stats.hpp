#pragma once

// Small statistics toolkit used by the experiment harness.

#include <span>
#include <vector>

namespace exp3mle::stats {

enum class Alternative { Decreasing, Increasing, TwoSided };

struct SpearmanResult {
    double rho;
    double p_value;
    bool exact;  // permutation enumeration (length <= 10) rather than the t approximation
};

// Mid-ranks (1-based) with ties averaged.
std::vector<double> mid_ranks(std::span<const double> values);

// Spearman rank correlation test. Throws DomainError for mismatched or short
// (< 3) input and DegenerateInput if either vector is constant.
SpearmanResult spearman_test(std::span<const double> x, std::span<const double> y, Alternative alternative);

// Type-7 (linear interpolation) sample quantile. Throws EmptyInput on empty data.
double quantile(std::span<const double> data, double q);

struct RateFit {
    double exponent;
    double coefficient;
    // Goodness of fit of the no-intercept model: 1 - SS_res / sum(values^2).
    double r_squared;
};

// Least squares fit of values ~ coefficient * ns^exponent (no intercept).
RateFit rate_regression(std::span<const double> ns, std::span<const double> values, double exponent);

}  // namespace exp3mle::stats
