#pragma once

// Truncation horizons and log-likelihoods of an observed arm sequence under a
// candidate learning rate.

#include <cstddef>
#include <optional>
#include <span>

#include "exp3mle/bandit.hpp"

namespace exp3mle {

struct TruncationConfig {
    double epsilon;
    double alpha;
    ThetaBox theta;
    std::size_t grid_points = 50;

    // Throws DomainError unless epsilon > 0, alpha in (0, 1) and grid_points >= 2.
    void validate() const;
};

// A log-likelihood, or the NegInfinity sentinel (empty value) when the replayed
// probability of an observed arm is exactly 0 in double precision.
struct LikelihoodValue {
    std::optional<double> value;
    std::size_t evaluated_steps = 0;  // rounds summed; for NegInfinity, the round that hit 0

    bool is_neg_infinity() const noexcept { return !value.has_value(); }
};

// NegInfinity ranks below every finite value; two sentinels compare equal.
inline bool ranks_above(const std::optional<double>& a, const std::optional<double>& b) {
    if (!a) return false;
    if (!b) return true;
    return *a > *b;
}

// floor((1/K - epsilon) n^alpha / R)
std::size_t upsilon_n(std::size_t arms, double epsilon, double alpha, double upper, std::size_t n);

// Largest t <= n such that every replayed p_{k,s} > epsilon for s <= t, every k,
// and every rate delta_n on a regular grid of config.grid_points values of
// delta_0 spanning [r, R] (endpoints included).
std::size_t upsilon_max(const Trajectory& trajectory, const TruncationConfig& config);

// Sum over the first `steps` rounds of log p_{I_t,t} replayed at `rate`.
LikelihoodValue replay_log_likelihood(const BanditSpec& spec, std::span<const std::size_t> arms, double rate,
                                      std::size_t steps);

// Truncated log-likelihood at delta_0, resolved to delta_n = delta_0 / (n^alpha pi_1).
LikelihoodValue truncated_log_likelihood(const Trajectory& trajectory, double delta0, double alpha,
                                         std::size_t upsilon);

// Untruncated log-likelihood at a constant rate over all n rounds.
LikelihoodValue full_log_likelihood(const Trajectory& trajectory, double delta);

}  // namespace exp3mle
