#pragma once

// Maximum-likelihood estimation of the learning rate with a derivative-free
// differential-evolution search on an interval.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "exp3mle/bandit.hpp"

namespace exp3mle {

// DE/rand/1/bin settings. Defaults follow the common reference values of the family.
struct OptimizerConfig {
    std::size_t population_size = 20;
    std::size_t max_iterations = 50;
    double crossover_rate = 0.9;
    double differential_weight = 0.8;
    std::uint64_t seed = 1;
    // Stop once the best value improved by at most `tolerance` for
    // `stagnation_generations` consecutive generations. 0 disables the rule.
    double tolerance = 1e-10;
    std::size_t stagnation_generations = 10;

    void validate() const;
};

// Objective value, or std::nullopt for NegInfinity.
using Objective = std::function<std::optional<double>(double)>;

struct OptimumPoint {
    double argmax;
    double value;
    std::size_t iterations_used;
    std::size_t evaluations;
    std::size_t neg_infinity_evaluations;
};

// Maximizes `objective` over [lower, upper]. Deterministic given config.seed.
// NegInfinity ranks below every finite value; the best point is the first one
// found with the best value. Throws AllNegInfinity if no finite value was seen.
OptimumPoint differential_evolution(const Objective& objective, double lower, double upper,
                                    const OptimizerConfig& config);

struct EstimationResult {
    double eta0_hat;       // delta_0 estimate (the constant rate itself in the constant case)
    double eta_n_hat;      // resolved rate
    double objective;      // log-likelihood at eta0_hat
    std::size_t iterations_used;
    bool hit_neg_infinity;  // some candidate evaluated to NegInfinity during the search
    bool boundary_hit;      // estimate sits on a bound of the search interval
    std::size_t upsilon_used;
};

// Maximizes the untruncated log-likelihood over constant rates in [lower, upper].
EstimationResult mle_constant(const Trajectory& trajectory, double lower, double upper,
                              const OptimizerConfig& config);

enum class Truncation { Theory, Empirical };

// Truncates at upsilon_n (Theory) or upsilon_max (Empirical), then maximizes the
// truncated log-likelihood over delta_0 in theta.
EstimationResult mle_truncated(const Trajectory& trajectory, const ThetaBox& theta, double alpha, double epsilon,
                               Truncation truncation, const OptimizerConfig& config,
                               std::size_t grid_points = 50);

}  // namespace exp3mle
