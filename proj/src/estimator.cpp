#include "exp3mle/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "exp3mle/errors.hpp"
#include "exp3mle/likelihood.hpp"
#include "exp3mle/rng.hpp"

namespace exp3mle {

namespace {

std::size_t pick_other(Rng& rng, std::size_t size, std::initializer_list<std::size_t> taken) {
    while (true) {
        const auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(size));
        if (std::find(taken.begin(), taken.end(), idx) == taken.end()) return idx;
    }
}

bool on_boundary(double x, double lower, double upper) {
    const double tol = 1e-9 * std::max(1.0, upper - lower);
    return x - lower <= tol || upper - x <= tol;
}

}  // namespace

void OptimizerConfig::validate() const {
    if (population_size < 4) throw DomainError("population_size must be >= 4");
    if (max_iterations < 1) throw DomainError("max_iterations must be >= 1");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw DomainError("crossover_rate must lie in [0, 1]");
    if (!(differential_weight > 0.0 && differential_weight < 2.0))
        throw DomainError("differential_weight must lie in (0, 2)");
    if (!(tolerance >= 0.0)) throw DomainError("tolerance must be >= 0");
}

OptimumPoint differential_evolution(const Objective& objective, double lower, double upper,
                                    const OptimizerConfig& config) {
    config.validate();
    if (!(lower <= upper) || !std::isfinite(lower) || !std::isfinite(upper))
        throw DomainError("search interval needs finite lower <= upper");

    OptimumPoint result{lower, 0.0, 0, 0, 0};
    std::optional<double> best;
    auto evaluate = [&](double x) {
        const std::optional<double> v = objective(x);
        ++result.evaluations;
        if (!v) ++result.neg_infinity_evaluations;
        if (ranks_above(v, best)) {
            best = v;
            result.argmax = x;
        }
        return v;
    };

    if (lower == upper) {
        evaluate(lower);
        if (!best) throw AllNegInfinity("objective is NegInfinity at the only admissible point");
        result.value = *best;
        return result;
    }

    Rng rng(config.seed);
    const std::size_t size = config.population_size;
    const double width = upper - lower;
    std::vector<double> members(size);
    std::vector<std::optional<double>> values(size);
    for (std::size_t i = 0; i < size; ++i) {
        members[i] = lower + rng.uniform() * width;
        values[i] = evaluate(members[i]);
    }

    std::vector<double> trials(size);
    std::vector<std::optional<double>> trial_values(size);
    std::size_t stalled = 0;
    for (std::size_t gen = 1; gen <= config.max_iterations; ++gen) {
        const std::optional<double> before = best;
        for (std::size_t i = 0; i < size; ++i) {
            const std::size_t a = pick_other(rng, size, {i});
            const std::size_t b = pick_other(rng, size, {i, a});
            const std::size_t c = pick_other(rng, size, {i, a, b});
            // With one coordinate, binomial crossover always keeps the mutant
            // (the forced index), so crossover_rate has no effect here.
            double trial = members[a] + config.differential_weight * (members[b] - members[c]);
            if (trial < lower || trial > upper) trial = lower + rng.uniform() * width;
            trials[i] = trial;
        }
        for (std::size_t i = 0; i < size; ++i) trial_values[i] = evaluate(trials[i]);
        for (std::size_t i = 0; i < size; ++i) {
            if (!ranks_above(values[i], trial_values[i])) {
                members[i] = trials[i];
                values[i] = trial_values[i];
            }
        }
        result.iterations_used = gen;

        if (config.tolerance > 0.0 && before && best) {
            stalled = (*best - *before <= config.tolerance) ? stalled + 1 : 0;
            if (stalled >= config.stagnation_generations) break;
        }
    }

    if (!best) throw AllNegInfinity("no finite objective value was observed");
    result.value = *best;
    return result;
}

EstimationResult mle_constant(const Trajectory& trajectory, double lower, double upper,
                              const OptimizerConfig& config) {
    if (!(lower > 0.0)) throw DomainError("rates must be positive");
    const Objective objective = [&](double delta) { return full_log_likelihood(trajectory, delta).value; };
    const OptimumPoint opt = differential_evolution(objective, lower, upper, config);
    return EstimationResult{opt.argmax,
                            opt.argmax,
                            opt.value,
                            opt.iterations_used,
                            opt.neg_infinity_evaluations > 0,
                            on_boundary(opt.argmax, lower, upper),
                            trajectory.n};
}

EstimationResult mle_truncated(const Trajectory& trajectory, const ThetaBox& theta, double alpha, double epsilon,
                               Truncation truncation, const OptimizerConfig& config, std::size_t grid_points) {
    if (!trajectory.schedule.is_polynomial()) throw DomainError("truncated MLE needs a polynomial-schedule trajectory");
    if (!theta.contains(trajectory.schedule.as_polynomial().eta0))
        throw DomainError("true eta0 lies outside the parameter box");

    std::size_t upsilon = 0;
    if (truncation == Truncation::Theory) {
        upsilon = std::min(trajectory.n, upsilon_n(trajectory.spec.arms(), epsilon, alpha, theta.upper, trajectory.n));
    } else {
        upsilon = upsilon_max(trajectory, TruncationConfig{epsilon, alpha, theta, grid_points});
    }

    const Objective objective = [&](double delta0) {
        return truncated_log_likelihood(trajectory, delta0, alpha, upsilon).value;
    };
    const OptimumPoint opt = differential_evolution(objective, theta.lower, theta.upper, config);
    return EstimationResult{opt.argmax,
                            resolve_polynomial_rate(opt.argmax, alpha, trajectory.n, trajectory.spec.top_loss()),
                            opt.value,
                            opt.iterations_used,
                            opt.neg_infinity_evaluations > 0,
                            theta.lower < theta.upper && on_boundary(opt.argmax, theta.lower, theta.upper),
                            upsilon};
}

}  // namespace exp3mle
