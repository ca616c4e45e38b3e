#include "exp3mle/likelihood.hpp"

#include <algorithm>
#include <cmath>

#include "exp3mle/errors.hpp"

namespace exp3mle {

void TruncationConfig::validate() const {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (grid_points < 2) throw DomainError("grid needs at least two points");
}

std::size_t upsilon_n(std::size_t arms, double epsilon, double alpha, double upper, std::size_t n) {
    if (arms < 2) throw DomainError("need at least two arms");
    const double uniform = 1.0 / static_cast<double>(arms);
    if (!(epsilon > 0.0 && epsilon < uniform)) throw DomainError("epsilon must lie in (0, 1/K)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!(upper > 0.0)) throw DomainError("R must be positive");
    if (n == 0) throw DomainError("n must be >= 1");
    return static_cast<std::size_t>(std::floor((uniform - epsilon) * std::pow(static_cast<double>(n), alpha) / upper));
}

std::size_t upsilon_max(const Trajectory& trajectory, const TruncationConfig& config) {
    config.validate();
    const BanditSpec& spec = trajectory.spec;
    if (!(1.0 / static_cast<double>(spec.arms()) > config.epsilon)) return 0;

    const std::size_t n = trajectory.n;
    const auto& box = config.theta;
    std::size_t best = n;
    for (std::size_t g = 0; g < config.grid_points; ++g) {
        const double frac = static_cast<double>(g) / static_cast<double>(config.grid_points - 1);
        const double delta0 = g + 1 == config.grid_points ? box.upper : box.lower + (box.upper - box.lower) * frac;
        Exp3State state(spec, resolve_polynomial_rate(delta0, config.alpha, n, spec.top_loss()));
        std::size_t t = 0;
        // Rows 1..best only: a later failure cannot lower the minimum.
        while (t < best) {
            const auto p = state.probabilities();
            if (!std::all_of(p.begin(), p.end(), [&](double x) { return x > config.epsilon; })) break;
            ++t;
            if (t < best) state.update(trajectory.arms[t - 1]);
        }
        best = std::min(best, t);
        if (best == 0) break;
    }
    return best;
}

LikelihoodValue replay_log_likelihood(const BanditSpec& spec, std::span<const std::size_t> arms, double rate,
                                      std::size_t steps) {
    if (steps > arms.size()) throw DomainError("likelihood horizon exceeds the observed sequence");
    Exp3State state(spec, rate);
    double total = 0.0;
    // Consecutive pulls of the same arm with unchanged probabilities reuse the logarithm.
    std::size_t cached_arm = spec.arms();
    std::uint64_t cached_revision = 0;
    double cached_log = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t arm = arms[t];
        if (arm >= spec.arms()) throw DomainError("observed arm index out of range");
        if (arm != cached_arm || state.revision() != cached_revision) {
            const double p = state.probabilities()[arm];
            if (!(p > 0.0)) return LikelihoodValue{std::nullopt, t + 1};
            cached_arm = arm;
            cached_revision = state.revision();
            cached_log = std::log(p);
        }
        total += cached_log;
        if (t + 1 < steps) state.update(arm);
    }
    return LikelihoodValue{total, steps};
}

LikelihoodValue truncated_log_likelihood(const Trajectory& trajectory, double delta0, double alpha,
                                         std::size_t upsilon) {
    if (!(delta0 > 0.0)) throw DomainError("delta0 must be positive");
    if (upsilon > trajectory.n) throw DomainError("upsilon exceeds n");
    const double rate = resolve_polynomial_rate(delta0, alpha, trajectory.n, trajectory.spec.top_loss());
    return replay_log_likelihood(trajectory.spec, trajectory.arms, rate, upsilon);
}

LikelihoodValue full_log_likelihood(const Trajectory& trajectory, double delta) {
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    return replay_log_likelihood(trajectory.spec, trajectory.arms, delta, trajectory.n);
}

}  // namespace exp3mle
