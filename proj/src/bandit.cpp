#include "exp3mle/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "exp3mle/errors.hpp"
#include "exp3mle/rng.hpp"

namespace exp3mle {

namespace {

constexpr double kMaxLoss = std::numeric_limits<double>::max();

// Softmax of -eta * L into `out` (and its logarithm into `log_out` when
// non-empty). Assumes finite L and eta >= 0.
void softmax_into(std::span<const double> cum_loss, double eta, std::span<double> out,
                  std::span<double> log_out = {}) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cum_loss.size(); ++k) {
        out[k] = -eta * cum_loss[k];
        top = std::max(top, out[k]);
    }
    if (!log_out.empty()) {
        for (std::size_t k = 0; k < out.size(); ++k) log_out[k] = out[k] - top;
    }
    double total = 0.0;
    for (double& w : out) {
        w = std::exp(w - top);
        total += w;
    }
    for (double& w : out) w /= total;
    if (!log_out.empty()) {
        const double log_total = std::log(total);
        for (double& lw : log_out) lw -= log_total;
    }
}

void check_rate(double eta) {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("learning rate must be finite and >= 0");
}

}  // namespace

BanditSpec::BanditSpec(std::vector<double> losses) : losses_(std::move(losses)) {
    if (losses_.size() < 2) throw DomainError("a bandit needs at least two arms");
    for (std::size_t k = 0; k < losses_.size(); ++k) {
        const double x = losses_[k];
        if (!(x >= 0.0 && x <= 1.0)) throw DomainError("losses must lie in [0, 1]");
        if (k > 0 && x > losses_[k - 1]) throw DomainError("losses must be sorted in descending order");
    }
}

RateSchedule RateSchedule::constant(double eta) {
    // eta == 0 is admitted: it is the fixpoint where the learner never moves.
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("constant rate must be finite and >= 0");
    return RateSchedule(ConstantRate{eta});
}

RateSchedule RateSchedule::polynomial(double eta0, double alpha) {
    if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw DomainError("eta0 must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    return RateSchedule(PolynomialRate{eta0, alpha});
}

double RateSchedule::resolve(std::size_t n, double top_loss) const {
    if (const auto* c = std::get_if<ConstantRate>(&rate_)) return c->eta;
    const auto& p = std::get<PolynomialRate>(rate_);
    return resolve_polynomial_rate(p.eta0, p.alpha, n, top_loss);
}

ThetaBox::ThetaBox(double lo, double hi) : lower(lo), upper(hi) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw DomainError("theta box needs 0 < r <= R");
}

double resolve_polynomial_rate(double delta0, double alpha, std::size_t n, double top_loss) {
    if (n == 0) throw DomainError("horizon must be >= 1");
    if (!(top_loss > 0.0)) throw DomainError("polynomial schedule needs pi_1 > 0");
    return delta0 / (std::pow(static_cast<double>(n), alpha) * top_loss);
}

Exp3State::Exp3State(const BanditSpec& spec, double eta)
    : spec_(&spec),
      eta_(eta),
      cum_loss_(spec.arms(), 0.0),
      probs_(init_policy(spec)),
      log_probs_(spec.arms(), -std::log(static_cast<double>(spec.arms()))) {
    check_rate(eta);
}

bool Exp3State::update(std::size_t arm) {
    const double p = probs_[arm];
    if (!(p > 0.0)) return false;
    const double charge = spec_->loss(arm) / p;
    if (charge == 0.0) return true;  // zero-loss arm: L~ and hence p are unchanged
    const double next = cum_loss_[arm] + charge;
    cum_loss_[arm] = std::isfinite(next) ? next : kMaxLoss;
    softmax_into(cum_loss_, eta_, probs_, log_probs_);
    ++revision_;
    return true;
}

std::vector<double> init_policy(const BanditSpec& spec) {
    return std::vector<double>(spec.arms(), 1.0 / static_cast<double>(spec.arms()));
}

std::vector<double> softmax_update(std::span<const double> cum_loss_est, double eta) {
    check_rate(eta);
    if (cum_loss_est.empty()) throw DomainError("softmax of an empty vector");
    for (double x : cum_loss_est) {
        if (!std::isfinite(x)) throw NonFiniteInput("cumulative loss estimate is not finite");
    }
    std::vector<double> out(cum_loss_est.size());
    softmax_into(cum_loss_est, eta, out);
    return out;
}

std::vector<double> importance_loss(const BanditSpec& spec, std::span<const double> probs, std::size_t chosen) {
    if (probs.size() != spec.arms() || chosen >= spec.arms()) throw DomainError("arm index out of range");
    if (!(probs[chosen] > 0.0)) throw ZeroProbabilityPull("chosen arm has probability 0");
    std::vector<double> out(spec.arms(), 0.0);
    out[chosen] = spec.loss(chosen) / probs[chosen];
    return out;
}

std::size_t draw_arm(std::span<const double> probs, double u) {
    double cdf = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        cdf += probs[k];
        if (u < cdf) return k;
    }
    for (std::size_t k = probs.size(); k-- > 0;) {
        if (probs[k] > 0.0) return k;
    }
    return 0;
}

Trajectory simulate(const BanditSpec& spec, const RateSchedule& schedule, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("horizon must be >= 1");
    const std::size_t arms = spec.arms();
    Trajectory traj{spec, schedule, n, seed, std::vector<std::size_t>(n), ProbabilityMatrix(n, arms)};
    Exp3State state(traj.spec, schedule.resolve(n, spec.top_loss()));
    Rng rng(seed);

    for (std::size_t t = 0; t < n; ++t) {
        const auto p = state.probabilities();
        std::copy(p.begin(), p.end(), traj.true_path.row(t).begin());

        const std::size_t arm = draw_arm(p, rng.uniform());
        traj.arms[t] = arm;
        if (!(p[arm] > 0.0)) throw SimulationCollapse(t + 1);
        if (t + 1 < n) state.update(arm);
    }
    return traj;
}

ProbabilityPath probability_path(const BanditSpec& spec, const RateSchedule& schedule,
                                 std::span<const std::size_t> arms, std::size_t horizon) {
    if (horizon > arms.size()) throw DomainError("replay horizon exceeds the observed sequence");
    for (std::size_t a : arms) {
        if (a >= spec.arms()) throw DomainError("observed arm index out of range");
    }
    const std::size_t k_arms = spec.arms();
    ProbabilityPath path{ProbabilityMatrix(horizon, k_arms), ProbabilityMatrix(horizon, k_arms)};
    if (horizon == 0) return path;

    Exp3State state(spec, schedule.resolve(arms.size(), spec.top_loss()));
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto p = state.probabilities();
        const auto l = state.cumulative_loss();
        std::copy(p.begin(), p.end(), path.probs.row(t).begin());
        std::copy(l.begin(), l.end(), path.cum_loss_est.row(t).begin());
        if (t + 1 < horizon && !state.update(arms[t])) throw ReplayCollapse(t + 1);
    }
    return path;
}

void recompute_true_path(Trajectory& trajectory) {
    if (trajectory.arms.size() != trajectory.n) throw DomainError("arm sequence length differs from n");
    trajectory.true_path =
        probability_path(trajectory.spec, trajectory.schedule, trajectory.arms, trajectory.n).probs;
}

}  // namespace exp3mle
