#pragma once

// Exp3 for fixed losses: simulation of a learner and deterministic replay of
// its probability path for any candidate learning rate along observed arms.
//
// Arms are 0-based in the C++ API (arm 0 carries the largest loss). The JSON
// trajectory format is 1-based.

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace exp3mle {

// K arms with fixed losses sorted descending in [0, 1].
class BanditSpec {
public:
    // Throws DomainError unless K >= 2 and 1 >= losses[0] >= ... >= losses[K-1] >= 0.
    explicit BanditSpec(std::vector<double> losses);

    std::size_t arms() const noexcept { return losses_.size(); }
    std::span<const double> losses() const noexcept { return losses_; }
    double loss(std::size_t arm) const { return losses_.at(arm); }
    double top_loss() const noexcept { return losses_.front(); }

    // Two arms and the second one has zero loss.
    bool is_two_arm_zero_loss() const noexcept { return arms() == 2 && losses_[1] == 0.0; }

    friend bool operator==(const BanditSpec&, const BanditSpec&) = default;

private:
    std::vector<double> losses_;
};

struct ConstantRate {
    double eta;
    friend bool operator==(const ConstantRate&, const ConstantRate&) = default;
};

// eta_n = eta0 / (n^alpha * pi_1)
struct PolynomialRate {
    double eta0;
    double alpha;
    friend bool operator==(const PolynomialRate&, const PolynomialRate&) = default;
};

class RateSchedule {
public:
    static RateSchedule constant(double eta);
    static RateSchedule polynomial(double eta0, double alpha);

    bool is_constant() const noexcept { return std::holds_alternative<ConstantRate>(rate_); }
    bool is_polynomial() const noexcept { return !is_constant(); }
    const ConstantRate& as_constant() const { return std::get<ConstantRate>(rate_); }
    const PolynomialRate& as_polynomial() const { return std::get<PolynomialRate>(rate_); }

    // Rate actually used by the learner at horizon n.
    double resolve(std::size_t n, double top_loss) const;

    friend bool operator==(const RateSchedule&, const RateSchedule&) = default;

private:
    explicit RateSchedule(std::variant<ConstantRate, PolynomialRate> r) : rate_(r) {}
    std::variant<ConstantRate, PolynomialRate> rate_;
};

// Parameter box [r, R] for eta_0. lower == upper is accepted as a degenerate point box.
struct ThetaBox {
    double lower;
    double upper;

    ThetaBox(double lower, double upper);
    bool contains(double x) const noexcept { return x >= lower && x <= upper; }
};

// Resolve a canonical parameter delta_0 to the learner's rate at horizon n.
double resolve_polynomial_rate(double delta0, double alpha, std::size_t n, double top_loss);

// Row-major T x K matrix of probability rows.
class ProbabilityMatrix {
public:
    ProbabilityMatrix() = default;
    ProbabilityMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double operator()(std::size_t t, std::size_t k) const { return data_[t * cols_ + k]; }
    double& operator()(std::size_t t, std::size_t k) { return data_[t * cols_ + k]; }
    std::span<const double> row(std::size_t t) const { return {data_.data() + t * cols_, cols_}; }
    std::span<double> row(std::size_t t) { return {data_.data() + t * cols_, cols_}; }

    friend bool operator==(const ProbabilityMatrix&, const ProbabilityMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct Trajectory {
    BanditSpec spec;
    RateSchedule schedule;
    std::size_t n;
    std::uint64_t seed;
    std::vector<std::size_t> arms;  // I_1..I_n, 0-based
    ProbabilityMatrix true_path;     // row t-1 holds p_t

    // Learner's rate at this trajectory's horizon.
    double true_rate() const { return schedule.resolve(n, spec.top_loss()); }
};

struct ProbabilityPath {
    ProbabilityMatrix probs;         // row t-1 holds p_t^delta
    ProbabilityMatrix cum_loss_est;  // row t-1 holds L~_t (row 0 is all zeros)
};

// Streaming Exp3 state for a fixed rate. Every simulation and replay in the
// library goes through this class, which is what makes replays bit-exact.
class Exp3State {
public:
    Exp3State(const BanditSpec& spec, double eta);

    std::span<const double> probabilities() const noexcept { return probs_; }
    // log p_k from the log-sum-exp form; finite even where probabilities() underflowed to 0.
    std::span<const double> log_probabilities() const noexcept { return log_probs_; }
    std::span<const double> cumulative_loss() const noexcept { return cum_loss_; }
    double rate() const noexcept { return eta_; }
    // Bumped whenever the probabilities change; lets callers cache per-row work.
    std::uint64_t revision() const noexcept { return revision_; }

    // Charges pi_arm / p_arm to `arm` and recomputes the softmax. Returns false
    // and leaves the state untouched when p_arm == 0. Cumulative losses saturate
    // at the largest finite double.
    bool update(std::size_t arm);

private:
    const BanditSpec* spec_;
    double eta_;
    std::vector<double> cum_loss_;
    std::vector<double> probs_;
    std::vector<double> log_probs_;
    std::uint64_t revision_ = 0;
};

std::vector<double> init_policy(const BanditSpec& spec);

// p_i = exp(-eta L_i) / sum_k exp(-eta L_k), evaluated with max-subtraction.
// Entries may underflow to exactly 0. Throws NonFiniteInput on NaN/inf losses
// and DomainError on negative or NaN eta.
std::vector<double> softmax_update(std::span<const double> cum_loss_est, double eta);

// pi~_i = pi_i / p_i on the chosen arm, 0 elsewhere. Throws ZeroProbabilityPull if p[chosen] == 0.
std::vector<double> importance_loss(const BanditSpec& spec, std::span<const double> probs, std::size_t chosen);

// Inverse-CDF draw: first arm whose cumulative mass exceeds u in [0, 1). If
// rounding leaves the total short of u, the last arm with positive mass wins.
std::size_t draw_arm(std::span<const double> probs, double u);

// Draws I_t by inverse CDF with one uniform per step (ties go to the lower
// index). Throws SimulationCollapse if a drawn arm has probability 0.
Trajectory simulate(const BanditSpec& spec, const RateSchedule& schedule, std::size_t n, std::uint64_t seed);

// Replays Exp3 with the candidate schedule along `arms` (length n, which also
// fixes the horizon used to resolve a polynomial schedule) for the first
// `horizon` rounds. Throws ReplayCollapse(t) if the arm observed at round
// t < horizon has replayed probability 0.
ProbabilityPath probability_path(const BanditSpec& spec, const RateSchedule& schedule,
                                 std::span<const std::size_t> arms, std::size_t horizon);

// Rebuilds the true path of a trajectory whose arms are known (used after deserialization).
void recompute_true_path(Trajectory& trajectory);

}  // namespace exp3mle
