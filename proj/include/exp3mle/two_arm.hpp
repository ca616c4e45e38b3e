#pragma once

// Closed-form analysis of the two-arm case with pi = (pi_1, 0).
//
// Only pulls of the lossy arm move the learner, so the probability of pulling
// it after its i-th pull follows the scalar recursion
//   q_0 = 1/2,  q_{i+1} = q_i e^{-gamma pi_1 / q_i} / ((1 - q_i) + q_i e^{-gamma pi_1 / q_i}).
// Everything here is expressed through that recursion.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace exp3mle::two_arm {

// Values below this are treated as underflowed: q sequences stop, DP states are pruned.
inline constexpr double kUnderflowFloor = 1e-300;

struct QSequence {
    double eta;
    double pi1;
    std::vector<double> values;  // q_0 .. q_m, all >= kUnderflowFloor
    bool underflowed;            // true if the recursion stopped because q_{m+1} < kUnderflowFloor
};

// One step of the recursion with gamma * pi_1 = `rate_loss`.
double q_next(double q, double rate_loss);

// q_0 .. q_count, stopping early (flagged) once a value drops below kUnderflowFloor.
QSequence q_sequence(double eta, double pi1, std::size_t count);

// Largest i with q_i >= eta * pi_1. Requires 0 < eta * pi_1 < 1/2, else DomainError.
std::size_t capital_I(double eta, double pi1);

// Largest i with q_i >= 1/n. Requires n >= 2 and eta > 0.
std::size_t capital_J(double n, double eta, double pi1);

// Number of times y <- 2 ln y can be applied starting from n while staying >= 2.
// Requires n >= 2.
std::size_t log_star(double n);

// f^{(k)}(2) with f(x) = e^{x/2}; +infinity once it overflows.
double tower(std::size_t k);

struct TetrationRow {
    std::size_t k;
    std::size_t index;  // I(eta) + k + 1
    double q;           // q at `index`, or kUnderflowFloor as an upper bound when underflowed
    bool q_underflowed;
    double bound;       // 1 / f^{(k)}(2)
    double margin;      // bound - q
};

struct TetrationReport {
    long informative_index;  // I(eta); -1 when eta * pi_1 > 1/2 (empty set)
    std::vector<TetrationRow> rows;

    bool holds() const;
};

// Checks q_{I+k+1} <= 1/f^{(k)}(2) for k = 0..k_max, stopping once f^{(k)}(2) overflows.
// For eta * pi_1 > 1/2 the defining set of I is empty and I = -1 is used.
TetrationReport tetration_check(double eta, double pi1, std::size_t k_max);

enum class KLMethod { Exact, MonteCarlo };

struct KLResult {
    double value;
    KLMethod method;
    std::size_t reps = 0;       // Monte Carlo only
    double std_error = 0.0;     // Monte Carlo only
    double pruned_mass = 0.0;   // Exact only: occupancy dropped below the floor
};

// KL(P^eta || P^delta) of the first n arm choices, by dynamic programming over
// (t, pulls of arm 1 before t) summing per-step Bernoulli divergences.
KLResult kl_exact(double eta, double delta, double pi1, std::size_t n);

// Mean and standard error of log dP^eta/dP^delta over `reps` trajectories drawn under eta.
KLResult kl_monte_carlo(double eta, double delta, double pi1, std::size_t n, std::size_t reps,
                        std::uint64_t seed);

struct HardPair {
    double delta;
    double eta;
    std::size_t j_index;  // J(n, R)
    double q_target;      // q_{J(n,R)+1}^delta, in [1/(2n), 1/n)
};

// Bisection on gamma -> q_{J(n,R)+1}^gamma for delta with q in [1/(2n), 1/n);
// eta = delta + (log n)^{-(1+beta)}. Requires 0 < R pi_1 < 1/2.
HardPair hard_pair(std::size_t n, double R, double pi1, double beta);

}  // namespace exp3mle::two_arm
