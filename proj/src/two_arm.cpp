#include "exp3mle/two_arm.hpp"

#include <cmath>
#include <limits>

#include "exp3mle/bandit.hpp"
#include "exp3mle/errors.hpp"
#include "exp3mle/rng.hpp"

namespace exp3mle::two_arm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError(std::string(what) + " must be positive and finite");
}

void check_pi1(double pi1) {
    if (!(pi1 > 0.0 && pi1 <= 1.0)) throw DomainError("pi1 must lie in (0, 1]");
}

// q_i and log q_i carried together; the log form stays finite long after q underflows.
class LogQTable {
public:
    explicit LogQTable(double rate_loss) : rate_loss_(rate_loss), log_rate_loss_(std::log(rate_loss)) {
        q_.push_back(0.5);
        log_q_.push_back(-std::log(2.0));
    }

    double q(std::size_t i) {
        extend(i);
        return q_[i];
    }
    double log_q(std::size_t i) {
        extend(i);
        return log_q_[i];
    }

private:
    void extend(std::size_t i) {
        while (q_.size() <= i) {
            const double q = q_.back();
            const double lq = log_q_.back();
            double next_log = -kInf;
            if (lq > -kInf) {
                const double x = std::exp(log_rate_loss_ - lq);  // rate_loss / q
                if (std::isfinite(x)) {
                    const double decay = std::exp(-x);
                    next_log = lq - x - std::log((1.0 - q) + q * decay);
                }
            }
            log_q_.push_back(next_log);
            q_.push_back(std::exp(next_log));
        }
    }

    double rate_loss_;
    double log_rate_loss_;
    std::vector<double> q_;
    std::vector<double> log_q_;
};

// KL(Bernoulli(q_eta) || Bernoulli(q_delta)) from probabilities and their logs.
double bernoulli_kl(double q_eta, double log_q_eta, double q_delta, double log_q_delta) {
    const double pull = q_eta > 0.0 ? q_eta * (log_q_eta - log_q_delta) : 0.0;
    const double stay = (1.0 - q_eta) * (std::log1p(-q_eta) - std::log1p(-q_delta));
    return pull + stay;
}

// q at `index` by plain iteration (no floor).
double q_at(double rate_loss, std::size_t index) {
    double q = 0.5;
    for (std::size_t i = 0; i < index && q > 0.0; ++i) q = q_next(q, rate_loss);
    return q;
}

long informative_index(double rate_loss) {
    if (rate_loss > 0.5) return -1;
    long i = 0;
    double q = 0.5;
    while (true) {
        const double next = q_next(q, rate_loss);
        if (!(next >= rate_loss)) return i;
        q = next;
        ++i;
    }
}

}  // namespace

double q_next(double q, double rate_loss) {
    if (!(q > 0.0)) return 0.0;
    const double decay = q * std::exp(-rate_loss / q);
    return decay / ((1.0 - q) + decay);
}

QSequence q_sequence(double eta, double pi1, std::size_t count) {
    check_positive(eta, "eta");
    check_pi1(pi1);
    QSequence seq{eta, pi1, {0.5}, false};
    seq.values.reserve(count + 1);
    const double rate_loss = eta * pi1;
    for (std::size_t i = 0; i < count; ++i) {
        const double next = q_next(seq.values.back(), rate_loss);
        if (next < kUnderflowFloor) {
            seq.underflowed = true;
            break;
        }
        seq.values.push_back(next);
    }
    return seq;
}

std::size_t capital_I(double eta, double pi1) {
    check_positive(eta, "eta");
    check_pi1(pi1);
    const double rate_loss = eta * pi1;
    if (!(rate_loss < 0.5)) throw DomainError("I(eta) needs 0 < eta * pi1 < 1/2");
    return static_cast<std::size_t>(informative_index(rate_loss));
}

std::size_t capital_J(double n, double eta, double pi1) {
    if (!(n >= 2.0)) throw DomainError("J(n, eta) needs n >= 2");
    check_positive(eta, "eta");
    check_pi1(pi1);
    const double threshold = 1.0 / n;
    const double rate_loss = eta * pi1;
    std::size_t i = 0;
    double q = 0.5;
    while (true) {
        const double next = q_next(q, rate_loss);
        if (!(next >= threshold)) return i;
        q = next;
        ++i;
    }
}

std::size_t log_star(double n) {
    if (!(n >= 2.0)) throw DomainError("log* needs n >= 2");
    std::size_t k = 0;
    double y = n;
    while (std::isfinite(y)) {
        const double next = 2.0 * std::log(y);
        if (!(next >= 2.0)) break;
        y = next;
        ++k;
    }
    return k;
}

double tower(std::size_t k) {
    double y = 2.0;
    for (std::size_t i = 0; i < k && std::isfinite(y); ++i) y = std::exp(y / 2.0);
    return y;
}

bool TetrationReport::holds() const {
    for (const auto& row : rows) {
        if (row.margin < 0.0) return false;
    }
    return true;
}

TetrationReport tetration_check(double eta, double pi1, std::size_t k_max) {
    check_positive(eta, "eta");
    check_pi1(pi1);
    TetrationReport report{informative_index(eta * pi1), {}};
    const auto first = static_cast<std::size_t>(report.informative_index + 1);
    const QSequence seq = q_sequence(eta, pi1, first + k_max);
    for (std::size_t k = 0; k <= k_max; ++k) {
        const double f = tower(k);
        if (!std::isfinite(f)) break;
        TetrationRow row{k, first + k, 0.0, false, 1.0 / f, 0.0};
        if (row.index < seq.values.size()) {
            row.q = seq.values[row.index];
        } else {
            row.q = kUnderflowFloor;
            row.q_underflowed = true;
        }
        row.margin = row.bound - row.q;
        report.rows.push_back(row);
    }
    return report;
}

KLResult kl_exact(double eta, double delta, double pi1, std::size_t n) {
    check_positive(eta, "eta");
    check_positive(delta, "delta");
    check_pi1(pi1);
    if (n == 0) throw DomainError("n must be >= 1");

    KLResult result{0.0, KLMethod::Exact};
    if (eta == delta) return result;

    LogQTable q_eta(eta * pi1);
    LogQTable q_delta(delta * pi1);
    std::vector<double> step_kl;  // per-state conditional divergence, filled lazily
    auto state_kl = [&](std::size_t i) {
        while (step_kl.size() <= i) {
            const std::size_t j = step_kl.size();
            step_kl.push_back(bernoulli_kl(q_eta.q(j), q_eta.log_q(j), q_delta.q(j), q_delta.log_q(j)));
        }
        return step_kl[i];
    };

    // occupancy[i] = P_eta(arm 1 pulled i times before round t)
    std::vector<double> occupancy{1.0};
    std::size_t low = 0;
    long double total = 0.0L;
    long double pruned = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = low; i < occupancy.size(); ++i) {
            if (occupancy[i] > 0.0) total += static_cast<long double>(occupancy[i]) * state_kl(i);
        }
        if (t + 1 == n) break;
        occupancy.push_back(0.0);
        for (std::size_t i = occupancy.size() - 1; i-- > low;) {
            const double mass = occupancy[i];
            if (mass == 0.0) continue;
            const double pull = q_eta.q(i);
            occupancy[i + 1] += mass * pull;
            occupancy[i] = mass * (1.0 - pull);
        }
        for (std::size_t i = low; i < occupancy.size(); ++i) {
            if (occupancy[i] != 0.0 && occupancy[i] < kUnderflowFloor) {
                pruned += occupancy[i];
                occupancy[i] = 0.0;
            }
        }
        while (low < occupancy.size() && occupancy[low] == 0.0) ++low;
        while (occupancy.size() > low + 1 && occupancy.back() == 0.0) occupancy.pop_back();
        if (low == occupancy.size()) break;
    }
    result.value = static_cast<double>(total);
    result.pruned_mass = static_cast<double>(pruned);
    return result;
}

KLResult kl_monte_carlo(double eta, double delta, double pi1, std::size_t n, std::size_t reps,
                        std::uint64_t seed) {
    check_positive(eta, "eta");
    check_positive(delta, "delta");
    check_pi1(pi1);
    if (n == 0) throw DomainError("n must be >= 1");
    if (reps == 0) throw DomainError("reps must be >= 1");

    const BanditSpec spec({pi1, 0.0});
    long double sum = 0.0L;
    long double sum_sq = 0.0L;
    for (std::size_t r = 0; r < reps; ++r) {
        Exp3State truth(spec, eta);
        Exp3State candidate(spec, delta);
        Rng rng(derive_seed(seed, n, r));
        double llr = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t arm = draw_arm(truth.probabilities(), rng.uniform());
            if (!(truth.probabilities()[arm] > 0.0)) throw SimulationCollapse(t + 1);
            llr += truth.log_probabilities()[arm] - candidate.log_probabilities()[arm];
            if (t + 1 == n) break;
            truth.update(arm);
            if (!candidate.update(arm)) {
                // The candidate can no longer be tracked in double precision;
                // the likelihood ratio is beyond representable range.
                llr = std::numeric_limits<double>::infinity();
                break;
            }
        }
        sum += llr;
        sum_sq += static_cast<long double>(llr) * llr;
    }
    const long double count = static_cast<long double>(reps);
    const long double mean = sum / count;
    KLResult result{static_cast<double>(mean), KLMethod::MonteCarlo, reps};
    if (reps > 1) {
        const long double var = (sum_sq - count * mean * mean) / (count - 1.0L);
        result.std_error = static_cast<double>(std::sqrt(std::max(var, 0.0L) / count));
    } else {
        result.std_error = std::numeric_limits<double>::infinity();
    }
    return result;
}

HardPair hard_pair(std::size_t n, double R, double pi1, double beta) {
    check_positive(R, "R");
    check_pi1(pi1);
    check_positive(beta, "beta");
    if (!(R * pi1 < 0.5)) throw DomainError("hard pair needs 0 < R * pi1 < 1/2");
    if (n < 3) throw DomainError("hard pair needs n >= 3");

    const double nd = static_cast<double>(n);
    const std::size_t j = capital_J(nd, R, pi1);
    const std::size_t target = j + 1;
    const double upper_q = 1.0 / nd;
    const double lower_q = 1.0 / (2.0 * nd);

    double lo = 0.0;  // q_target^0 = 1/2 >= 1/n
    double hi = R;    // q_target^R < 1/n by definition of J
    for (int iter = 0; iter < 4096; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double q = q_at(mid * pi1, target);
        if (q >= upper_q) {
            lo = mid;
        } else if (q < lower_q) {
            hi = mid;
        } else {
            const double gap = std::pow(std::log(nd), -(1.0 + beta));
            return HardPair{mid, mid + gap, j, q};
        }
        if (hi - lo <= 1e-12 * hi) break;
    }
    throw BracketNotFound("no delta with q_{J(n,R)+1} in [1/(2n), 1/n)");
}

}  // namespace exp3mle::two_arm
