#include "exp3mle/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "exp3mle/errors.hpp"
#include "exp3mle/rng.hpp"

namespace exp3mle {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ProbabilityPath constant_path(const Trajectory& trajectory, double rate, std::size_t horizon) {
    return probability_path(trajectory.spec, RateSchedule::constant(rate), trajectory.arms, horizon);
}

void check_horizon(const Trajectory& trajectory, std::size_t upsilon) {
    if (upsilon == 0 || upsilon > trajectory.n) throw DomainError("horizon must lie in [1, n]");
}

std::vector<double> finite_only(const std::vector<double>& values) {
    std::vector<double> out;
    for (double v : values)
        if (std::isfinite(v)) out.push_back(v);
    return out;
}

double metric_of(const ExperimentRecord& r, Metric metric) {
    switch (metric) {
    case Metric::RelError:
        return r.rel_error;
    case Metric::PredError:
        return r.pred_error;
    case Metric::Upsilon:
        return static_cast<double>(r.upsilon);
    }
    return kNaN;
}

}  // namespace

double prediction_error(const Trajectory& trajectory, double eta_n_true, double eta_n_hat, std::size_t upsilon) {
    if (!(eta_n_true > 0.0) || !(eta_n_hat > 0.0)) throw DomainError("rates must be positive");
    check_horizon(trajectory, upsilon);
    const ProbabilityPath a = constant_path(trajectory, eta_n_true, upsilon);
    const ProbabilityPath b = constant_path(trajectory, eta_n_hat, upsilon);
    long double total = 0.0L;
    for (std::size_t t = 0; t < upsilon; ++t) {
        const auto ra = a.probs.row(t);
        const auto rb = b.probs.row(t);
        for (std::size_t k = 0; k < ra.size(); ++k) {
            const long double d = static_cast<long double>(ra[k]) - rb[k];
            total += d * d;
        }
    }
    return static_cast<double>(total / static_cast<long double>(upsilon));
}

double max_path_gap(const Trajectory& trajectory, double rate_a, double rate_b, std::size_t horizon) {
    check_horizon(trajectory, horizon);
    const ProbabilityPath a = constant_path(trajectory, rate_a, horizon);
    const ProbabilityPath b = constant_path(trajectory, rate_b, horizon);
    double gap = 0.0;
    for (std::size_t t = 0; t < horizon; ++t)
        for (std::size_t k = 0; k < trajectory.spec.arms(); ++k)
            gap = std::max(gap, std::abs(a.probs(t, k) - b.probs(t, k)));
    return gap;
}

double prediction_error_bound(double x, std::size_t upsilon, double epsilon) {
    if (!(x >= 0.0) || upsilon == 0 || !(epsilon > 0.0)) throw DomainError("need x >= 0, upsilon >= 1, epsilon > 0");
    const double u = (x + 1.0) / static_cast<double>(upsilon);
    return 9.0 * kPathLipschitz / epsilon * (std::sqrt(u) + u);
}

double lower_bound_constant(double pi1, double epsilon) {
    const double d = pi1 * std::exp(-1.0) / 2.0;
    return d * d * std::exp(-(1.0 - 2.0 * epsilon) / epsilon);
}

LowerBoundMargin prediction_lower_bound_margin(const Trajectory& trajectory, double delta_n, double eta_n,
                                               double epsilon, std::size_t upsilon) {
    if (!trajectory.spec.is_two_arm_zero_loss()) throw DomainError("lower bound needs two arms with pi_2 = 0");
    check_horizon(trajectory, upsilon);
    const ProbabilityPath pd = constant_path(trajectory, delta_n, upsilon);
    const ProbabilityPath pe = constant_path(trajectory, eta_n, upsilon);
    long double lhs = 0.0L;
    long double pulls_sq = 0.0L;
    std::size_t pulls = 0;  // N_{t-1}
    for (std::size_t t = 0; t < upsilon; ++t) {
        const long double d = static_cast<long double>(pd.probs(t, 0)) - pe.probs(t, 0);
        lhs += d * d;
        pulls_sq += static_cast<long double>(pulls) * pulls;
        if (trajectory.arms[t] == 0) ++pulls;
    }
    const double gap = delta_n - eta_n;
    const double rhs = static_cast<double>(lower_bound_constant(trajectory.spec.top_loss(), epsilon) * gap * gap *
                                           pulls_sq);
    return LowerBoundMargin{static_cast<double>(lhs), rhs, static_cast<double>(lhs) - rhs};
}

EstimationBound estimation_error_bound(double x, std::size_t upsilon, double pi1, double epsilon, double upper) {
    if (!(x >= 0.0) || upsilon == 0) throw DomainError("need x >= 0 and upsilon >= 1");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw DomainError("epsilon must lie in (0, 1/2)");
    const double u = static_cast<double>(upsilon);
    const double a = u * (u - 1.0) * (2.0 * u - 1.0) / 96.0;
    const double b = a / (u * u);
    const double log_term = std::log(2.0 * u) + x;
    const double g = 2.0 / 5.0 * std::sqrt(2.0 * log_term) * std::sqrt(u) + log_term;
    if (b <= g) return EstimationBound{true, kNaN, a, b, g};
    const double m = lower_bound_constant(pi1, epsilon);
    const double big_m = upper * pi1 / (0.5 - epsilon) * std::sqrt(9.0 * kPathLipschitz / (2.0 * m * epsilon));
    const double value = big_m * std::sqrt((std::sqrt((x + 1.0) * u) + x + 1.0) / (b - g));
    return EstimationBound{false, value, a, b, g};
}

void ExperimentConfig::validate() const {
    if (n_values.empty()) throw DomainError("n_values must be non-empty");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (n_values[i] == 0) throw DomainError("horizons must be positive");
        if (i > 0 && n_values[i] <= n_values[i - 1]) throw DomainError("n_values must be strictly increasing");
    }
    if (replications == 0) throw DomainError("replications must be >= 1");
    if (!(eta_true > 0.0)) throw DomainError("eta_true must be positive");
    if (!(quantile_level >= 0.0 && quantile_level <= 1.0)) throw DomainError("quantile_level must lie in [0, 1]");
    if (jobs == 0) throw DomainError("jobs must be >= 1");
    if (mode == EstimationMode::Truncated || kind == ExperimentKind::UpsilonScaling) {
        TruncationConfig{epsilon, alpha, theta, grid_points}.validate();
        if (!theta.contains(eta_true)) throw DomainError("eta_true lies outside theta");
    }
    if (audit_x && !(*audit_x >= 0.0)) throw DomainError("audit x must be >= 0");
    optimizer.validate();
}

ExperimentRecord run_replicate(const ExperimentConfig& config, std::size_t n, std::size_t rep) {
    const std::uint64_t seed = derive_seed(config.base_seed, n, rep);
    ExperimentRecord rec{n, rep, seed, config.eta_true, kNaN, kNaN, kNaN, 0, false};

    const bool constant = config.kind == ExperimentKind::Estimation && config.mode == EstimationMode::Constant;
    const RateSchedule schedule = constant ? RateSchedule::constant(config.eta_true)
                                           : RateSchedule::polynomial(config.eta_true, config.alpha);
    OptimizerConfig opt = config.optimizer;
    opt.seed = mix64(seed ^ config.optimizer.seed);

    try {
        const Trajectory traj = simulate(config.spec, schedule, n, seed);

        if (config.kind == ExperimentKind::UpsilonScaling) {
            rec.upsilon = upsilon_max(traj, TruncationConfig{config.epsilon, config.alpha, config.theta,
                                                             config.grid_points});
            return rec;
        }

        if (constant) {
            const EstimationResult est = mle_constant(traj, config.theta.lower, config.theta.upper, opt);
            rec.eta_hat = est.eta0_hat;
            rec.rel_error = std::abs(est.eta0_hat - config.eta_true) / config.eta_true;
            rec.upsilon = n;
            return rec;
        }

        const EstimationResult est =
            mle_truncated(traj, config.theta, config.alpha, config.epsilon, config.truncation, opt,
                          config.grid_points);
        rec.eta_hat = est.eta0_hat;
        rec.rel_error = std::abs(est.eta0_hat - config.eta_true) / config.eta_true;
        rec.upsilon = est.upsilon_used;
        if (est.upsilon_used == 0) return rec;

        const double eta_n = traj.true_rate();
        rec.pred_error = prediction_error(traj, eta_n, est.eta_n_hat, est.upsilon_used);
        if (config.audit_x) {
            rec.pred_bound = prediction_error_bound(*config.audit_x, est.upsilon_used, config.epsilon);
            if (config.spec.is_two_arm_zero_loss() && config.epsilon < 0.5) {
                const EstimationBound eb = estimation_error_bound(*config.audit_x, est.upsilon_used,
                                                                  config.spec.top_loss(), config.epsilon,
                                                                  config.theta.upper);
                rec.est_bound = eb.value;
                rec.lower_bound_margin =
                    prediction_lower_bound_margin(traj, est.eta_n_hat, eta_n, config.epsilon, est.upsilon_used)
                        .margin;
            }
        }
    } catch (const SimulationCollapse&) {
        rec.collapsed = true;
    } catch (const ReplayCollapse&) {
        rec.collapsed = true;
    } catch (const AllNegInfinity&) {
        rec.collapsed = true;
    }
    return rec;
}

std::vector<double> per_n_metric(const ExperimentReport& report, Metric metric) {
    std::vector<double> out;
    for (const PerNSummary& s : report.per_n) {
        switch (metric) {
        case Metric::RelError:
            out.push_back(s.rel_error_quantile);
            break;
        case Metric::PredError:
            out.push_back(s.pred_error_quantile);
            break;
        case Metric::Upsilon:
            out.push_back(s.mean_upsilon);
            break;
        }
    }
    return out;
}

void summarize(ExperimentReport& report) {
    const ExperimentConfig& cfg = report.config;
    std::sort(report.records.begin(), report.records.end(), [](const auto& a, const auto& b) {
        return a.n != b.n ? a.n < b.n : a.rep < b.rep;
    });

    report.per_n.clear();
    report.collapsed = 0;
    report.audit = AuditSummary{};
    for (std::size_t n : cfg.n_values) {
        std::vector<double> rel, pred;
        double ups_sum = 0.0;
        std::size_t ups_min = std::numeric_limits<std::size_t>::max();
        std::size_t done = 0;
        for (const ExperimentRecord& r : report.records) {
            if (r.n != n) continue;
            if (r.collapsed) {
                ++report.collapsed;
                continue;
            }
            ++done;
            rel.push_back(metric_of(r, Metric::RelError));
            pred.push_back(metric_of(r, Metric::PredError));
            ups_sum += static_cast<double>(r.upsilon);
            ups_min = std::min(ups_min, r.upsilon);
        }
        const auto q = [&](const std::vector<double>& v) {
            const std::vector<double> f = finite_only(v);
            return f.empty() ? kNaN : stats::quantile(f, cfg.quantile_level);
        };
        report.per_n.push_back(PerNSummary{n, done, q(rel), q(pred),
                                           done ? ups_sum / static_cast<double>(done) : kNaN,
                                           done ? ups_min : 0});
    }

    for (const ExperimentRecord& r : report.records) {
        if (r.collapsed || std::isnan(r.pred_bound)) continue;
        ++report.audit.audited;
        if (r.pred_error > r.pred_bound) ++report.audit.pred_bound_exceeded;
        if (!std::isnan(r.est_bound)) {
            ++report.audit.est_bound_applicable;
            if (std::abs(r.eta_hat - r.eta_true) > r.est_bound) ++report.audit.est_bound_exceeded;
        }
        if (!std::isnan(r.lower_bound_margin)) {
            ++report.audit.lower_bound_checked;
            if (r.lower_bound_margin < 0.0) ++report.audit.lower_bound_violations;
        }
    }

    std::vector<double> ns;
    for (std::size_t n : cfg.n_values) ns.push_back(static_cast<double>(n));

    report.trend = TrendSummary{false, kNaN, kNaN};
    const std::vector<double> trend_y = per_n_metric(report, cfg.trend_metric);
    const bool trend_ok = std::all_of(trend_y.begin(), trend_y.end(), [](double v) { return std::isfinite(v); });
    if (ns.size() >= 3 && trend_ok) {
        try {
            const stats::SpearmanResult s = stats::spearman_test(ns, trend_y, cfg.trend_alternative);
            report.trend = TrendSummary{true, s.rho, s.p_value};
        } catch (const DegenerateInput&) {
        }
    }

    report.regression.reset();
    const std::vector<double> reg_y = per_n_metric(report, cfg.regression_metric);
    const bool reg_ok = std::all_of(reg_y.begin(), reg_y.end(), [](double v) { return std::isfinite(v); });
    if (ns.size() >= 2 && reg_ok) {
        try {
            report.regression = stats::rate_regression(ns, reg_y, cfg.regression_exponent);
        } catch (const DegenerateInput&) {
        }
    }
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    struct Task {
        std::size_t n;
        std::size_t rep;
    };
    std::vector<Task> tasks;
    for (std::size_t n : config.n_values)
        for (std::size_t rep = 0; rep < config.replications; ++rep) tasks.push_back({n, rep});

    ExperimentReport report;
    report.config = config;
    report.records.resize(tasks.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                report.records[i] = run_replicate(config, tasks[i].n, tasks[i].rep);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = tasks.size();
            }
        }
    };
    const std::size_t jobs = std::min(config.jobs, tasks.size());
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    summarize(report);
    return report;
}

std::vector<std::size_t> geometric_grid(std::size_t lo, std::size_t hi, std::size_t count) {
    if (lo == 0 || hi < lo || count < 2) throw DomainError("need 0 < lo <= hi and count >= 2");
    std::vector<std::size_t> out;
    const double ratio = std::log(static_cast<double>(hi) / static_cast<double>(lo)) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        const auto v = static_cast<std::size_t>(std::llround(static_cast<double>(lo) * std::exp(ratio * i)));
        if (out.empty() || v > out.back()) out.push_back(v);
    }
    out.back() = hi;
    return out;
}

std::vector<ProfilePoint> likelihood_profile(const Trajectory& trajectory, std::span<const double> deltas) {
    std::vector<ProfilePoint> out;
    out.reserve(deltas.size());
    for (double d : deltas) out.push_back(ProfilePoint{d, full_log_likelihood(trajectory, d)});
    return out;
}

void ProfileConfig::validate() const {
    if (n_values.empty()) throw DomainError("n_values must be non-empty");
    if (replications == 0) throw DomainError("replications must be >= 1");
    if (deltas.empty()) throw DomainError("deltas must be non-empty");
    for (double d : deltas)
        if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("deltas must be finite and >= 0");
    if (!(eta >= 0.0)) throw DomainError("eta must be >= 0");
    if (jobs == 0) throw DomainError("jobs must be >= 1");
}

std::vector<ProfileRow> run_likelihood_profile(const ProfileConfig& config) {
    config.validate();
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    for (std::size_t n : config.n_values)
        for (std::size_t rep = 0; rep < config.replications; ++rep) tasks.emplace_back(n, rep);

    std::vector<std::vector<ProfileRow>> blocks(tasks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const auto [n, rep] = tasks[i];
            const std::uint64_t seed = derive_seed(config.base_seed, n, rep);
            std::vector<ProfileRow>& rows = blocks[i];
            try {
                const Trajectory traj = simulate(config.spec, RateSchedule::constant(config.eta), n, seed);
                for (const ProfilePoint& p : likelihood_profile(traj, config.deltas))
                    rows.push_back(ProfileRow{n, rep, seed, p.delta, p.loglik, false});
            } catch (const SimulationCollapse&) {
                for (double d : config.deltas) rows.push_back(ProfileRow{n, rep, seed, d, {}, true});
            }
        }
    };
    const std::size_t jobs = std::min(config.jobs, tasks.size());
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    std::vector<ProfileRow> out;
    for (auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace exp3mle
