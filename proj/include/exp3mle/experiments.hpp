#pragma once

// Replication harness: Monte Carlo sweeps over horizons, per-horizon error
// quantiles, trend tests, rate regressions, and empirical audits of the
// prediction/estimation guarantees.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exp3mle/bandit.hpp"
#include "exp3mle/estimator.hpp"
#include "exp3mle/likelihood.hpp"
#include "exp3mle/stats.hpp"

namespace exp3mle {

// Lipschitz constant of the replayed path in delta_0 (c = 11).
inline constexpr double kPathLipschitz = 11.0;

// Mean over t <= upsilon of ||p_t^{eta} - p_t^{eta_hat}||_2^2, both paths replayed
// along the observed arms at constant rates. Propagates ReplayCollapse.
double prediction_error(const Trajectory& trajectory, double eta_n_true, double eta_n_hat, std::size_t upsilon);

// max over t <= horizon and k of |p_{k,t}^{rate_a} - p_{k,t}^{rate_b}|.
double max_path_gap(const Trajectory& trajectory, double rate_a, double rate_b, std::size_t horizon);

// (9c/eps) (sqrt((x+1)/upsilon) + (x+1)/upsilon) with c = 11.
double prediction_error_bound(double x, std::size_t upsilon, double epsilon);

// D = pi_1 e^{-1} / 2 and m = D^2 e^{-(1 - 2 eps)/eps}.
double lower_bound_constant(double pi1, double epsilon);

struct LowerBoundMargin {
    double lhs;  // sum_{t <= upsilon} |p_{1,t}^delta - p_{1,t}^eta|^2
    double rhs;  // m |delta_n - eta_n|^2 sum_{t <= upsilon} N_{t-1}^2
    double margin;
};

// Two-arm (pi_2 = 0) lower bound on the prediction gap in terms of pulls of arm 1.
// Throws DomainError for any other bandit.
LowerBoundMargin prediction_lower_bound_margin(const Trajectory& trajectory, double delta_n, double eta_n,
                                               double epsilon, std::size_t upsilon);

struct EstimationBound {
    bool vacuous;  // B_n <= G_n(x): the guarantee says nothing
    double value;  // ceiling on |eta0_hat - eta0|; NaN when vacuous
    double a_n;
    double b_n;
    double g_n;
};

// Two-arm ceiling on |eta0_hat - eta0| holding with probability 1 - 2e^{-x}.
EstimationBound estimation_error_bound(double x, std::size_t upsilon, double pi1, double epsilon, double upper);

enum class ExperimentKind { Estimation, UpsilonScaling };
enum class EstimationMode { Constant, Truncated };
enum class Metric { RelError, PredError, Upsilon };

struct ExperimentConfig {
    std::string name = "experiment";
    ExperimentKind kind = ExperimentKind::Estimation;
    BanditSpec spec{{0.8, 0.0}};
    EstimationMode mode = EstimationMode::Truncated;
    double eta_true = 0.3;  // constant eta, or eta_0 of the polynomial schedule
    ThetaBox theta{0.1, 0.8};
    double alpha = 0.5;
    double epsilon = 1e-7;
    Truncation truncation = Truncation::Empirical;
    std::size_t grid_points = 50;
    std::vector<std::size_t> n_values;
    std::size_t replications = 100;
    std::uint64_t base_seed = 2023;
    OptimizerConfig optimizer;
    double quantile_level = 0.95;
    // Summary statistic per n fed to the trend test and the regression:
    // the quantile for error metrics, the mean for Upsilon.
    Metric trend_metric = Metric::RelError;
    stats::Alternative trend_alternative = stats::Alternative::Decreasing;
    Metric regression_metric = Metric::RelError;
    double regression_exponent = -0.25;
    std::optional<double> audit_x;  // enables bound audits at this x
    std::size_t jobs = 1;

    void validate() const;
};

struct ExperimentRecord {
    std::size_t n;
    std::size_t rep;
    std::uint64_t seed;
    double eta_true;
    double eta_hat;     // NaN when not estimated
    double rel_error;   // NaN when not estimated
    double pred_error;  // NaN unless truncated estimation
    std::size_t upsilon;
    bool collapsed;
    // Audit columns (NaN when not audited).
    double pred_bound = std::numeric_limits<double>::quiet_NaN();
    double est_bound = std::numeric_limits<double>::quiet_NaN();
    double lower_bound_margin = std::numeric_limits<double>::quiet_NaN();
};

struct PerNSummary {
    std::size_t n;
    std::size_t completed;  // non-collapsed records
    double rel_error_quantile;
    double pred_error_quantile;
    double mean_upsilon;
    std::size_t min_upsilon;
};

struct TrendSummary {
    bool available;  // false when fewer than 3 horizons or degenerate
    double rho;
    double p_value;
};

struct AuditSummary {
    std::size_t audited = 0;
    std::size_t pred_bound_exceeded = 0;
    std::size_t est_bound_applicable = 0;  // non-vacuous cases
    std::size_t est_bound_exceeded = 0;
    std::size_t lower_bound_checked = 0;
    std::size_t lower_bound_violations = 0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<ExperimentRecord> records;  // sorted by (n, rep)
    std::vector<PerNSummary> per_n;
    TrendSummary trend;
    std::optional<stats::RateFit> regression;
    AuditSummary audit;
    std::size_t collapsed = 0;
};

// Summary value of `metric` at each horizon (quantile for errors, mean for Upsilon).
std::vector<double> per_n_metric(const ExperimentReport& report, Metric metric);

// One record: simulate, estimate, score. Never throws on collapse; the record is flagged instead.
ExperimentRecord run_replicate(const ExperimentConfig& config, std::size_t n, std::size_t rep);

// Runs every (n, rep) pair (in parallel when config.jobs > 1) and aggregates.
// Output is identical for any job count.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Aggregation step alone; exposed so reports can be rebuilt from records.
void summarize(ExperimentReport& report);

// Ten geometrically spaced horizons from lo to hi (rounded to integers).
std::vector<std::size_t> geometric_grid(std::size_t lo, std::size_t hi, std::size_t count);

// Log-likelihood profile of a constant-rate trajectory over candidate rates.
struct ProfilePoint {
    double delta;
    LikelihoodValue loglik;
};
std::vector<ProfilePoint> likelihood_profile(const Trajectory& trajectory, std::span<const double> deltas);

// Profile sweep: for each (n, rep), simulate at the constant rate `eta` and
// evaluate the untruncated log-likelihood at every delta.
struct ProfileConfig {
    std::string name = "profile";
    BanditSpec spec{{0.8, 0.0}};
    double eta = 0.3;
    std::vector<std::size_t> n_values;
    std::size_t replications = 1;
    std::uint64_t base_seed = 2023;
    std::vector<double> deltas;
    std::size_t jobs = 1;

    void validate() const;
};

struct ProfileRow {
    std::size_t n;
    std::size_t rep;
    std::uint64_t seed;
    double delta;
    LikelihoodValue loglik;
    bool collapsed;
};

// Rows sorted by (n, rep, delta index); identical for any job count.
std::vector<ProfileRow> run_likelihood_profile(const ProfileConfig& config);

}  // namespace exp3mle
