#include <cmath>
#include <sstream>

#include "doctest.h"

#include "exp3mle/errors.hpp"
#include "exp3mle/experiments.hpp"
#include "exp3mle/io.hpp"
#include "exp3mle/rng.hpp"

using namespace exp3mle;

TEST_CASE("prediction error") {
    const BanditSpec spec({0.8, 0.6, 0.4, 0.2});
    const Trajectory t = simulate(spec, RateSchedule::polynomial(0.3, 0.5), 2000, 3);
    const double eta = t.true_rate();
    CHECK(prediction_error(t, eta, eta, 100) == 0.0);
    const double e = prediction_error(t, eta, eta * 2.0, 100);
    CHECK(e > 0.0);
    CHECK(e <= 2.0);

    // Oracle: mean squared row distance from explicit paths.
    const ProbabilityPath a = probability_path(spec, RateSchedule::constant(eta), t.arms, 100);
    const ProbabilityPath b = probability_path(spec, RateSchedule::constant(eta * 2.0), t.arms, 100);
    double s = 0.0;
    for (std::size_t r = 0; r < 100; ++r)
        for (std::size_t k = 0; k < 4; ++k) s += (a.probs(r, k) - b.probs(r, k)) * (a.probs(r, k) - b.probs(r, k));
    CHECK(e == doctest::Approx(s / 100.0).epsilon(1e-12));
    CHECK_THROWS_AS(prediction_error(t, 0.0, eta, 10), DomainError);
    CHECK_THROWS_AS(prediction_error(t, eta, eta, 0), DomainError);
}

TEST_CASE("prediction error bound") {
    CHECK(prediction_error_bound(0.0, 100, 0.01) == doctest::Approx(1089.0));
    double prev = prediction_error_bound(3.0, 1, 0.01);
    for (std::size_t u = 2; u < 5000; u *= 2) {
        const double b = prediction_error_bound(3.0, u, 0.01);
        CHECK(b < prev);
        prev = b;
    }
    CHECK(prediction_error_bound(3.0, 1000000000000ULL, 0.01) < 0.02);
}

TEST_CASE("lower bound margin") {
    const BanditSpec spec({0.8, 0.0});
    const Trajectory t = simulate(spec, RateSchedule::polynomial(0.3, 0.5), 5000, 8);
    const double eta = t.true_rate();
    const LowerBoundMargin same = prediction_lower_bound_margin(t, eta, eta, 0.01, 43);
    CHECK(same.lhs == 0.0);
    CHECK(same.rhs == 0.0);
    CHECK(same.margin == 0.0);

    Trajectory never = t;
    std::fill(never.arms.begin(), never.arms.end(), std::size_t{1});
    recompute_true_path(never);
    const LowerBoundMargin m = prediction_lower_bound_margin(never, eta * 2, eta, 0.01, 43);
    CHECK(m.rhs == 0.0);
    CHECK(m.margin == m.lhs);

    CHECK(lower_bound_constant(0.8, 0.01) ==
          doctest::Approx(std::pow(0.8 * std::exp(-1.0) / 2.0, 2) * std::exp(-98.0)));

    const Trajectory four = simulate(BanditSpec({0.8, 0.6, 0.4, 0.2}), RateSchedule::constant(0.1), 50, 1);
    CHECK_THROWS_AS(prediction_lower_bound_margin(four, 0.1, 0.2, 0.01, 10), DomainError);
}

TEST_CASE("estimation error bound") {
    const EstimationBound b = estimation_error_bound(3.0, 120, 0.8, 0.01, 0.8);
    CHECK(b.a_n == doctest::Approx(120.0 * 119.0 * 239.0 / 96.0));
    CHECK(b.b_n == doctest::Approx(b.a_n / (120.0 * 120.0)));
    CHECK(b.vacuous);
    CHECK(std::isnan(b.value));

    // Far out the bound exists and decays like upsilon^(-1/4).
    const EstimationBound u1 = estimation_error_bound(3.0, 100000000, 0.8, 0.2, 0.8);
    const EstimationBound u2 = estimation_error_bound(3.0, 1600000000, 0.8, 0.2, 0.8);
    REQUIRE_FALSE(u1.vacuous);
    REQUIRE_FALSE(u2.vacuous);
    const double slope = std::log(u2.value / u1.value) / std::log(16.0);
    CHECK(slope == doctest::Approx(-0.25).epsilon(0.02));
}

TEST_CASE("geometric grid") {
    const auto g = geometric_grid(500, 30000, 10);
    CHECK(g.size() == 10);
    CHECK(g.front() == 500);
    CHECK(g.back() == 30000);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}

namespace {

ExperimentConfig small_truncated() {
    ExperimentConfig c;
    c.spec = BanditSpec({0.8, 0.0});
    c.mode = EstimationMode::Truncated;
    c.n_values = {300, 600, 1200};
    c.replications = 4;
    c.optimizer.max_iterations = 15;
    c.audit_x = 3.0;
    c.epsilon = 1e-2;
    c.trend_metric = Metric::PredError;
    c.regression_metric = Metric::PredError;
    return c;
}

std::string csv_of(const ExperimentReport& r) {
    std::ostringstream s;
    io::write_records_csv(s, r);
    return s.str();
}

}  // namespace

TEST_CASE("experiment determinism across job counts") {
    ExperimentConfig c = small_truncated();
    const ExperimentReport one = run_experiment(c);
    c.jobs = 3;
    const ExperimentReport three = run_experiment(c);
    CHECK(csv_of(one) == csv_of(three));
    CHECK(one.records.size() == 12);
    CHECK(one.per_n.size() == 3);
    CHECK(one.trend.available);
    CHECK(one.regression.has_value());
    CHECK(one.audit.audited == 12);
    for (const ExperimentRecord& r : one.records) {
        CHECK(r.seed == derive_seed(c.base_seed, r.n, r.rep));
        CHECK_FALSE(r.collapsed);
        CHECK(r.pred_error <= 2.0);
    }
}

TEST_CASE("seeds do not depend on the grid") {
    ExperimentConfig c = small_truncated();
    const ExperimentReport full = run_experiment(c);
    c.n_values = {600};
    const ExperimentReport part = run_experiment(c);
    for (const ExperimentRecord& r : part.records) {
        const auto it = std::find_if(full.records.begin(), full.records.end(),
                                     [&](const ExperimentRecord& f) { return f.n == r.n && f.rep == r.rep; });
        REQUIRE(it != full.records.end());
        CHECK(it->eta_hat == r.eta_hat);
    }
}

TEST_CASE("single record reports no trend") {
    ExperimentConfig c;
    c.mode = EstimationMode::Constant;
    c.n_values = {200};
    c.replications = 1;
    c.optimizer.max_iterations = 10;
    const ExperimentReport r = run_experiment(c);
    CHECK(r.records.size() == 1);
    CHECK_FALSE(r.trend.available);
    const auto j = io::summary_json(r);
    CHECK(j["spearman"]["insufficient"] == true);
}

TEST_CASE("upsilon scaling records") {
    ExperimentConfig c;
    c.kind = ExperimentKind::UpsilonScaling;
    c.spec = BanditSpec({0.8, 0.6, 0.4, 0.2});
    c.epsilon = 1e-2;
    c.n_values = {500, 2000, 8000};
    c.replications = 5;
    c.trend_metric = c.regression_metric = Metric::Upsilon;
    c.trend_alternative = stats::Alternative::Increasing;
    c.regression_exponent = 0.5;
    const ExperimentReport r = run_experiment(c);
    for (const ExperimentRecord& rec : r.records) {
        CHECK(rec.upsilon >= upsilon_n(4, 1e-2, 0.5, 0.8, rec.n));
        CHECK(std::isnan(rec.eta_hat));
    }
    CHECK(r.per_n[2].mean_upsilon > r.per_n[0].mean_upsilon);
}

TEST_CASE("config validation") {
    ExperimentConfig c;
    CHECK_THROWS_AS(c.validate(), DomainError);  // no horizons
    c.n_values = {100, 100};
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.n_values = {100, 200};
    c.replications = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.replications = 1;
    c.eta_true = 0.9;
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("likelihood profile sweep") {
    ProfileConfig c;
    c.n_values = {100};
    c.replications = 3;
    c.deltas = {0.2, 0.3, 0.6};
    const auto rows = run_likelihood_profile(c);
    CHECK(rows.size() == 9);
    for (const ProfileRow& r : rows)
        if (r.delta == 0.3) CHECK(r.loglik.value);
    c.jobs = 2;
    const auto again = run_likelihood_profile(c);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].loglik.value == again[i].loglik.value);
}
