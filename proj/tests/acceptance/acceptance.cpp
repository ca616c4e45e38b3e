// Acceptance suite: one PASS/FAIL line per criterion.
//
//   exp3mle_acceptance            run every criterion
//   exp3mle_acceptance 3 7        run selected criteria
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "exp3mle/bandit.hpp"
#include "exp3mle/experiments.hpp"
#include "exp3mle/io.hpp"
#include "exp3mle/likelihood.hpp"
#include "exp3mle/rng.hpp"
#include "exp3mle/stats.hpp"
#include "exp3mle/two_arm.hpp"

#ifndef EXP3MLE_PRESET_DIR
#define EXP3MLE_PRESET_DIR "presets"
#endif

using namespace exp3mle;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

const BanditSpec kFourArms({0.8, 0.6, 0.4, 0.2});
const BanditSpec kTwoArms({0.8, 0.0});

std::vector<double> theta_grid(const ThetaBox& theta, std::size_t points) {
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = i + 1 == points ? theta.upper
                               : theta.lower + (theta.upper - theta.lower) * static_cast<double>(i) /
                                                   static_cast<double>(points - 1);
    return g;
}

std::vector<ExperimentConfig> load_preset(const std::string& file) {
    const io::json j = io::read_json_file(std::string(EXP3MLE_PRESET_DIR) + "/" + file);
    std::vector<ExperimentConfig> out;
    for (const io::json& v : io::expand_variants(j)) out.push_back(io::experiment_config_from_json(v));
    return out;
}

std::vector<double> as_doubles(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

// Regime shared by criteria 1 and 2.
constexpr std::size_t kGuaranteeN = 30000;
constexpr double kGuaranteeEps = 0.1;
constexpr double kAlpha = 0.5;
const ThetaBox kTheta(0.1, 0.8);

Outcome criterion_1() {
    const std::size_t ups = upsilon_n(kFourArms.arms(), kGuaranteeEps, kAlpha, kTheta.upper, kGuaranteeN);
    const std::vector<double> grid = theta_grid(kTheta, 50);
    std::size_t ok_runs = 0;
    double worst = 1.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Trajectory t = simulate(kFourArms, RateSchedule::polynomial(0.3, kAlpha), kGuaranteeN, 1000 + s);
        double run_min = 1.0;
        for (double d0 : grid) {
            const ProbabilityPath p = probability_path(kFourArms, RateSchedule::polynomial(d0, kAlpha), t.arms, ups);
            for (std::size_t r = 0; r < ups; ++r)
                for (double v : p.probs.row(r)) run_min = std::min(run_min, v);
        }
        worst = std::min(worst, run_min);
        if (run_min >= kGuaranteeEps) ++ok_runs;
    }
    return {ok_runs == 100, std::to_string(ok_runs) + "/100 runs keep every grid probability >= 0.1 up to Upsilon_n=" +
                                std::to_string(ups) + " (smallest " + num(worst) + ")"};
}

Outcome criterion_2() {
    const std::size_t ups = upsilon_n(kFourArms.arms(), kGuaranteeEps, kAlpha, kTheta.upper, kGuaranteeN);
    std::vector<Trajectory> trajs;
    for (std::uint64_t s = 0; s < 100; ++s)
        trajs.push_back(simulate(kFourArms, RateSchedule::polynomial(0.3, kAlpha), kGuaranteeN, 1000 + s));
    Rng rng(77);
    std::size_t violations = 0;
    double worst_ratio = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Trajectory& t = trajs[rng.next_u64() % trajs.size()];
        const double d0 = kTheta.lower + (kTheta.upper - kTheta.lower) * rng.uniform();
        const double d1 = kTheta.lower + (kTheta.upper - kTheta.lower) * rng.uniform();
        const std::size_t step = 1 + rng.next_u64() % ups;  // t in [1, Upsilon_n]
        const ProbabilityPath a = probability_path(kFourArms, RateSchedule::polynomial(d0, kAlpha), t.arms, step);
        const ProbabilityPath b = probability_path(kFourArms, RateSchedule::polynomial(d1, kAlpha), t.arms, step);
        double gap = 0.0;
        for (std::size_t k = 0; k < kFourArms.arms(); ++k)
            gap = std::max(gap, std::abs(a.probs(step - 1, k) - b.probs(step - 1, k)));
        const double allowed = kPathLipschitz * std::abs(d0 - d1) / kTheta.upper;
        if (gap > allowed) ++violations;
        if (allowed > 0.0) worst_ratio = std::max(worst_ratio, gap / allowed);
    }
    return {violations == 0, std::to_string(violations) + " violations in 1000 tuples (largest gap/allowed " +
                                 num(worst_ratio) + ")"};
}

Outcome criterion_3() {
    std::size_t rows = 0, violations = 0;
    for (double eta : {0.1, 0.3, 0.5, 1.0}) {
        const two_arm::TetrationReport rep = two_arm::tetration_check(eta, 0.8, 64);
        rows += rep.rows.size();
        for (const auto& r : rep.rows)
            if (r.q > r.bound) ++violations;
    }
    const std::size_t ls = two_arm::log_star(1e23);
    return {violations == 0 && ls == 5 && ls <= 6, std::to_string(violations) + " violations over " +
                                                       std::to_string(rows) + " rows; log*(1e23)=" +
                                                       std::to_string(ls)};
}

Outcome criterion_4() {
    struct Tuple {
        std::size_t n;
        double eta, delta;
    };
    const std::vector<Tuple> tuples = {
        {50, 0.3, 0.2},    {50, 0.6, 0.4},    {50, 0.1, 0.05},  {50, 0.3, 0.35},   {50, 0.5, 0.15},
        {50, 0.2, 0.1},    {50, 0.06, 0.05},  {200, 0.3, 0.2},  {200, 0.1, 0.05},  {200, 0.6, 0.5},
        {200, 0.45, 0.3},  {200, 0.25, 0.3},  {200, 0.6, 0.05}, {200, 0.15, 0.1},  {1000, 0.3, 0.25},
        {1000, 0.1, 0.05}, {1000, 0.6, 0.55}, {1000, 0.5, 0.4}, {1000, 0.2, 0.22}, {1000, 0.4, 0.1}};
    std::size_t agree = 0;
    double worst_z = 0.0;
    for (const Tuple& t : tuples) {
        const double ex = two_arm::kl_exact(t.eta, t.delta, 0.8, t.n).value;
        const two_arm::KLResult mc = two_arm::kl_monte_carlo(t.eta, t.delta, 0.8, t.n, 10000, 11);
        const double z = std::abs(ex - mc.value) / mc.std_error;
        if (std::isfinite(ex) && z <= 3.0) ++agree;
        worst_z = std::max(worst_z, std::isfinite(z) ? z : std::numeric_limits<double>::infinity());
    }
    double self_max = 0.0;
    for (std::size_t n : {50, 200, 1000})
        for (double eta : {0.05, 0.2, 0.4, 0.6}) self_max = std::max(self_max, std::abs(two_arm::kl_exact(eta, eta, 0.8, n).value));
    return {agree == tuples.size() && self_max <= 1e-12,
            std::to_string(agree) + "/20 tuples within 3 stderr (worst " + num(worst_z) + " stderr); max |KL(eta,eta)| = " +
                num(self_max)};
}

Outcome criterion_5() {
    std::vector<double> kls;
    std::string values;
    for (std::size_t n : {2000, 4000, 8000, 16000}) {
        const two_arm::HardPair hp = two_arm::hard_pair(n, 0.5, 0.8, 0.5);
        kls.push_back(two_arm::kl_exact(hp.eta, hp.delta, 0.8, n).value);
        values += (values.empty() ? "" : ", ") + num(kls.back());
    }
    const auto [lo, hi] = std::minmax_element(kls.begin(), kls.end());
    const bool ok = std::all_of(kls.begin(), kls.end(), [](double v) { return std::isfinite(v) && v > 0.0; }) &&
                    *hi / *lo < 2.0 && *hi <= 3.0 * kls.front();
    return {ok, "KL at n=2000..16000: " + values + " (max/min " + num(*hi / *lo) + ")"};
}

Outcome criterion_6() {
    const ExperimentConfig cfg = load_preset("constant_rate.json").front();
    const ExperimentReport rep = run_experiment(cfg);
    const bool ok = rep.trend.available && rep.trend.p_value >= 0.05;
    return {ok, "constant rate, " + std::to_string(cfg.replications) + " reps x " + std::to_string(cfg.n_values.size()) +
                    " horizons: decreasing-trend p = " + num(rep.trend.p_value) + " (rho " + num(rep.trend.rho) +
                    "), needs p >= 0.05"};
}

Outcome criterion_7() {
    std::ostringstream detail;
    bool ok = true;
    for (const ExperimentConfig& cfg : load_preset("truncated_prediction.json")) {
        const ExperimentReport rep = run_experiment(cfg);
        const std::vector<double> ns = as_doubles(cfg.n_values);
        const std::vector<double> pred = per_n_metric(rep, Metric::PredError);
        const std::vector<double> rel = per_n_metric(rep, Metric::RelError);
        const double p_pred = stats::spearman_test(ns, pred, stats::Alternative::Decreasing).p_value;
        const double r2 = stats::rate_regression(ns, pred, -0.25).r_squared;
        ok = ok && p_pred < 0.01 && r2 >= 0.8 && rep.collapsed == 0;
        detail << cfg.name << ": pred p=" << num(p_pred) << " R2=" << num(r2);
        if (cfg.spec.arms() == 2) {
            const double p_rel = stats::spearman_test(ns, rel, stats::Alternative::Decreasing).p_value;
            ok = ok && p_rel < 0.01;
            detail << " est p=" << num(p_rel);
        }
        detail << " collapsed=" << rep.collapsed << "; ";
    }
    return {ok, detail.str()};
}

Outcome criterion_8() {
    std::vector<ExperimentReport> reports;
    bool ok = true;
    std::ostringstream detail;
    std::size_t below = 0;
    for (const ExperimentConfig& cfg : load_preset("upsilon_scaling.json")) {
        reports.push_back(run_experiment(cfg));
        const ExperimentReport& rep = reports.back();
        const double r2 = rep.regression ? rep.regression->r_squared : 0.0;
        ok = ok && r2 >= 0.99 && rep.collapsed == 0;
        for (const ExperimentRecord& r : rep.records)
            if (r.upsilon < upsilon_n(cfg.spec.arms(), cfg.epsilon, cfg.alpha, cfg.theta.upper, r.n)) ++below;
        detail << "eps=" << cfg.epsilon << " R2=" << num(r2) << "; ";
    }
    const ExperimentReport* wide = nullptr;
    const ExperimentReport* tight = nullptr;
    for (const ExperimentReport& r : reports) {
        if (r.config.epsilon == 1e-2) wide = &r;
        if (r.config.epsilon == 1e-15) tight = &r;
    }
    double worst = std::numeric_limits<double>::infinity();
    if (wide && tight) {
        worst = 0.0;
        for (std::size_t i = 0; i < wide->per_n.size(); ++i) {
            const double a = wide->per_n[i].mean_upsilon, b = tight->per_n[i].mean_upsilon;
            worst = std::max(worst, std::abs(a - b) / std::min(a, b));
        }
    }
    ok = ok && worst <= 0.25 && below == 0;
    detail << "max relative gap of means (1e-2 vs 1e-15) " << num(worst) << "; runs with Upsilon_max < Upsilon_n: "
           << below;
    return {ok, detail.str()};
}

Outcome criterion_9() {
    const double x = 3.0;
    const double eps = 1e-2;
    std::size_t exceed = 0, applicable = 0, est_exceed = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const std::size_t n = 10000;
        const Trajectory t = simulate(kTwoArms, RateSchedule::polynomial(0.3, kAlpha), n, 5000 + s);
        const EstimationResult est = mle_truncated(t, kTheta, kAlpha, eps, Truncation::Theory, OptimizerConfig{});
        const double pe = prediction_error(t, t.true_rate(), est.eta_n_hat, est.upsilon_used);
        if (pe > prediction_error_bound(x, est.upsilon_used, eps)) ++exceed;
        const EstimationBound eb = estimation_error_bound(x, est.upsilon_used, 0.8, eps, kTheta.upper);
        if (!eb.vacuous) {
            ++applicable;
            if (std::abs(est.eta0_hat - 0.3) > eb.value) ++est_exceed;
        }
    }
    Rng rng(99);
    std::size_t margin_ok = 0;
    double smallest = std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < 100; ++s) {
        const std::size_t n = 5000;
        const double eta0 = kTheta.lower + (kTheta.upper - kTheta.lower) * rng.uniform();
        const double delta0 = kTheta.lower + (kTheta.upper - kTheta.lower) * rng.uniform();
        const Trajectory t = simulate(kTwoArms, RateSchedule::polynomial(eta0, kAlpha), n, 7000 + s);
        const std::size_t ups = upsilon_n(2, eps, kAlpha, kTheta.upper, n);
        const LowerBoundMargin m = prediction_lower_bound_margin(
            t, resolve_polynomial_rate(delta0, kAlpha, n, 0.8), t.true_rate(), eps, ups);
        smallest = std::min(smallest, m.margin);
        if (m.margin >= 0.0) ++margin_ok;
    }
    const double freq = exceed / 100.0;
    const double est_freq = applicable ? static_cast<double>(est_exceed) / static_cast<double>(applicable) : 0.0;
    const bool ok = freq <= 0.09 && margin_ok == 100 && est_freq <= 0.09;
    return {ok, "prediction bound exceeded " + std::to_string(exceed) + "/100; lower-bound margin >= 0 on " +
                    std::to_string(margin_ok) + "/100 (smallest " + num(smallest) + "); estimation ceiling non-vacuous in " +
                    std::to_string(applicable) + "/100, exceeded " + std::to_string(est_exceed)};
}

Outcome criterion_10() {
    const std::size_t n = 5000;
    std::size_t neg = 0;
    const std::size_t seeds = 100;
    for (std::uint64_t s = 0; s < seeds; ++s) {
        const Trajectory t = simulate(kTwoArms, RateSchedule::constant(0.3), n, derive_seed(2023, n, s));
        if (full_log_likelihood(t, 0.6).is_neg_infinity()) ++neg;
    }
    const double freq = static_cast<double>(neg) / static_cast<double>(seeds);
    return {freq >= 0.5, "NegInfinity at delta=0.6 on " + std::to_string(neg) + "/" + std::to_string(seeds) +
                             " seeds at n=5000"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                            criterion_5, criterion_6, criterion_7, criterion_8,
                                                            criterion_9, criterion_10};
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int c = std::atoi(argv[i]);
        if (c < 1 || c > static_cast<int>(criteria.size())) {
            std::cerr << "unknown criterion: " << argv[i] << '\n';
            return 2;
        }
        selected.push_back(c);
    }
    if (selected.empty())
        for (int c = 1; c <= static_cast<int>(criteria.size()); ++c) selected.push_back(c);

    bool all = true;
    for (int c : selected) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = criteria[c - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d: %s  %s [%.1fs]\n", c, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
