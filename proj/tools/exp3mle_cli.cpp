// exp3mle command-line front end.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "exp3mle/bandit.hpp"
#include "exp3mle/errors.hpp"
#include "exp3mle/estimator.hpp"
#include "exp3mle/experiments.hpp"
#include "exp3mle/io.hpp"
#include "exp3mle/likelihood.hpp"
#include "exp3mle/two_arm.hpp"

namespace fs = std::filesystem;
using namespace exp3mle;
using io::json;

namespace {

// Writes to `path`, or standard output when the path is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
    } else {
        io::write_text_file(path, text);
    }
}

std::string csv_num(double v) { return io::format_number(v); }

ThetaBox parse_theta(const std::vector<double>& v) {
    if (v.size() != 2) throw DomainError("--theta expects r,R");
    return ThetaBox(v[0], v[1]);
}

struct SimulateArgs {
    std::optional<std::size_t> k;
    std::vector<double> losses;
    std::optional<double> eta, eta0, alpha;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string out;
};

void run_simulate(const SimulateArgs& a) {
    BanditSpec spec(a.losses);
    if (a.k && *a.k != spec.arms()) throw DomainError("--k does not match the number of losses");
    const bool constant = a.eta.has_value();
    if (constant == (a.eta0.has_value() || a.alpha.has_value()))
        throw DomainError("give either --eta or both --eta0 and --alpha");
    if (!constant && !(a.eta0 && a.alpha)) throw DomainError("--eta0 and --alpha go together");
    const RateSchedule schedule = constant ? RateSchedule::constant(*a.eta) : RateSchedule::polynomial(*a.eta0, *a.alpha);
    const Trajectory t = simulate(spec, schedule, a.n, a.seed);
    emit(a.out, io::to_json(t).dump() + "\n");
}

struct EstimateArgs {
    std::string trajectory;
    std::string mode = "truncated";
    std::vector<double> theta;
    std::optional<double> alpha;
    double epsilon = 1e-7;
    std::string truncate = "empirical";
    std::size_t maxiter = 50;
    std::size_t popsize = 20;
    std::uint64_t seed = 1;
    std::string out;
};

double trajectory_alpha(const Trajectory& t, const std::optional<double>& alpha) {
    if (alpha) return *alpha;
    if (t.schedule.is_polynomial()) return t.schedule.as_polynomial().alpha;
    throw DomainError("--alpha is required for a constant-rate trajectory");
}

void run_estimate(const EstimateArgs& a) {
    const Trajectory t = io::trajectory_from_json(io::read_json_file(a.trajectory));
    OptimizerConfig opt;
    opt.max_iterations = a.maxiter;
    opt.population_size = a.popsize;
    opt.seed = a.seed;
    EstimationResult r{};
    if (a.mode == "constant") {
        const ThetaBox box = a.theta.empty() ? ThetaBox(0.01, 1.0) : parse_theta(a.theta);
        r = mle_constant(t, box.lower, box.upper, opt);
    } else {
        const ThetaBox box = a.theta.empty() ? ThetaBox(0.1, 0.8) : parse_theta(a.theta);
        const Truncation tr = a.truncate == "theory" ? Truncation::Theory : Truncation::Empirical;
        r = mle_truncated(t, box, trajectory_alpha(t, a.alpha), a.epsilon, tr, opt);
    }
    emit(a.out, io::to_json(r).dump(2) + "\n");
}

struct LikelihoodArgs {
    std::string trajectory;
    double delta0 = 0.0;
    std::optional<double> alpha;
    double epsilon = 1e-7;
    std::string truncate = "none";
    std::vector<double> theta;
    std::string out;
};

void run_likelihood(const LikelihoodArgs& a) {
    const Trajectory t = io::trajectory_from_json(io::read_json_file(a.trajectory));
    if (a.truncate == "none") {
        // Without truncation the candidate is a rate; a polynomial schedule maps delta_0 to it.
        const bool poly = a.alpha.has_value() || t.schedule.is_polynomial();
        const double rate =
            poly ? resolve_polynomial_rate(a.delta0, trajectory_alpha(t, a.alpha), t.n, t.spec.top_loss()) : a.delta0;
        emit(a.out, io::to_json(full_log_likelihood(t, rate), t.n).dump(2) + "\n");
        return;
    }
    const double alpha = trajectory_alpha(t, a.alpha);
    const ThetaBox box = a.theta.empty() ? ThetaBox(0.1, 0.8) : parse_theta(a.theta);
    std::size_t upsilon = 0;
    if (a.truncate == "theory") {
        upsilon = std::min(t.n, upsilon_n(t.spec.arms(), a.epsilon, alpha, box.upper, t.n));
    } else {
        upsilon = upsilon_max(t, TruncationConfig{a.epsilon, alpha, box});
    }
    emit(a.out, io::to_json(truncated_log_likelihood(t, a.delta0, alpha, upsilon), upsilon).dump(2) + "\n");
}

struct KlArgs {
    std::vector<double> etas, deltas;
    std::vector<std::size_t> ns;
    double pi1 = 0.8;
    std::size_t reps = 0;
    std::uint64_t seed = 1;
    bool hard_pair = false;
    double upper = 0.5;
    double beta = 0.5;
    std::string out;
};

void run_kl(const KlArgs& a) {
    if (a.ns.empty()) throw DomainError("--n is required");
    std::ostringstream s;
    s << "n,eta,delta,kl_exact,kl_mc,stderr\n";
    const auto row = [&](std::size_t n, double eta, double delta) {
        const two_arm::KLResult ex = two_arm::kl_exact(eta, delta, a.pi1, n);
        double mc = std::nan(""), se = std::nan("");
        if (a.reps > 0) {
            const two_arm::KLResult m = two_arm::kl_monte_carlo(eta, delta, a.pi1, n, a.reps, a.seed);
            mc = m.value;
            se = m.std_error;
        }
        s << n << ',' << csv_num(eta) << ',' << csv_num(delta) << ',' << csv_num(ex.value) << ',' << csv_num(mc)
          << ',' << csv_num(se) << '\n';
    };
    if (a.hard_pair) {
        for (std::size_t n : a.ns) {
            const two_arm::HardPair hp = two_arm::hard_pair(n, a.upper, a.pi1, a.beta);
            row(n, hp.eta, hp.delta);
        }
    } else {
        if (a.etas.empty() || a.deltas.empty()) throw DomainError("--eta and --delta are required without --hard-pair");
        for (std::size_t n : a.ns)
            for (double eta : a.etas)
                for (double delta : a.deltas) row(n, eta, delta);
    }
    emit(a.out, s.str());
}

struct BoundsArgs {
    bool tetration = false;
    double eta = 0.3;
    double pi1 = 0.8;
    std::size_t kmax = 5;
    std::optional<double> log_star_of;
    std::vector<double> prediction;  // x, upsilon, epsilon
    std::vector<double> estimation;  // x, upsilon, pi1, epsilon, R
    std::string out;
};

int run_bounds(const BoundsArgs& a) {
    std::ostringstream s;
    bool ok = true;
    if (a.tetration) {
        const two_arm::TetrationReport rep = two_arm::tetration_check(a.eta, a.pi1, a.kmax);
        s << "i,q_i,bound,margin\n";
        for (const two_arm::TetrationRow& r : rep.rows)
            s << r.index << ',' << csv_num(r.q) << ',' << csv_num(r.bound) << ',' << csv_num(r.margin) << '\n';
        ok = rep.holds();
    } else if (a.log_star_of) {
        s << two_arm::log_star(*a.log_star_of) << '\n';
    } else if (!a.prediction.empty()) {
        if (a.prediction.size() != 3) throw DomainError("--prediction expects x,upsilon,epsilon");
        s << csv_num(prediction_error_bound(a.prediction[0], static_cast<std::size_t>(a.prediction[1]),
                                            a.prediction[2]))
          << '\n';
    } else if (!a.estimation.empty()) {
        const auto& e = a.estimation;
        if (e.size() != 5) throw DomainError("--estimation expects x,upsilon,pi1,epsilon,R");
        const EstimationBound b = estimation_error_bound(e[0], static_cast<std::size_t>(e[1]), e[2], e[3], e[4]);
        json j{{"vacuous", b.vacuous}, {"value", b.vacuous ? json(nullptr) : json(b.value)},
               {"a_n", b.a_n}, {"b_n", b.b_n}, {"g_n", b.g_n}};
        s << j.dump(2) << '\n';
    } else {
        throw DomainError("choose one of --tetration, --log-star, --prediction, --estimation");
    }
    emit(a.out, s.str());
    return ok ? 0 : 1;
}

struct ExperimentArgs {
    std::string config;
    std::string out_dir = ".";
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    bool svg = false;
};

void run_experiment_cmd(const ExperimentArgs& a) {
    json j = io::read_json_file(a.config);
    if (a.seed) j["base_seed"] = *a.seed;
    std::error_code ec;
    fs::create_directories(a.out_dir, ec);
    if (ec) throw IoError("cannot create " + a.out_dir + ": " + ec.message());
    const fs::path dir(a.out_dir);
    const std::string name = j.value("name", std::string("experiment"));

    if (j.value("kind", std::string()) == "likelihood_profile") {
        ProfileConfig pc = io::profile_config_from_json(j);
        pc.jobs = a.jobs;
        const std::vector<ProfileRow> rows = run_likelihood_profile(pc);
        std::ostringstream csv;
        io::write_profile_csv(csv, rows);
        io::write_text_file(dir / (name + ".csv"), csv.str());
        std::size_t neg = 0;
        for (const ProfileRow& r : rows) neg += r.loglik.is_neg_infinity() && !r.collapsed;
        std::cout << name << ": " << rows.size() << " profile points, " << neg << " NegInfinity\n";
        return;
    }

    const std::vector<json> variants = io::expand_variants(j);

    json combined = json::array();
    for (const json& v : variants) {
        ExperimentConfig cfg = io::experiment_config_from_json(v);
        cfg.jobs = a.jobs;
        const ExperimentReport report = run_experiment(cfg);
        std::ostringstream csv;
        io::write_records_csv(csv, report);
        io::write_text_file(dir / (cfg.name + ".csv"), csv.str());
        const json summary = io::summary_json(report);
        io::write_text_file(dir / (cfg.name + ".json"), summary.dump(2) + "\n");
        if (a.svg) io::write_text_file(dir / (cfg.name + ".svg"), io::render_svg(report));
        combined.push_back(summary);
        std::cout << cfg.name << ": " << report.records.size() << " records, " << report.collapsed << " collapsed";
        if (report.trend.available) std::cout << ", spearman rho=" << report.trend.rho << " p=" << report.trend.p_value;
        if (report.regression) std::cout << ", r2=" << report.regression->r_squared;
        std::cout << '\n';
    }
    if (variants.size() > 1) io::write_text_file(dir / (name + "_all.json"), combined.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exp3 learning-rate estimation toolkit"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Simulate an Exp3 learner and write its trajectory as JSON");
    cmd_sim->add_option("--k", sim.k, "Number of arms (checked against --losses)");
    cmd_sim->add_option("--losses", sim.losses, "Comma-separated losses, sorted descending")->required()->delimiter(',');
    cmd_sim->add_option("--eta", sim.eta, "Constant learning rate");
    cmd_sim->add_option("--eta0", sim.eta0, "eta_0 of the schedule eta0 / (n^alpha pi_1)");
    cmd_sim->add_option("--alpha", sim.alpha, "Exponent of the polynomial schedule");
    cmd_sim->add_option("--n", sim.n, "Horizon")->required();
    cmd_sim->add_option("--seed", sim.seed, "Random seed")->required();
    cmd_sim->add_option("--out", sim.out, "Output file (default: stdout)");

    EstimateArgs est;
    auto* cmd_est = app.add_subcommand("estimate", "Maximum-likelihood estimate of the learning rate");
    cmd_est->add_option("--trajectory", est.trajectory, "Trajectory JSON")->required();
    cmd_est->add_option("--mode", est.mode)->check(CLI::IsMember({"constant", "truncated"}));
    cmd_est->add_option("--theta", est.theta, "Search interval r,R")->delimiter(',');
    cmd_est->add_option("--alpha", est.alpha, "Schedule exponent (default: from the trajectory)");
    cmd_est->add_option("--epsilon", est.epsilon, "Truncation level");
    cmd_est->add_option("--truncate", est.truncate)->check(CLI::IsMember({"theory", "empirical"}));
    cmd_est->add_option("--maxiter", est.maxiter, "Optimizer generations");
    cmd_est->add_option("--popsize", est.popsize, "Optimizer population size");
    cmd_est->add_option("--seed", est.seed, "Optimizer seed");
    cmd_est->add_option("--out", est.out, "Output file (default: stdout)");

    LikelihoodArgs lik;
    auto* cmd_lik = app.add_subcommand("likelihood", "Evaluate the (truncated) log-likelihood");
    cmd_lik->add_option("--trajectory", lik.trajectory, "Trajectory JSON")->required();
    cmd_lik->add_option("--delta0", lik.delta0, "Candidate delta_0 (a constant rate when untruncated)")->required();
    cmd_lik->add_option("--alpha", lik.alpha, "Schedule exponent (default: from the trajectory)");
    cmd_lik->add_option("--epsilon", lik.epsilon, "Truncation level");
    cmd_lik->add_option("--truncate", lik.truncate)->check(CLI::IsMember({"theory", "empirical", "none"}));
    cmd_lik->add_option("--theta", lik.theta, "Parameter box r,R")->delimiter(',');
    cmd_lik->add_option("--out", lik.out, "Output file (default: stdout)");

    KlArgs kl;
    auto* cmd_kl = app.add_subcommand("kl", "KL divergence between two-arm trajectory laws");
    cmd_kl->add_option("--eta", kl.etas, "True rates")->delimiter(',');
    cmd_kl->add_option("--delta", kl.deltas, "Alternative rates")->delimiter(',');
    cmd_kl->add_option("--n", kl.ns, "Horizons")->delimiter(',')->required();
    cmd_kl->add_option("--pi1", kl.pi1, "Loss of arm 1");
    cmd_kl->add_option("--reps", kl.reps, "Monte Carlo replications (0 skips the estimate)");
    cmd_kl->add_option("--seed", kl.seed, "Monte Carlo seed");
    cmd_kl->add_flag("--hard-pair", kl.hard_pair, "Use the constructed hard pair at each n");
    cmd_kl->add_option("--R", kl.upper, "Upper rate bound for the hard pair");
    cmd_kl->add_option("--beta", kl.beta, "Gap exponent for the hard pair");
    cmd_kl->add_option("--out", kl.out, "Output file (default: stdout)");

    BoundsArgs bnd;
    auto* cmd_bnd = app.add_subcommand("bounds", "Evaluate the numeric bounds");
    cmd_bnd->add_flag("--tetration", bnd.tetration, "Check q_{I+k+1} <= 1/f^(k)(2)");
    cmd_bnd->add_option("--eta", bnd.eta);
    cmd_bnd->add_option("--pi1", bnd.pi1);
    cmd_bnd->add_option("--kmax", bnd.kmax);
    cmd_bnd->add_option("--log-star", bnd.log_star_of, "Print log*(n)");
    cmd_bnd->add_option("--prediction", bnd.prediction, "Prediction-error bound at x,upsilon,epsilon")->delimiter(',');
    cmd_bnd->add_option("--estimation", bnd.estimation, "Estimation-error bound at x,upsilon,pi1,epsilon,R")
        ->delimiter(',');
    cmd_bnd->add_option("--out", bnd.out, "Output file (default: stdout)");

    ExperimentArgs exp;
    auto* cmd_exp = app.add_subcommand("experiment", "Run a replication experiment from a JSON config");
    cmd_exp->add_option("--config", exp.config, "Config JSON")->required();
    cmd_exp->add_option("--out-dir", exp.out_dir, "Directory for CSV/JSON/SVG outputs");
    cmd_exp->add_option("--jobs", exp.jobs, "Worker threads")->check(CLI::PositiveNumber);
    cmd_exp->add_option("--seed", exp.seed, "Override the config's base seed");
    cmd_exp->add_flag("--svg", exp.svg, "Also write an SVG scatter");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*cmd_sim) run_simulate(sim);
        if (*cmd_est) run_estimate(est);
        if (*cmd_lik) run_likelihood(lik);
        if (*cmd_kl) run_kl(kl);
        if (*cmd_bnd) return run_bounds(bnd);
        if (*cmd_exp) run_experiment_cmd(exp);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
