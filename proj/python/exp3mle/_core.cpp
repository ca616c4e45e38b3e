#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "exp3mle/errors.hpp"
#include "exp3mle/estimator.hpp"
#include "exp3mle/experiments.hpp"
#include "exp3mle/io.hpp"
#include "exp3mle/likelihood.hpp"
#include "exp3mle/stats.hpp"
#include "exp3mle/two_arm.hpp"

namespace py = pybind11;
using namespace exp3mle;

namespace {

// NegInfinity maps to float("-inf") on the Python side.
double as_float(const LikelihoodValue& v) {
    return v.value ? *v.value : -std::numeric_limits<double>::infinity();
}

RateSchedule make_schedule(std::optional<double> eta, std::optional<double> eta0, std::optional<double> alpha) {
    if (eta && !eta0 && !alpha) return RateSchedule::constant(*eta);
    if (!eta && eta0 && alpha) return RateSchedule::polynomial(*eta0, *alpha);
    throw DomainError("give either eta, or eta0 together with alpha");
}

py::array_t<double> to_array(const ProbabilityMatrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t t = 0; t < m.rows(); ++t)
        for (std::size_t k = 0; k < m.cols(); ++k) view(t, k) = m(t, k);
    return out;
}

py::dict to_dict(const EstimationResult& r) {
    py::dict d;
    d["eta0_hat"] = r.eta0_hat;
    d["eta_n_hat"] = r.eta_n_hat;
    d["objective"] = r.objective;
    d["iterations_used"] = r.iterations_used;
    d["hit_neg_infinity"] = r.hit_neg_infinity;
    d["boundary_hit"] = r.boundary_hit;
    d["upsilon_used"] = r.upsilon_used;
    return d;
}

OptimizerConfig optimizer(std::size_t maxiter, std::size_t popsize, std::uint64_t seed) {
    OptimizerConfig c;
    c.max_iterations = maxiter;
    c.population_size = popsize;
    c.seed = seed;
    return c;
}

stats::Alternative alternative_from(const std::string& s) {
    if (s == "decreasing") return stats::Alternative::Decreasing;
    if (s == "increasing") return stats::Alternative::Increasing;
    if (s == "two-sided") return stats::Alternative::TwoSided;
    throw DomainError("alternative must be decreasing, increasing or two-sided");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exp3 simulation and learning-rate estimation";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ReplayCollapse>(m, "ReplayCollapse", base.ptr());
    py::register_exception<SimulationCollapse>(m, "SimulationCollapse", base.ptr());
    py::register_exception<AllNegInfinity>(m, "AllNegInfinity", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::class_<Trajectory>(m, "Trajectory")
        .def_property_readonly("n", [](const Trajectory& t) { return t.n; })
        .def_property_readonly("seed", [](const Trajectory& t) { return t.seed; })
        .def_property_readonly("losses", [](const Trajectory& t) {
            return std::vector<double>(t.spec.losses().begin(), t.spec.losses().end());
        })
        .def_property_readonly("arms", [](const Trajectory& t) {
            return py::array_t<std::size_t>(t.arms.size(), t.arms.data());
        })
        .def_property_readonly("true_path", [](const Trajectory& t) { return to_array(t.true_path); })
        .def_property_readonly("true_rate", &Trajectory::true_rate)
        .def("to_json", [](const Trajectory& t) { return io::to_json(t).dump(); })
        .def_static("from_json", [](const std::string& s) {
            try {
                return io::trajectory_from_json(io::json::parse(s));
            } catch (const io::json::exception& e) {
                throw IoError(e.what());
            }
        });

    m.def(
        "simulate",
        [](std::vector<double> losses, std::size_t n, std::uint64_t seed, std::optional<double> eta,
           std::optional<double> eta0, std::optional<double> alpha) {
            return simulate(BanditSpec(std::move(losses)), make_schedule(eta, eta0, alpha), n, seed);
        },
        py::arg("losses"), py::arg("n"), py::arg("seed"), py::kw_only(), py::arg("eta") = py::none(),
        py::arg("eta0") = py::none(), py::arg("alpha") = py::none(),
        "Run Exp3 for n rounds. Pass eta for a constant rate or eta0 and alpha for eta0 / (n^alpha pi_1).");

    m.def(
        "probability_path",
        [](std::vector<double> losses, std::vector<std::size_t> arms, std::optional<std::size_t> horizon,
           std::optional<double> eta, std::optional<double> eta0, std::optional<double> alpha) {
            const BanditSpec spec(std::move(losses));
            return to_array(probability_path(spec, make_schedule(eta, eta0, alpha), arms,
                                             horizon.value_or(arms.size()))
                                .probs);
        },
        py::arg("losses"), py::arg("arms"), py::arg("horizon") = py::none(), py::kw_only(),
        py::arg("eta") = py::none(), py::arg("eta0") = py::none(), py::arg("alpha") = py::none());

    m.def("upsilon_n", &upsilon_n, py::arg("arms"), py::arg("epsilon"), py::arg("alpha"), py::arg("upper"),
          py::arg("n"));
    m.def(
        "upsilon_max",
        [](const Trajectory& t, double epsilon, double alpha, std::pair<double, double> theta, std::size_t grid) {
            return upsilon_max(t, TruncationConfig{epsilon, alpha, ThetaBox(theta.first, theta.second), grid});
        },
        py::arg("trajectory"), py::arg("epsilon"), py::arg("alpha"), py::arg("theta") = std::pair{0.1, 0.8},
        py::arg("grid_points") = 50);
    m.def(
        "truncated_log_likelihood",
        [](const Trajectory& t, double delta0, double alpha, std::size_t upsilon) {
            return as_float(truncated_log_likelihood(t, delta0, alpha, upsilon));
        },
        py::arg("trajectory"), py::arg("delta0"), py::arg("alpha"), py::arg("upsilon"));
    m.def(
        "log_likelihood", [](const Trajectory& t, double delta) { return as_float(full_log_likelihood(t, delta)); },
        py::arg("trajectory"), py::arg("delta"));

    m.def(
        "estimate_constant",
        [](const Trajectory& t, double lower, double upper, std::size_t maxiter, std::size_t popsize,
           std::uint64_t seed) { return to_dict(mle_constant(t, lower, upper, optimizer(maxiter, popsize, seed))); },
        py::arg("trajectory"), py::arg("lower") = 0.1, py::arg("upper") = 0.8, py::arg("maxiter") = 50,
        py::arg("popsize") = 20, py::arg("seed") = 1);
    m.def(
        "estimate_truncated",
        [](const Trajectory& t, double epsilon, std::optional<double> alpha, std::pair<double, double> theta,
           const std::string& truncation, std::size_t maxiter, std::size_t popsize, std::uint64_t seed) {
            double a = 0.0;
            if (alpha) a = *alpha;
            else if (t.schedule.is_polynomial()) a = t.schedule.as_polynomial().alpha;
            else throw DomainError("alpha is required for a constant-rate trajectory");
            Truncation mode;
            if (truncation == "empirical") mode = Truncation::Empirical;
            else if (truncation == "theory") mode = Truncation::Theory;
            else throw DomainError("truncation must be theory or empirical");
            return to_dict(mle_truncated(t, ThetaBox(theta.first, theta.second), a, epsilon, mode,
                                         optimizer(maxiter, popsize, seed)));
        },
        py::arg("trajectory"), py::arg("epsilon"), py::arg("alpha") = py::none(),
        py::arg("theta") = std::pair{0.1, 0.8}, py::arg("truncation") = "empirical", py::arg("maxiter") = 50,
        py::arg("popsize") = 20, py::arg("seed") = 1);

    m.def(
        "q_sequence", [](double eta, double pi1, std::size_t count) { return two_arm::q_sequence(eta, pi1, count).values; },
        py::arg("eta"), py::arg("pi1"), py::arg("count"));
    m.def("log_star", &two_arm::log_star, py::arg("n"));
    m.def(
        "tetration_check",
        [](double eta, double pi1, std::size_t k_max) {
            const auto r = two_arm::tetration_check(eta, pi1, k_max);
            py::list rows;
            for (const auto& row : r.rows)
                rows.append(py::dict(py::arg("k") = row.k, py::arg("index") = row.index, py::arg("q") = row.q,
                                     py::arg("bound") = row.bound, py::arg("margin") = row.margin));
            return py::make_tuple(r.holds(), rows);
        },
        py::arg("eta"), py::arg("pi1"), py::arg("k_max") = 10);
    m.def(
        "kl_exact", [](double eta, double delta, double pi1, std::size_t n) {
            return two_arm::kl_exact(eta, delta, pi1, n).value;
        },
        py::arg("eta"), py::arg("delta"), py::arg("pi1"), py::arg("n"));
    m.def(
        "kl_monte_carlo",
        [](double eta, double delta, double pi1, std::size_t n, std::size_t reps, std::uint64_t seed) {
            const auto r = two_arm::kl_monte_carlo(eta, delta, pi1, n, reps, seed);
            return py::make_tuple(r.value, r.std_error);
        },
        py::arg("eta"), py::arg("delta"), py::arg("pi1"), py::arg("n"), py::arg("reps"), py::arg("seed"));
    m.def(
        "hard_pair",
        [](std::size_t n, double upper, double pi1, double beta) {
            const auto h = two_arm::hard_pair(n, upper, pi1, beta);
            return py::make_tuple(h.eta, h.delta);
        },
        py::arg("n"), py::arg("upper"), py::arg("pi1"), py::arg("beta"));

    m.def(
        "spearman_test",
        [](std::vector<double> x, std::vector<double> y, const std::string& alternative) {
            const auto r = stats::spearman_test(x, y, alternative_from(alternative));
            return py::make_tuple(r.rho, r.p_value);
        },
        py::arg("x"), py::arg("y"), py::arg("alternative") = "two-sided");
    m.def(
        "quantile", [](std::vector<double> v, double q) { return stats::quantile(v, q); }, py::arg("values"),
        py::arg("q"));
    m.def(
        "rate_regression",
        [](std::vector<double> ns, std::vector<double> values, double exponent) {
            const auto f = stats::rate_regression(ns, values, exponent);
            return py::make_tuple(f.coefficient, f.r_squared);
        },
        py::arg("ns"), py::arg("values"), py::arg("exponent"));

    m.def(
        "_run_experiment",
        [](const std::string& config, std::size_t jobs) {
            ExperimentConfig c;
            try {
                c = io::experiment_config_from_json(io::json::parse(config));
            } catch (const io::json::exception& e) {
                throw IoError(e.what());
            }
            if (jobs > 0) c.jobs = jobs;
            ExperimentReport r;
            {
                py::gil_scoped_release release;
                r = run_experiment(c);
            }
            std::ostringstream csv;
            io::write_records_csv(csv, r);
            return py::make_tuple(csv.str(), io::summary_json(r).dump());
        },
        py::arg("config"), py::arg("jobs") = 0);
}
