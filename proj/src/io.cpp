#include "exp3mle/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "exp3mle/errors.hpp"

namespace exp3mle::io {

// Shortest text that reads back to the same double; empty for NaN.
std::string format_number(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed ") + what + ": " + e.what());
    }
}

std::string alternative_name(stats::Alternative a) {
    switch (a) {
    case stats::Alternative::Decreasing:
        return "decreasing";
    case stats::Alternative::Increasing:
        return "increasing";
    case stats::Alternative::TwoSided:
        return "two-sided";
    }
    return "";
}

stats::Alternative alternative_from_name(const std::string& s) {
    if (s == "decreasing") return stats::Alternative::Decreasing;
    if (s == "increasing") return stats::Alternative::Increasing;
    if (s == "two-sided") return stats::Alternative::TwoSided;
    throw DomainError("unknown alternative: " + s);
}

OptimizerConfig optimizer_from_json(const json& j) {
    OptimizerConfig c;
    c.population_size = j.value("population_size", c.population_size);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.crossover_rate = j.value("crossover_rate", c.crossover_rate);
    c.differential_weight = j.value("differential_weight", c.differential_weight);
    c.seed = j.value("seed", c.seed);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.stagnation_generations = j.value("stagnation_generations", c.stagnation_generations);
    return c;
}

json optimizer_to_json(const OptimizerConfig& c) {
    return json{{"population_size", c.population_size},
                {"max_iterations", c.max_iterations},
                {"crossover_rate", c.crossover_rate},
                {"differential_weight", c.differential_weight},
                {"seed", c.seed},
                {"tolerance", c.tolerance},
                {"stagnation_generations", c.stagnation_generations}};
}

std::vector<std::size_t> horizons_from_json(const json& j) {
    if (j.contains("n_values")) return j.at("n_values").get<std::vector<std::size_t>>();
    if (j.contains("n_grid")) {
        const json& g = j.at("n_grid");
        return geometric_grid(g.at("min").get<std::size_t>(), g.at("max").get<std::size_t>(),
                              g.value("count", std::size_t{10}));
    }
    throw DomainError("config needs n_values or n_grid");
}

std::vector<double> deltas_from_json(const json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    const double lo = j.at("min").get<double>();
    const double hi = j.at("max").get<double>();
    const auto count = j.at("count").get<std::size_t>();
    if (count < 2 || !(hi > lo)) throw DomainError("delta grid needs count >= 2 and max > min");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = i + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return out;
}

}  // namespace

std::string metric_name(Metric metric) {
    switch (metric) {
    case Metric::RelError:
        return "rel_error";
    case Metric::PredError:
        return "pred_error";
    case Metric::Upsilon:
        return "upsilon";
    }
    return "";
}

Metric metric_from_name(const std::string& name) {
    if (name == "rel_error") return Metric::RelError;
    if (name == "pred_error") return Metric::PredError;
    if (name == "upsilon") return Metric::Upsilon;
    throw DomainError("unknown metric: " + name);
}

json to_json(const BanditSpec& spec) {
    return json{{"k", spec.arms()}, {"losses", std::vector<double>(spec.losses().begin(), spec.losses().end())}};
}

BanditSpec spec_from_json(const json& j) {
    return guarded("bandit spec", [&] {
        BanditSpec spec(j.at("losses").get<std::vector<double>>());
        if (j.contains("k") && j.at("k").get<std::size_t>() != spec.arms())
            throw DomainError("k does not match the number of losses");
        return spec;
    });
}

json to_json(const RateSchedule& schedule) {
    if (schedule.is_constant()) return json{{"type", "constant"}, {"eta", schedule.as_constant().eta}};
    const PolynomialRate& p = schedule.as_polynomial();
    return json{{"type", "polynomial"}, {"eta0", p.eta0}, {"alpha", p.alpha}};
}

RateSchedule schedule_from_json(const json& j) {
    return guarded("schedule", [&] {
        const std::string type = j.at("type").get<std::string>();
        if (type == "constant") return RateSchedule::constant(j.at("eta").get<double>());
        if (type == "polynomial") return RateSchedule::polynomial(j.at("eta0").get<double>(), j.at("alpha").get<double>());
        throw DomainError("unknown schedule type: " + type);
    });
}

json to_json(const Trajectory& t) {
    std::vector<std::size_t> arms(t.arms.size());
    std::transform(t.arms.begin(), t.arms.end(), arms.begin(), [](std::size_t a) { return a + 1; });
    return json{{"spec", to_json(t.spec)}, {"schedule", to_json(t.schedule)}, {"n", t.n}, {"seed", t.seed},
                {"arms", arms}};
}

Trajectory trajectory_from_json(const json& j) {
    return guarded("trajectory", [&] {
        BanditSpec spec = spec_from_json(j.at("spec"));
        RateSchedule schedule = schedule_from_json(j.at("schedule"));
        const auto n = j.at("n").get<std::size_t>();
        std::vector<std::size_t> arms = j.at("arms").get<std::vector<std::size_t>>();
        if (arms.size() != n) throw DomainError("arms length differs from n");
        for (std::size_t& a : arms) {
            if (a < 1 || a > spec.arms()) throw DomainError("arm index out of range");
            --a;
        }
        Trajectory t{std::move(spec), schedule, n, j.value("seed", std::uint64_t{0}), std::move(arms), {}};
        recompute_true_path(t);
        return t;
    });
}

json to_json(const EstimationResult& r) {
    return json{{"eta0_hat", r.eta0_hat},
                {"eta_n_hat", r.eta_n_hat},
                {"objective", r.objective},
                {"iterations_used", r.iterations_used},
                {"hit_neg_infinity", r.hit_neg_infinity},
                {"boundary_hit", r.boundary_hit},
                {"upsilon_used", r.upsilon_used}};
}

json to_json(const LikelihoodValue& v, std::size_t upsilon_used) {
    return json{{"value", v.value ? json(*v.value) : json(nullptr)},
                {"neg_infinity", v.is_neg_infinity()},
                {"evaluated_steps", v.evaluated_steps},
                {"upsilon_used", upsilon_used}};
}

json to_json(const ExperimentConfig& c) {
    json j{{"name", c.name},
           {"kind", c.kind == ExperimentKind::Estimation ? "estimation" : "upsilon_scaling"},
           {"spec", to_json(c.spec)},
           {"mode", c.mode == EstimationMode::Constant ? "constant" : "truncated"},
           {"eta", c.eta_true},
           {"theta", {c.theta.lower, c.theta.upper}},
           {"alpha", c.alpha},
           {"epsilon", c.epsilon},
           {"truncation", c.truncation == Truncation::Theory ? "theory" : "empirical"},
           {"grid_points", c.grid_points},
           {"n_values", c.n_values},
           {"replications", c.replications},
           {"base_seed", c.base_seed},
           {"optimizer", optimizer_to_json(c.optimizer)},
           {"quantile", c.quantile_level},
           {"trend", {{"metric", metric_name(c.trend_metric)}, {"alternative", alternative_name(c.trend_alternative)}}},
           {"regression", {{"metric", metric_name(c.regression_metric)}, {"exponent", c.regression_exponent}}}};
    if (c.audit_x) j["audit_x"] = *c.audit_x;
    return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    return guarded("experiment config", [&] {
        ExperimentConfig c;
        c.name = j.value("name", c.name);
        const std::string kind = j.value("kind", std::string("estimation"));
        if (kind == "estimation") {
            c.kind = ExperimentKind::Estimation;
        } else if (kind == "upsilon_scaling") {
            c.kind = ExperimentKind::UpsilonScaling;
        } else {
            throw DomainError("unsupported experiment kind: " + kind);
        }
        c.spec = spec_from_json(j.at("spec"));
        const std::string mode = j.value("mode", std::string("truncated"));
        if (mode != "constant" && mode != "truncated") throw DomainError("unknown mode: " + mode);
        c.mode = mode == "constant" ? EstimationMode::Constant : EstimationMode::Truncated;
        c.eta_true = j.at("eta").get<double>();
        if (j.contains("theta")) {
            const auto th = j.at("theta").get<std::vector<double>>();
            if (th.size() != 2) throw DomainError("theta must be [r, R]");
            c.theta = ThetaBox(th[0], th[1]);
        }
        c.alpha = j.value("alpha", c.alpha);
        c.epsilon = j.value("epsilon", c.epsilon);
        const std::string trunc = j.value("truncation", std::string("empirical"));
        if (trunc != "theory" && trunc != "empirical") throw DomainError("unknown truncation: " + trunc);
        c.truncation = trunc == "theory" ? Truncation::Theory : Truncation::Empirical;
        c.grid_points = j.value("grid_points", c.grid_points);
        c.n_values = horizons_from_json(j);
        c.replications = j.value("replications", c.replications);
        c.base_seed = j.value("base_seed", c.base_seed);
        if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
        c.quantile_level = j.value("quantile", c.quantile_level);

        // Defaults depend on what the experiment measures.
        if (c.kind == ExperimentKind::UpsilonScaling) {
            c.trend_metric = c.regression_metric = Metric::Upsilon;
            c.trend_alternative = stats::Alternative::Increasing;
            c.regression_exponent = 0.5;
        } else if (c.mode == EstimationMode::Constant) {
            c.trend_metric = c.regression_metric = Metric::RelError;
            c.trend_alternative = stats::Alternative::Decreasing;
            c.regression_exponent = -0.25;
        } else {
            c.trend_metric = c.regression_metric = Metric::PredError;
            c.trend_alternative = stats::Alternative::Decreasing;
            c.regression_exponent = -0.25;
        }
        if (j.contains("trend")) {
            const json& t = j.at("trend");
            if (t.contains("metric")) c.trend_metric = metric_from_name(t.at("metric").get<std::string>());
            if (t.contains("alternative"))
                c.trend_alternative = alternative_from_name(t.at("alternative").get<std::string>());
        }
        if (j.contains("regression")) {
            const json& r = j.at("regression");
            if (r.contains("metric")) c.regression_metric = metric_from_name(r.at("metric").get<std::string>());
            c.regression_exponent = r.value("exponent", c.regression_exponent);
        }
        if (j.contains("audit_x") && !j.at("audit_x").is_null()) c.audit_x = j.at("audit_x").get<double>();
        c.validate();
        return c;
    });
}

ProfileConfig profile_config_from_json(const json& j) {
    return guarded("profile config", [&] {
        ProfileConfig c;
        c.name = j.value("name", c.name);
        c.spec = spec_from_json(j.at("spec"));
        c.eta = j.at("eta").get<double>();
        c.n_values = horizons_from_json(j);
        c.replications = j.value("replications", c.replications);
        c.base_seed = j.value("base_seed", c.base_seed);
        c.deltas = deltas_from_json(j.at("deltas"));
        c.validate();
        return c;
    });
}

std::vector<json> expand_variants(const json& j) {
    const std::string name = j.value("name", std::string("experiment"));
    std::vector<json> bases;
    if (j.contains("runs")) {
        json shared = j;
        shared.erase("runs");
        for (const json& r : j.at("runs")) {
            json v = shared;
            v.merge_patch(r);
            if (!r.contains("name")) v["name"] = name + "_" + std::to_string(bases.size() + 1);
            bases.push_back(v);
        }
    } else {
        bases.push_back(j);
    }
    std::vector<json> out;
    for (const json& b : bases) {
        if (!b.contains("epsilons")) {
            out.push_back(b);
            continue;
        }
        for (const json& e : b.at("epsilons")) {
            json v = b;
            v.erase("epsilons");
            v["epsilon"] = e;
            std::ostringstream tag;
            tag << b.value("name", name) << "_eps" << e.get<double>();
            v["name"] = tag.str();
            out.push_back(v);
        }
    }
    return out;
}

void write_records_csv(std::ostream& out, const ExperimentReport& report) {
    out << "n,rep,seed,eta_true,eta_hat,rel_error,pred_error,upsilon,collapsed\n";
    for (const ExperimentRecord& r : report.records) {
        out << r.n << ',' << r.rep << ',' << r.seed << ',' << format_number(r.eta_true) << ',' << format_number(r.eta_hat) << ','
            << format_number(r.rel_error) << ',' << format_number(r.pred_error) << ',' << r.upsilon << ',' << (r.collapsed ? 1 : 0)
            << '\n';
    }
}

json summary_json(const ExperimentReport& report) {
    const ExperimentConfig& c = report.config;
    json per_n = json::array();
    for (const PerNSummary& s : report.per_n) {
        per_n.push_back(json{{"n", s.n},
                             {"completed", s.completed},
                             {"rel_error", number_or_null(s.rel_error_quantile)},
                             {"pred_error", number_or_null(s.pred_error_quantile)},
                             {"mean_upsilon", number_or_null(s.mean_upsilon)},
                             {"min_upsilon", s.min_upsilon}});
    }
    json j{{"name", c.name},
           {"quantile", c.quantile_level},
           {"records", report.records.size()},
           {"collapsed", report.collapsed},
           {"per_n_quantiles", per_n}};
    j["spearman"] = report.trend.available
                        ? json{{"metric", metric_name(c.trend_metric)},
                               {"alternative", alternative_name(c.trend_alternative)},
                               {"rho", report.trend.rho},
                               {"p", report.trend.p_value}}
                        : json{{"metric", metric_name(c.trend_metric)}, {"insufficient", true}};
    j["regression"] = report.regression
                          ? json{{"metric", metric_name(c.regression_metric)},
                                 {"exponent", report.regression->exponent},
                                 {"coefficient", report.regression->coefficient},
                                 {"r_squared", report.regression->r_squared}}
                          : json(nullptr);
    if (c.audit_x) {
        const AuditSummary& a = report.audit;
        j["audit"] = json{{"x", *c.audit_x},
                          {"audited", a.audited},
                          {"pred_bound_exceeded", a.pred_bound_exceeded},
                          {"est_bound_applicable", a.est_bound_applicable},
                          {"est_bound_exceeded", a.est_bound_exceeded},
                          {"lower_bound_checked", a.lower_bound_checked},
                          {"lower_bound_violations", a.lower_bound_violations}};
    }
    return j;
}

std::string render_svg(const ExperimentReport& report) {
    const Metric metric = report.config.regression_metric;
    std::vector<std::pair<double, double>> points;
    for (const ExperimentRecord& r : report.records) {
        if (r.collapsed) continue;
        double v = metric == Metric::RelError   ? r.rel_error
                   : metric == Metric::PredError ? r.pred_error
                                                 : static_cast<double>(r.upsilon);
        if (std::isfinite(v)) points.emplace_back(static_cast<double>(r.n), v);
    }
    const std::vector<double> markers = per_n_metric(report, metric);

    const double w = 640, h = 400, pad = 50;
    double x_lo = std::log(static_cast<double>(report.config.n_values.front()));
    double x_hi = std::log(static_cast<double>(report.config.n_values.back()));
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    double y_hi = 0.0;
    for (const auto& p : points) y_hi = std::max(y_hi, p.second);
    for (double m : markers)
        if (std::isfinite(m)) y_hi = std::max(y_hi, m);
    if (y_hi <= 0.0) y_hi = 1.0;
    const auto sx = [&](double n) { return pad + (std::log(n) - x_lo) / (x_hi - x_lo) * (w - 2 * pad); };
    const auto sy = [&](double v) { return h - pad - v / y_hi * (h - 2 * pad); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">n (log scale)</text>\n";
    s << "<text x=\"15\" y=\"" << pad - 15 << "\">" << metric_name(metric) << " (max " << format_number(y_hi) << ")</text>\n";
    for (const auto& p : points)
        s << "<circle cx=\"" << sx(p.first) << "\" cy=\"" << sy(p.second) << "\" r=\"2\" fill=\"black\"/>\n";
    for (std::size_t i = 0; i < markers.size(); ++i) {
        if (!std::isfinite(markers[i])) continue;
        s << "<rect x=\"" << sx(static_cast<double>(report.config.n_values[i])) - 4 << "\" y=\"" << sy(markers[i]) - 4
          << "\" width=\"8\" height=\"8\" fill=\"red\"/>\n";
    }
    if (report.regression) {
        s << "<polyline fill=\"none\" stroke=\"blue\" points=\"";
        for (int i = 0; i <= 100; ++i) {
            const double n = std::exp(x_lo + (x_hi - x_lo) * i / 100.0);
            const double v = report.regression->coefficient * std::pow(n, report.regression->exponent);
            s << sx(n) << ',' << sy(std::min(v, y_hi)) << ' ';
        }
        s << "\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void write_profile_csv(std::ostream& out, const std::vector<ProfileRow>& rows) {
    out << "n,rep,seed,delta,loglik,neg_infinity,evaluated_steps,collapsed\n";
    for (const ProfileRow& r : rows) {
        out << r.n << ',' << r.rep << ',' << r.seed << ',' << format_number(r.delta) << ','
            << (r.loglik.value ? format_number(*r.loglik.value) : "") << ',' << (r.loglik.is_neg_infinity() && !r.collapsed)
            << ',' << r.loglik.evaluated_steps << ',' << r.collapsed << '\n';
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("cannot parse " + path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace exp3mle::io
