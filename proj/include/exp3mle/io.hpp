#pragma once

// JSON/CSV/SVG serialization for trajectories, experiment configs and reports.
// Arm indices are 1-based on disk and 0-based in memory.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "exp3mle/bandit.hpp"
#include "exp3mle/estimator.hpp"
#include "exp3mle/experiments.hpp"

namespace exp3mle::io {

using nlohmann::json;

json to_json(const BanditSpec& spec);
BanditSpec spec_from_json(const json& j);

json to_json(const RateSchedule& schedule);
RateSchedule schedule_from_json(const json& j);

// {spec, schedule, n, seed, arms}; the probability path is rebuilt on load.
json to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const json& j);

json to_json(const EstimationResult& result);
json to_json(const LikelihoodValue& value, std::size_t upsilon_used);

json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const json& j);
ProfileConfig profile_config_from_json(const json& j);

// Expands a preset into one config per run: entries of "runs" are merged over
// the shared fields, and a list of "epsilons" yields one config per value
// (named <name>_eps<value>).
std::vector<json> expand_variants(const json& j);

void write_records_csv(std::ostream& out, const ExperimentReport& report);
json summary_json(const ExperimentReport& report);
// Scatter of the regression metric against n, with per-n markers and the fitted curve.
std::string render_svg(const ExperimentReport& report);

void write_profile_csv(std::ostream& out, const std::vector<ProfileRow>& rows);

// File helpers; failures raise IoError.
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Shortest text that reads back to the same double; empty for NaN.
std::string format_number(double v);

std::string metric_name(Metric metric);
Metric metric_from_name(const std::string& name);

}  // namespace exp3mle::io
