#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "chainloc/experiment.hpp"

namespace chainloc::config {

// Overlays a JSON document onto `plan`. Keys mirror the SimConfig and
// ExperimentPlan field names; path-loss fields may be given flat or under a
// "pathloss" object, and "slack" accepts a number or "inf". Unknown keys and
// ill-typed values throw std::invalid_argument.
void apply_json(experiment::ExperimentPlan& plan, std::string_view json_text);

// Default plan overlaid with the file's contents.
experiment::ExperimentPlan load_plan(const std::filesystem::path& path);

// The plan rendered back as a JSON document accepted by apply_json.
std::string dump_plan(const experiment::ExperimentPlan& plan);

// "0.1,0.2,0.3" -> {0.1, 0.2, 0.3}.
std::vector<double> parse_rate_list(std::string_view text);

// A real number, "inf" or "infinity".
double parse_slack(std::string_view text);

// "secure", "insecure" or "both".
std::vector<netsim::Mode> parse_modes(std::string_view text);

}  // namespace chainloc::config
