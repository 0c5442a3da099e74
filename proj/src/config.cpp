#include "chainloc/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace chainloc::config {
namespace {

using nlohmann::json;

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw std::invalid_argument("config: '" + key + "' must be a number");
  return v.get<double>();
}

template <typename Int>
Int as_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw std::invalid_argument("config: '" + key + "' must be a non-negative integer");
  }
  return v.get<Int>();
}

std::vector<double> as_rates(const json& v, const std::string& key) {
  if (!v.is_array()) throw std::invalid_argument("config: '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_number(e, key));
  return out;
}

bool apply_pathloss(geo::PathLossParams& p, const std::string& key, const json& v) {
  if (key == "p_tr") p.p_tr = as_number(v, key);
  else if (key == "p_loss_d0") p.p_loss_d0 = as_number(v, key);
  else if (key == "tau") p.tau = as_number(v, key);
  else if (key == "d0") p.d0 = as_number(v, key);
  else if (key == "sigma") p.sigma = as_number(v, key);
  else return false;
  return true;
}

}  // namespace

double parse_slack(std::string_view text) {
  if (text == "inf" || text == "infinity" || text == "Infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const std::string s(text);
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: " + s);
  }
  if (used != s.size()) throw std::invalid_argument("not a number: " + s);
  return v;
}

std::vector<double> parse_rate_list(std::string_view text) {
  std::vector<double> out;
  std::stringstream in{std::string(text)};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) throw std::invalid_argument("empty entry in rate list");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("not a rate: " + item);
    }
    if (used != item.size()) throw std::invalid_argument("not a rate: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty rate list");
  return out;
}

std::vector<netsim::Mode> parse_modes(std::string_view text) {
  if (text == "both") return {netsim::Mode::Insecure, netsim::Mode::Secure};
  return {netsim::parse_mode(text)};
}

void apply_json(experiment::ExperimentPlan& plan, std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");

  netsim::SimConfig& base = plan.base;
  for (const auto& [key, v] : doc.items()) {
    if (key == "n_nodes") base.n_nodes = as_count<std::size_t>(v, key);
    else if (key == "width") base.width = as_number(v, key);
    else if (key == "height") base.height = as_number(v, key);
    else if (key == "range_r") base.range_r = as_number(v, key);
    else if (key == "anchor_rate") plan.anchor_rates = {as_number(v, key)};
    else if (key == "malicious_rate") plan.malicious_rates = {as_number(v, key)};
    else if (key == "anchor_rates") plan.anchor_rates = as_rates(v, key);
    else if (key == "malicious_rates") plan.malicious_rates = as_rates(v, key);
    else if (key == "error_factor") base.error_factor = as_number(v, key);
    else if (key == "difficulty") base.difficulty = as_count<unsigned>(v, key);
    else if (key == "slack") base.slack = v.is_string() ? parse_slack(v.get<std::string>()) : as_number(v, key);
    else if (key == "reciprocal_neighbors") {
      if (!v.is_boolean()) throw std::invalid_argument("config: 'reciprocal_neighbors' must be a boolean");
      base.reciprocal_neighbors = v.get<bool>();
    } else if (key == "max_hopcount") base.max_hopcount = as_count<int>(v, key);
    else if (key == "max_rounds") base.max_rounds = as_count<int>(v, key);
    else if (key == "seed" || key == "base_seed") plan.base_seed = as_count<std::uint64_t>(v, key);
    else if (key == "mode" || key == "modes") {
      if (v.is_string()) {
        plan.modes = parse_modes(v.get<std::string>());
      } else if (v.is_array()) {
        plan.modes.clear();
        for (const auto& m : v) {
          if (!m.is_string()) throw std::invalid_argument("config: modes must be strings");
          plan.modes.push_back(netsim::parse_mode(m.get<std::string>()));
        }
      } else {
        throw std::invalid_argument("config: '" + key + "' must be a string or array");
      }
    } else if (key == "runs_per_cell" || key == "runs") plan.runs_per_cell = as_count<std::size_t>(v, key);
    else if (key == "jobs") plan.jobs = as_count<unsigned>(v, key);
    else if (key == "pathloss") {
      if (!v.is_object()) throw std::invalid_argument("config: 'pathloss' must be an object");
      for (const auto& [pk, pv] : v.items()) {
        if (!apply_pathloss(base.pathloss, pk, pv)) throw std::invalid_argument("config: unknown pathloss key '" + pk + "'");
      }
    } else if (!apply_pathloss(base.pathloss, key, v)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

experiment::ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  experiment::ExperimentPlan plan;
  try {
    apply_json(plan, buffer.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return plan;
}

std::string dump_plan(const experiment::ExperimentPlan& plan) {
  const auto& b = plan.base;
  json modes = json::array();
  for (const auto m : plan.modes) modes.push_back(std::string(netsim::to_string(m)));
  json doc = {
      {"n_nodes", b.n_nodes},
      {"width", b.width},
      {"height", b.height},
      {"range_r", b.range_r},
      {"anchor_rates", plan.anchor_rates},
      {"malicious_rates", plan.malicious_rates},
      {"error_factor", b.error_factor},
      {"pathloss",
       {{"p_tr", b.pathloss.p_tr},
        {"p_loss_d0", b.pathloss.p_loss_d0},
        {"tau", b.pathloss.tau},
        {"d0", b.pathloss.d0},
        {"sigma", b.pathloss.sigma}}},
      {"difficulty", b.difficulty},
      {"reciprocal_neighbors", b.reciprocal_neighbors},
      {"max_hopcount", b.max_hopcount},
      {"max_rounds", b.max_rounds},
      {"base_seed", plan.base_seed},
      {"modes", modes},
      {"runs_per_cell", plan.runs_per_cell},
      {"jobs", plan.jobs},
  };
  if (std::isinf(b.slack)) doc["slack"] = "inf";
  else doc["slack"] = b.slack;
  return doc.dump(2) + "\n";
}

}  // namespace chainloc::config
