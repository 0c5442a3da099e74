#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "chainloc/netsim.hpp"

namespace chainloc::experiment {

using netsim::Mode;
using netsim::RunResult;
using netsim::SimConfig;

// A sweep over anchor rate x malicious rate x mode, repeated per cell.
struct ExperimentPlan {
  SimConfig base;
  std::vector<double> anchor_rates{0.2, 0.5};
  std::vector<double> malicious_rates{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<Mode> modes{Mode::Insecure, Mode::Secure};
  std::size_t runs_per_cell = 10;
  std::uint64_t base_seed = 1;
  unsigned jobs = 1;  // worker threads; output does not depend on it

  // Validates the plan and every cell's SimConfig before anything runs.
  void validate() const;
};

struct CellResult {
  double anchor_rate = 0.0;
  double malicious_rate = 0.0;
  Mode mode = Mode::Secure;
  double mean_over_runs = 0.0;
  double stddev_over_runs = 0.0;  // sample standard deviation; 0 for a single run
  double mean_localized = 0.0;
  double mean_rejected = 0.0;
  std::vector<RunResult> runs;  // not serialized
};

// Seed of one run. The mode is deliberately not an input, so the secure and
// insecure variants of a run share topology, keys and attacker placement.
std::uint64_t derive_run_seed(std::uint64_t base_seed, double anchor_rate, double malicious_rate,
                              std::size_t run_index);

CellResult aggregate(double anchor_rate, double malicious_rate, Mode mode, std::vector<RunResult> runs);

// Results sorted by (anchor_rate, malicious_rate, mode name).
std::vector<CellResult> run_experiment(const ExperimentPlan& plan);

void sort_cells(std::vector<CellResult>& cells);

inline constexpr std::string_view kCsvHeader =
    "anchor_rate,malicious_rate,mode,mean_error_m,stddev_m,mean_localized,mean_rejected";

std::string format_csv(std::vector<CellResult> results);
std::vector<CellResult> parse_csv(std::string_view text);
std::string format_plot_data(std::vector<CellResult> results);

// Both throw std::runtime_error naming the path on I/O failure.
void emit_csv(const std::vector<CellResult>& results, const std::filesystem::path& path);
void emit_plot_data(const std::vector<CellResult>& results, const std::filesystem::path& path);

}  // namespace chainloc::experiment
