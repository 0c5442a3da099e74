#include "chainloc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "chainloc/encoding.hpp"
#include "chainloc/identity.hpp"

namespace chainloc::experiment {
namespace {

std::int64_t rate_key(double rate) { return std::llround(rate * 10000.0); }

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (runs_per_cell < 1) throw std::invalid_argument("runs_per_cell must be at least 1");
  if (anchor_rates.empty()) throw std::invalid_argument("anchor_rates must not be empty");
  if (malicious_rates.empty()) throw std::invalid_argument("malicious_rates must not be empty");
  if (modes.empty()) throw std::invalid_argument("modes must not be empty");
  for (const double a : anchor_rates) {
    for (const double m : malicious_rates) {
      for (const Mode mode : modes) {
        SimConfig cfg = base;
        cfg.anchor_rate = a;
        cfg.malicious_rate = m;
        cfg.mode = mode;
        cfg.validate();
      }
    }
  }
}

std::uint64_t derive_run_seed(std::uint64_t base_seed, double anchor_rate, double malicious_rate,
                              std::size_t run_index) {
  encoding::ByteWriter w;
  w.u64(base_seed);
  w.i64(rate_key(anchor_rate));
  w.i64(rate_key(malicious_rate));
  w.u64(run_index);
  const auto digest = identity::sha256(w.bytes());
  std::uint64_t seed = 0;
  for (std::size_t i = 0; i < 8; ++i) seed = (seed << 8) | digest[i];
  return seed;
}

CellResult aggregate(double anchor_rate, double malicious_rate, Mode mode, std::vector<RunResult> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  CellResult cell;
  cell.anchor_rate = anchor_rate;
  cell.malicious_rate = malicious_rate;
  cell.mode = mode;
  const auto n = static_cast<double>(runs.size());
  for (const auto& run : runs) {
    cell.mean_over_runs += run.mean_error;
    cell.mean_localized += static_cast<double>(run.localized_count);
    cell.mean_rejected += static_cast<double>(run.rejected_claims);
  }
  cell.mean_over_runs /= n;
  cell.mean_localized /= n;
  cell.mean_rejected /= n;
  if (runs.size() > 1) {
    double ss = 0.0;
    for (const auto& run : runs) ss += (run.mean_error - cell.mean_over_runs) * (run.mean_error - cell.mean_over_runs);
    cell.stddev_over_runs = std::sqrt(ss / (n - 1.0));
  }
  cell.runs = std::move(runs);
  return cell;
}

void sort_cells(std::vector<CellResult>& cells) {
  std::stable_sort(cells.begin(), cells.end(), [](const CellResult& a, const CellResult& b) {
    return std::tuple(rate_key(a.anchor_rate), rate_key(a.malicious_rate), netsim::to_string(a.mode)) <
           std::tuple(rate_key(b.anchor_rate), rate_key(b.malicious_rate), netsim::to_string(b.mode));
  });
}

std::vector<CellResult> run_experiment(const ExperimentPlan& plan) {
  plan.validate();

  struct Task {
    std::size_t cell;
    SimConfig config;
  };
  struct CellKey {
    double anchor_rate;
    double malicious_rate;
    Mode mode;
  };
  std::vector<CellKey> keys;
  std::vector<Task> tasks;
  for (const double a : plan.anchor_rates) {
    for (const double m : plan.malicious_rates) {
      for (const Mode mode : plan.modes) {
        const std::size_t cell = keys.size();
        keys.push_back({a, m, mode});
        for (std::size_t r = 0; r < plan.runs_per_cell; ++r) {
          SimConfig cfg = plan.base;
          cfg.anchor_rate = a;
          cfg.malicious_rate = m;
          cfg.mode = mode;
          cfg.seed = derive_run_seed(plan.base_seed, a, m, r);
          tasks.push_back({cell, cfg});
        }
      }
    }
  }

  std::vector<RunResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) results[t] = netsim::run_localization(tasks[t].config);
  };
  const unsigned jobs = std::max(1U, plan.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::vector<std::vector<RunResult>> per_cell(keys.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) per_cell[tasks[t].cell].push_back(std::move(results[t]));

  std::vector<CellResult> cells;
  cells.reserve(keys.size());
  for (std::size_t c = 0; c < keys.size(); ++c) {
    cells.push_back(aggregate(keys[c].anchor_rate, keys[c].malicious_rate, keys[c].mode, std::move(per_cell[c])));
  }
  sort_cells(cells);
  return cells;
}

std::string format_csv(std::vector<CellResult> results) {
  sort_cells(results);
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& c : results) {
    out += fixed(c.anchor_rate, 2) + ',' + fixed(c.malicious_rate, 2) + ',' + std::string(netsim::to_string(c.mode)) +
           ',' + fixed(c.mean_over_runs, 4) + ',' + fixed(c.stddev_over_runs, 4) + ',' + fixed(c.mean_localized, 2) +
           ',' + fixed(c.mean_rejected, 2) + '\n';
  }
  return out;
}

std::vector<CellResult> parse_csv(std::string_view text) {
  std::vector<CellResult> out;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("CSV header mismatch");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 7) throw std::invalid_argument("CSV row has wrong field count: " + line);
    CellResult c;
    c.anchor_rate = std::stod(fields[0]);
    c.malicious_rate = std::stod(fields[1]);
    c.mode = netsim::parse_mode(fields[2]);
    c.mean_over_runs = std::stod(fields[3]);
    c.stddev_over_runs = std::stod(fields[4]);
    c.mean_localized = std::stod(fields[5]);
    c.mean_rejected = std::stod(fields[6]);
    out.push_back(std::move(c));
  }
  return out;
}

std::string format_plot_data(std::vector<CellResult> results) {
  sort_cells(results);
  std::map<std::tuple<std::int64_t, std::string>, std::vector<const CellResult*>> series;
  std::map<std::int64_t, bool> malicious_rates;
  for (const auto& c : results) {
    series[{rate_key(c.anchor_rate), std::string(netsim::to_string(c.mode))}].push_back(&c);
    malicious_rates[rate_key(c.malicious_rate)] = true;
  }
  if (malicious_rates.size() < 2) throw std::invalid_argument("plot data needs at least two malicious rates");

  std::string out;
  bool first = true;
  for (const auto& [key, points] : series) {
    if (!first) out += "\n\n";
    first = false;
    out += "# series: anchor_rate=" + fixed(points.front()->anchor_rate, 2) + " mode=" + std::get<1>(key) + '\n';
    out += "# malicious_rate mean_error_m stddev_m\n";
    for (const CellResult* c : points) {
      out += fixed(c->malicious_rate, 2) + ' ' + fixed(c->mean_over_runs, 4) + ' ' + fixed(c->stddev_over_runs, 4) + '\n';
    }
  }
  return out;
}

void emit_csv(const std::vector<CellResult>& results, const std::filesystem::path& path) {
  if (results.empty()) throw std::invalid_argument("emit_csv: no results");
  write_file(path, format_csv(results));
}

void emit_plot_data(const std::vector<CellResult>& results, const std::filesystem::path& path) {
  write_file(path, format_plot_data(results));
}

}  // namespace chainloc::experiment
