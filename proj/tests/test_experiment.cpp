#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "chainloc/config.hpp"
#include "chainloc/experiment.hpp"

using namespace chainloc;
using namespace chainloc::experiment;

namespace {

ExperimentPlan small_plan() {
  ExperimentPlan p;
  p.base.difficulty = 0;
  p.base.n_nodes = 40;
  p.base.width = p.base.height = 60.0;
  p.anchor_rates = {0.2, 0.5};
  p.malicious_rates = {0.1, 0.3};
  p.runs_per_cell = 3;
  return p;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

CellResult cell(double a, double m, Mode mode, double mean, double sd) {
  CellResult c;
  c.anchor_rate = a;
  c.malicious_rate = m;
  c.mode = mode;
  c.mean_over_runs = mean;
  c.stddev_over_runs = sd;
  return c;
}

}  // namespace

TEST_CASE("run seeds ignore the mode") {
  const auto s = derive_run_seed(1, 0.2, 0.1, 0);
  CHECK(s == derive_run_seed(1, 0.2, 0.1, 0));
  CHECK(s != derive_run_seed(2, 0.2, 0.1, 0));
  CHECK(s != derive_run_seed(1, 0.5, 0.1, 0));
  CHECK(s != derive_run_seed(1, 0.2, 0.3, 0));
  CHECK(s != derive_run_seed(1, 0.2, 0.1, 1));
  CHECK(derive_run_seed(1, 0.1 + 0.2, 0.1, 0) == derive_run_seed(1, 0.3, 0.1, 0));

  netsim::SimConfig c;
  c.difficulty = 0;
  c.malicious_rate = 0.3;
  c.seed = s;
  auto i = c;
  i.mode = Mode::Insecure;
  const auto a = netsim::simulate(c), b = netsim::simulate(i);
  REQUIRE(a.topology.nodes.size() == b.topology.nodes.size());
  for (std::size_t k = 0; k < a.topology.nodes.size(); ++k) {
    CHECK(a.topology.nodes[k].id == b.topology.nodes[k].id);
    CHECK(a.topology.nodes[k].true_position == b.topology.nodes[k].true_position);
    CHECK(a.topology.nodes[k].role == b.topology.nodes[k].role);
    CHECK(a.topology.nodes[k].behavior == b.topology.nodes[k].behavior);
  }
}

TEST_CASE("aggregation") {
  netsim::RunResult r;
  r.mean_error = 3.25;
  r.localized_count = 7;
  r.rejected_claims = 2;
  const auto one = aggregate(0.2, 0.1, Mode::Secure, {r});
  CHECK(one.mean_over_runs == 3.25);
  CHECK(one.stddev_over_runs == 0.0);
  CHECK(one.mean_localized == 7.0);
  CHECK(one.mean_rejected == 2.0);

  std::vector<netsim::RunResult> runs(4);
  const double e[] = {1.0, 2.0, 4.0, 7.0};
  for (int k = 0; k < 4; ++k) runs[k].mean_error = e[k];
  const auto many = aggregate(0.2, 0.1, Mode::Insecure, runs);
  CHECK(many.mean_over_runs == doctest::Approx(3.5));
  // sample deviation: sqrt(((2.5^2 + 1.5^2 + 0.5^2 + 3.5^2)) / 3)
  CHECK(many.stddev_over_runs == doctest::Approx(std::sqrt(21.0 / 3.0)));
  CHECK(many.runs.size() == 4);
  CHECK_THROWS_AS(aggregate(0.2, 0.1, Mode::Secure, {}), std::invalid_argument);
}

TEST_CASE("single cell experiment") {
  auto p = small_plan();
  p.anchor_rates = {0.2};
  p.malicious_rates = {0.1};
  p.modes = {Mode::Secure};
  p.runs_per_cell = 1;
  const auto cells = run_experiment(p);
  REQUIRE(cells.size() == 1);
  auto cfg = p.base;
  cfg.anchor_rate = 0.2;
  cfg.malicious_rate = 0.1;
  cfg.mode = Mode::Secure;
  cfg.seed = derive_run_seed(p.base_seed, 0.2, 0.1, 0);
  CHECK(cells[0].mean_over_runs == netsim::run_localization(cfg).mean_error);
  CHECK(cells[0].stddev_over_runs == 0.0);
}

TEST_CASE("experiment grid and outputs") {
  auto p = small_plan();
  const auto cells = run_experiment(p);
  CHECK(cells.size() == 2 * 2 * 2);
  for (const auto& c : cells) {
    CHECK(c.runs.size() == 3);
    double s = 0;
    for (const auto& r : c.runs) s += r.mean_error;
    CHECK(c.mean_over_runs == doctest::Approx(s / 3));
  }

  p.jobs = 4;
  CHECK(format_csv(run_experiment(p)) == format_csv(cells));

  const auto csv = format_csv(cells);
  CHECK(count_lines(csv) == cells.size() + 1);
  CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(csv.find("0.20,0.10,insecure,") < csv.find("0.20,0.10,secure,"));
  CHECK(csv.find("0.20,0.10,secure,") < csv.find("0.20,0.30,insecure,"));
  CHECK(csv.find("0.20,0.30,secure,") < csv.find("0.50,0.10,insecure,"));

  const auto back = parse_csv(csv);
  REQUIRE(back.size() == cells.size());
  CHECK(format_csv(back) == csv);

  const auto plot = format_plot_data(cells);
  std::size_t series = 0, pos = 0;
  while ((pos = plot.find("# series:", pos)) != std::string::npos) {
    ++series;
    ++pos;
  }
  CHECK(series == 4);
  CHECK(plot.find("\n\n\n# series:") != std::string::npos);
}

TEST_CASE("csv layout") {
  std::vector<CellResult> cells{cell(0.5, 0.1, Mode::Secure, 1.5, 0.25), cell(0.2, 0.3, Mode::Insecure, 12.345678, 0),
                                cell(0.2, 0.1, Mode::Secure, 4, 1)};
  cells[0].mean_localized = 31.5;
  cells[0].mean_rejected = 2;
  const auto csv = format_csv(cells);
  CHECK(csv == std::string(kCsvHeader) +
                   "\n"
                   "0.20,0.10,secure,4.0000,1.0000,0.00,0.00\n"
                   "0.20,0.30,insecure,12.3457,0.0000,0.00,0.00\n"
                   "0.50,0.10,secure,1.5000,0.2500,31.50,2.00\n");

  const auto plot = format_plot_data({cell(0.2, 0.3, Mode::Secure, 2, 0), cell(0.2, 0.1, Mode::Secure, 1, 0)});
  CHECK(plot ==
        "# series: anchor_rate=0.20 mode=secure\n"
        "# malicious_rate mean_error_m stddev_m\n"
        "0.10 1.0000 0.0000\n"
        "0.30 2.0000 0.0000\n");
  CHECK_THROWS_AS(format_plot_data({cell(0.2, 0.1, Mode::Secure, 1, 0)}), std::invalid_argument);
}

TEST_CASE("file emission") {
  const auto dir = std::filesystem::temp_directory_path() / "chainloc_test_emit";
  std::filesystem::create_directories(dir);
  const std::vector<CellResult> cells{cell(0.2, 0.1, Mode::Secure, 1, 0), cell(0.2, 0.2, Mode::Secure, 2, 0)};
  emit_csv(cells, dir / "r.csv");
  emit_plot_data(cells, dir / "r.dat");
  std::ifstream in(dir / "r.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == format_csv(cells));
  CHECK_THROWS_AS(emit_csv({}, dir / "x.csv"), std::invalid_argument);

  const auto bad = dir / "missing" / "deeper" / "r.csv";
  try {
    emit_csv(cells, bad);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(bad.string()) != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("plan validation") {
  ExperimentPlan p;
  CHECK_NOTHROW(p.validate());
  p.runs_per_cell = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.malicious_rates.clear();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.anchor_rates = {1.5};
  CHECK_THROWS_AS(run_experiment(p), std::invalid_argument);
}

TEST_CASE("json configuration") {
  ExperimentPlan p;
  config::apply_json(p, R"({"n_nodes": 50, "anchor_rates": [0.3], "malicious_rate": 0.4, "mode": "both",
                            "runs": 4, "seed": 9, "slack": "inf", "pathloss": {"sigma": 0.5}, "tau": 2.5,
                            "difficulty": 6, "max_rounds": 3})");
  CHECK(p.base.n_nodes == 50);
  CHECK(p.anchor_rates == std::vector<double>{0.3});
  CHECK(p.malicious_rates == std::vector<double>{0.4});
  CHECK(p.modes == std::vector<Mode>{Mode::Insecure, Mode::Secure});
  CHECK(p.runs_per_cell == 4);
  CHECK(p.base_seed == 9);
  CHECK(std::isinf(p.base.slack));
  CHECK(p.base.pathloss.sigma == 0.5);
  CHECK(p.base.pathloss.tau == 2.5);
  CHECK(p.base.difficulty == 6);
  CHECK(p.base.max_rounds == 3);

  ExperimentPlan q;
  config::apply_json(q, config::dump_plan(p));
  CHECK(config::dump_plan(q) == config::dump_plan(p));

  CHECK_THROWS_AS(config::apply_json(q, R"({"nodes": 3})"), std::invalid_argument);
  CHECK_THROWS_AS(config::apply_json(q, R"({"n_nodes": "many"})"), std::invalid_argument);
  CHECK_THROWS_AS(config::apply_json(q, "{"), std::invalid_argument);

  CHECK(config::parse_rate_list("0.1,0.25") == std::vector<double>{0.1, 0.25});
  CHECK_THROWS_AS(config::parse_rate_list("0.1,,0.2"), std::invalid_argument);
  CHECK_THROWS_AS(config::parse_rate_list("x"), std::invalid_argument);
  CHECK(std::isinf(config::parse_slack("inf")));
  CHECK(config::parse_slack("1.5") == 1.5);
  CHECK(config::parse_modes("secure") == std::vector<Mode>{Mode::Secure});
}
