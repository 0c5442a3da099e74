// chainloc: secure localization experiments over a proof-of-work location ledger.

#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "chainloc/chain.hpp"
#include "chainloc/config.hpp"
#include "chainloc/experiment.hpp"
#include "chainloc/netsim.hpp"

namespace {

using chainloc::experiment::ExperimentPlan;

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> anchor_rates;
  std::optional<std::string> malicious_rates;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<unsigned> difficulty;
  std::optional<std::size_t> n_nodes;
  std::optional<double> width;
  std::optional<double> height;
  std::optional<double> range_r;
  std::optional<double> error_factor;
  std::optional<std::string> slack;
  std::optional<int> max_hopcount;
  std::optional<int> max_rounds;
  std::optional<double> p_tr;
  std::optional<double> p_loss_d0;
  std::optional<double> tau;
  std::optional<double> d0;
  std::optional<double> sigma;
  std::optional<unsigned> jobs;
  bool reciprocal = false;
};

void add_plan_options(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config, "JSON config file (defaults reproduce the 100-node, 100x100 m, R=30 m setup)");
  app.add_option("--anchor-rates", o.anchor_rates, "Comma-separated anchor rates");
  app.add_option("--malicious-rates", o.malicious_rates, "Comma-separated malicious-node rates");
  app.add_option("--runs", o.runs, "Runs per cell");
  app.add_option("--seed", o.seed, "Base seed");
  app.add_option("--mode", o.mode, "secure, insecure or both");
  app.add_option("--difficulty", o.difficulty, "Proof-of-work leading zero bits");
  app.add_option("--n-nodes", o.n_nodes, "Number of deployed nodes");
  app.add_option("--width", o.width, "Area width (m)");
  app.add_option("--height", o.height, "Area height (m)");
  app.add_option("--range-r", o.range_r, "Radio range (m)");
  app.add_option("--error-factor", o.error_factor, "Position scaling applied by malicious nodes");
  app.add_option("--slack", o.slack, "Vicinity slack factor (>= 1, or inf)");
  app.add_option("--max-hopcount", o.max_hopcount, "Largest discovery ring");
  app.add_option("--max-rounds", o.max_rounds, "Localization rounds");
  app.add_option("--p-tr", o.p_tr, "Transmit power (dBm)");
  app.add_option("--p-loss-d0", o.p_loss_d0, "Path loss at the reference distance (dB)");
  app.add_option("--tau", o.tau, "Path-loss exponent");
  app.add_option("--d0", o.d0, "Reference distance (m)");
  app.add_option("--sigma", o.sigma, "Shadowing standard deviation (dB)");
  app.add_option("--jobs", o.jobs, "Worker threads");
  app.add_flag("--reciprocal-neighbors", o.reciprocal, "Require listed neighbors to list the claimant back");
}

ExperimentPlan build_plan(const Overrides& o) {
  ExperimentPlan plan = o.config ? chainloc::config::load_plan(*o.config) : ExperimentPlan{};
  auto& b = plan.base;
  if (o.anchor_rates) plan.anchor_rates = chainloc::config::parse_rate_list(*o.anchor_rates);
  if (o.malicious_rates) plan.malicious_rates = chainloc::config::parse_rate_list(*o.malicious_rates);
  if (o.runs) plan.runs_per_cell = *o.runs;
  if (o.seed) plan.base_seed = *o.seed;
  if (o.mode) plan.modes = chainloc::config::parse_modes(*o.mode);
  if (o.jobs) plan.jobs = *o.jobs;
  if (o.difficulty) b.difficulty = *o.difficulty;
  if (o.n_nodes) b.n_nodes = *o.n_nodes;
  if (o.width) b.width = *o.width;
  if (o.height) b.height = *o.height;
  if (o.range_r) b.range_r = *o.range_r;
  if (o.error_factor) b.error_factor = *o.error_factor;
  if (o.slack) b.slack = chainloc::config::parse_slack(*o.slack);
  if (o.max_hopcount) b.max_hopcount = *o.max_hopcount;
  if (o.max_rounds) b.max_rounds = *o.max_rounds;
  if (o.p_tr) b.pathloss.p_tr = *o.p_tr;
  if (o.p_loss_d0) b.pathloss.p_loss_d0 = *o.p_loss_d0;
  if (o.tau) b.pathloss.tau = *o.tau;
  if (o.d0) b.pathloss.d0 = *o.d0;
  if (o.sigma) b.pathloss.sigma = *o.sigma;
  if (o.reciprocal) b.reciprocal_neighbors = true;
  plan.validate();
  return plan;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ChainLoc secure localization simulator"};
  app.require_subcommand(1);

  Overrides run_opts;
  std::string csv_out = "results.csv";
  std::optional<std::string> plot_out;
  bool dump_config = false;
  auto* run = app.add_subcommand("run", "Run a malicious-rate sweep and write CSV / plot data");
  add_plan_options(*run, run_opts);
  run->add_option("--out", csv_out, "CSV output path");
  run->add_option("--plot-out", plot_out, "gnuplot data output path");
  run->add_flag("--dump-config", dump_config, "Print the effective plan as JSON and exit");

  Overrides sim_opts;
  std::optional<std::string> chain_out;
  auto* simulate = app.add_subcommand("simulate", "Run one simulation and print its result");
  add_plan_options(*simulate, sim_opts);
  simulate->add_option("--chain-out", chain_out, "Write the resulting ledger to this file");

  std::string chain_in;
  unsigned verify_difficulty = 12;
  double verify_range = 30.0;
  std::string verify_slack = "1";
  bool verify_claims = true;
  auto* verify_chain = app.add_subcommand("verify-chain", "Replay and validate a chain file");
  verify_chain->add_option("file", chain_in, "Chain file")->required();
  verify_chain->add_option("--difficulty", verify_difficulty, "Proof-of-work leading zero bits");
  verify_chain->add_option("--range-r", verify_range, "Radio range (m)");
  verify_chain->add_option("--slack", verify_slack, "Vicinity slack factor");
  verify_chain->add_flag("!--no-claims", verify_claims, "Check only linkage and proof of work");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ExperimentPlan plan = build_plan(run_opts);
      if (dump_config) {
        std::cout << chainloc::config::dump_plan(plan);
        return 0;
      }
      const auto start = std::chrono::steady_clock::now();
      const auto cells = chainloc::experiment::run_experiment(plan);
      chainloc::experiment::emit_csv(cells, csv_out);
      if (plot_out) chainloc::experiment::emit_plot_data(cells, *plot_out);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      std::cout << chainloc::experiment::format_csv(cells);
      std::fprintf(stderr, "%zu cells, %zu runs each, %.1f s -> %s\n", cells.size(), plan.runs_per_cell,
                   elapsed.count(), csv_out.c_str());
    } else if (simulate->parsed()) {
      const ExperimentPlan plan = build_plan(sim_opts);
      auto cfg = plan.base;
      cfg.anchor_rate = plan.anchor_rates.front();
      cfg.malicious_rate = plan.malicious_rates.front();
      // "both" (the default) has no single answer here; secure is the interesting one
      cfg.mode = plan.modes.size() == 1 ? plan.modes.front() : chainloc::netsim::Mode::Secure;
      cfg.seed = plan.base_seed;
      const auto sim = chainloc::netsim::simulate(cfg);
      const auto& r = sim.result;
      std::printf("mode=%s mean_error_m=%.4f localized=%zu unlocalized=%zu rejected=%zu rounds=%zu blocks=%zu\n",
                  std::string(chainloc::netsim::to_string(cfg.mode)).c_str(), r.mean_error, r.localized_count,
                  r.unlocalized_count, r.rejected_claims, r.rounds_used, sim.ledger.size());
      if (chain_out) chainloc::chain::write_chain_file(sim.ledger, *chain_out);
    } else if (verify_chain->parsed()) {
      const auto file = chainloc::chain::read_chain_file(chain_in);
      chainloc::chain::ChainRules rules;
      rules.difficulty = verify_difficulty;
      rules.range_r = verify_range;
      rules.slack = chainloc::config::parse_slack(verify_slack);
      rules.verify_claims = verify_claims;
      const auto replay = chainloc::chain::replay_chain(file.blocks, file.genesis_count, rules);
      if (!replay.ok) {
        std::printf("INVALID at block %zu: %s\n", replay.failed_index,
                    std::string(chainloc::chain::to_string(replay.reason)).c_str());
        return 2;
      }
      std::printf("OK: %zu blocks (%zu genesis), %zu positioned nodes\n", file.blocks.size(), file.genesis_count,
                  replay.ledger.position_index().size());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "chainloc: %s\n", e.what());
    return 1;
  }
  return 0;
}
