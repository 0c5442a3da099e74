#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "chainloc/adversary.hpp"
#include "chainloc/chain.hpp"
#include "chainloc/geo.hpp"
#include "chainloc/identity.hpp"
#include "chainloc/random.hpp"

namespace chainloc::netsim {

using adversary::Behavior;
using geo::Position;
using identity::NodeId;

enum class Role { Anchor, Unknown };
enum class Mode { Secure, Insecure };

std::string_view to_string(Mode mode);
// Accepts "secure" or "insecure"; throws std::invalid_argument otherwise.
Mode parse_mode(std::string_view text);

struct SimConfig {
  std::size_t n_nodes = 100;
  double width = 100.0;
  double height = 100.0;
  double range_r = 30.0;
  double anchor_rate = 0.2;
  double malicious_rate = 0.0;
  double error_factor = 1.5;
  geo::PathLossParams pathloss;
  unsigned difficulty = 12;
  double slack = 1.0;
  bool reciprocal_neighbors = false;
  int max_hopcount = 5;
  int max_rounds = 10;
  std::uint64_t seed = 1;
  Mode mode = Mode::Secure;

  // Throws std::invalid_argument describing the first invalid field.
  void validate() const;
  chain::ChainRules chain_rules() const;
};

struct Node {
  NodeId id;
  Position true_position;
  Role role = Role::Unknown;
  Behavior behavior = Behavior::Honest;
  identity::KeyPair key;
};

// Deployed nodes (sorted by id) and their unit-disk radio graph.
struct Topology {
  std::vector<Node> nodes;
  std::vector<std::vector<std::size_t>> adjacency;  // ascending node indices
  double range_r = 0.0;
  double width = 0.0;
  double height = 0.0;

  std::optional<std::size_t> index_of(const NodeId& id) const;
  std::vector<NodeId> neighbor_ids(std::size_t node) const;
};

struct NodeSpec {
  Position position;
  Role role = Role::Unknown;
  Behavior behavior = Behavior::Honest;
};

// Builds a topology from explicit nodes; keys are drawn from `rng` in input order.
Topology make_topology(const std::vector<NodeSpec>& specs, double range_r, double width, double height,
                       RandomSource& rng);

// Uniform deployment on the millimeter grid of the area, anchor and
// malicious sets drawn independently, then one key pair per node.
Topology deploy(const SimConfig& config, RandomSource& rng);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

// Breadth-first hop distance from `source` to every node (kUnreachable if disconnected).
std::vector<int> hop_counts(const Topology& topology, std::size_t source);

using HopMatrix = std::vector<std::vector<int>>;
HopMatrix all_hop_counts(const Topology& topology);

// Read-only state a node consults while localizing.
struct LocalizationContext {
  const Topology* topology = nullptr;
  const HopMatrix* hops = nullptr;
  geo::PathLossParams pathloss;
  std::optional<double> avg_hop_distance;  // DV-Hop calibration from the accepted anchors
  std::uint64_t noise_seed = 0;
  int max_hopcount = 5;

  // Shadowing term for the link measured by `node` towards `reference`.
  // Fixed for the whole run so that retries see the same measurement.
  double link_noise(std::size_t node, std::size_t reference) const;
};

struct Reference {
  std::size_t node = 0;
  geo::DistanceEstimate estimate;
};

// Localized nodes (present in `known`) within `hopcount` hops of `node`.
// Direct neighbors are ranged by RSSI; farther ones by DV-Hop, and only when
// a DV-Hop calibration exists.
std::vector<Reference> discover_references(std::size_t node, int hopcount, const LocalizationContext& ctx,
                                           const std::map<NodeId, Position>& known);

// Expanding-ring localization: hopcount 1, 2, ... until three or more
// references give a non-singular trilateration.
std::optional<Position> localize_node(std::size_t node, const LocalizationContext& ctx,
                                      const std::map<NodeId, Position>& known);

std::optional<double> dvhop_calibration(const chain::Ledger& ledger, const Topology& topology,
                                        const HopMatrix& hops);

struct RunResult {
  std::map<NodeId, double> per_node_error;  // honest unknown nodes that were localized
  double mean_error = 0.0;
  std::size_t localized_count = 0;
  std::size_t unlocalized_count = 0;
  std::size_t rejected_claims = 0;
  std::size_t rounds_used = 0;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

// Canonical bytes of a result (doubles by bit pattern) for exact comparisons.
identity::Bytes serialize(const RunResult& result);

struct Simulation {
  Topology topology;
  chain::Ledger ledger;
  std::map<NodeId, Position> estimates;  // every unknown node's accepted estimate
  RunResult result;
};

// Runs the full protocol on a given topology.
Simulation simulate(Topology topology, const SimConfig& config);
// Deploys from config.seed and runs the protocol.
Simulation simulate(const SimConfig& config);

RunResult run_localization(const SimConfig& config);

}  // namespace chainloc::netsim
