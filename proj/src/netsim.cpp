#include "chainloc/netsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>

#include "chainloc/encoding.hpp"

namespace chainloc::netsim {

std::string_view to_string(Mode mode) { return mode == Mode::Secure ? "secure" : "insecure"; }

Mode parse_mode(std::string_view text) {
  if (text == "secure") return Mode::Secure;
  if (text == "insecure") return Mode::Insecure;
  throw std::invalid_argument("unknown mode: " + std::string(text));
}

void SimConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(n_nodes >= 4, "n_nodes must be at least 4");
  require(width > 0.0 && height > 0.0 && std::isfinite(width) && std::isfinite(height),
          "area dimensions must be positive and finite");
  require(range_r > 0.0 && std::isfinite(range_r), "range_r must be positive");
  require(anchor_rate >= 0.0 && anchor_rate <= 1.0, "anchor_rate must lie in [0, 1]");
  require(malicious_rate >= 0.0 && malicious_rate <= 1.0, "malicious_rate must lie in [0, 1]");
  require(slack >= 1.0, "slack must be at least 1");
  require(max_hopcount >= 1, "max_hopcount must be at least 1");
  require(max_rounds >= 1, "max_rounds must be at least 1");
  require(difficulty <= 64, "difficulty above 64 bits is not minable");
  pathloss.validate();
  adversary::AttackSpec{adversary::AttackKind::PositionForge, error_factor}.validate();
}

chain::ChainRules SimConfig::chain_rules() const {
  chain::ChainRules rules;
  rules.difficulty = difficulty;
  rules.range_r = range_r;
  rules.slack = slack;
  rules.verify_claims = mode == Mode::Secure;
  rules.reciprocal_neighbors = reciprocal_neighbors;
  return rules;
}

std::optional<std::size_t> Topology::index_of(const NodeId& id) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                                   [](const Node& n, const NodeId& key) { return n.id < key; });
  if (it == nodes.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

std::vector<NodeId> Topology::neighbor_ids(std::size_t node) const {
  std::vector<NodeId> out;
  out.reserve(adjacency[node].size());
  for (const auto j : adjacency[node]) out.push_back(nodes[j].id);
  return out;
}

Topology make_topology(const std::vector<NodeSpec>& specs, double range_r, double width, double height,
                       RandomSource& rng) {
  Topology topo;
  topo.range_r = range_r;
  topo.width = width;
  topo.height = height;
  topo.nodes.reserve(specs.size());
  for (const auto& spec : specs) {
    Node node;
    node.key = identity::generate_keypair(rng);
    node.id = identity::derive_identity(node.key.public_key);
    node.true_position = spec.position;
    node.role = spec.role;
    node.behavior = spec.behavior;
    topo.nodes.push_back(std::move(node));
  }
  std::sort(topo.nodes.begin(), topo.nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });

  const std::size_t n = topo.nodes.size();
  topo.adjacency.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (geo::euclidean_distance(topo.nodes[i].true_position, topo.nodes[j].true_position) <= range_r) {
        topo.adjacency[i].push_back(j);
        topo.adjacency[j].push_back(i);
      }
    }
  }
  for (auto& list : topo.adjacency) std::sort(list.begin(), list.end());
  return topo;
}

Topology deploy(const SimConfig& config, RandomSource& rng) {
  config.validate();
  const std::size_t n = config.n_nodes;
  const auto grid_x = static_cast<std::size_t>(std::floor(config.width * 1000.0)) + 1;
  const auto grid_y = static_cast<std::size_t>(std::floor(config.height * 1000.0)) + 1;

  std::vector<NodeSpec> specs(n);
  for (auto& spec : specs) {
    spec.position.x = encoding::from_millimeters(static_cast<std::int64_t>(rng.uniform_index(grid_x)));
    spec.position.y = encoding::from_millimeters(static_cast<std::int64_t>(rng.uniform_index(grid_y)));
  }
  for (const auto i : adversary::sample_without_replacement(n, adversary::count_for_rate(config.anchor_rate, n), rng)) {
    specs[i].role = Role::Anchor;
  }
  const auto behaviors = adversary::assign_behaviors(n, config.malicious_rate, rng);
  for (std::size_t i = 0; i < n; ++i) specs[i].behavior = behaviors[i];

  return make_topology(specs, config.range_r, config.width, config.height, rng);
}

std::vector<int> hop_counts(const Topology& topology, std::size_t source) {
  std::vector<int> hops(topology.nodes.size(), kUnreachable);
  std::deque<std::size_t> frontier{source};
  hops[source] = 0;
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop_front();
    for (const auto v : topology.adjacency[u]) {
      if (hops[v] == kUnreachable) {
        hops[v] = hops[u] + 1;
        frontier.push_back(v);
      }
    }
  }
  return hops;
}

HopMatrix all_hop_counts(const Topology& topology) {
  HopMatrix out;
  out.reserve(topology.nodes.size());
  for (std::size_t i = 0; i < topology.nodes.size(); ++i) out.push_back(hop_counts(topology, i));
  return out;
}

double LocalizationContext::link_noise(std::size_t node, std::size_t reference) const {
  if (!(pathloss.sigma > 0.0)) return 0.0;
  RandomSource rng(mix64(noise_seed ^ mix64((static_cast<std::uint64_t>(node) << 32) | reference)));
  return rng.normal(0.0, pathloss.sigma);
}

std::vector<Reference> discover_references(std::size_t node, int hopcount, const LocalizationContext& ctx,
                                           const std::map<NodeId, Position>& known) {
  const Topology& topo = *ctx.topology;
  const auto& row = (*ctx.hops)[node];
  std::vector<Reference> refs;
  for (std::size_t j = 0; j < topo.nodes.size(); ++j) {
    const int hops = row[j];
    if (j == node || hops == kUnreachable || hops > hopcount) continue;
    if (!known.contains(topo.nodes[j].id)) continue;
    if (hops == 1) {
      // Coincident nodes cannot be resolved below the millimeter grid.
      const double true_d = std::max(
          geo::euclidean_distance(topo.nodes[node].true_position, topo.nodes[j].true_position), 1e-3);
      refs.push_back({j, geo::measure_distance_rssi_with_noise(true_d, ctx.pathloss, ctx.link_noise(node, j))});
    } else if (ctx.avg_hop_distance) {
      refs.push_back({j, geo::dvhop_distance(*ctx.avg_hop_distance, hops)});
    }
  }
  return refs;
}

std::optional<Position> localize_node(std::size_t node, const LocalizationContext& ctx,
                                      const std::map<NodeId, Position>& known) {
  std::size_t previous = 0;
  for (int hopcount = 1; hopcount <= ctx.max_hopcount; ++hopcount) {
    const auto refs = discover_references(node, hopcount, ctx, known);
    if (refs.size() < 3 || refs.size() == previous) continue;
    previous = refs.size();

    std::vector<geo::RangeReference> ranged;
    ranged.reserve(refs.size());
    for (const auto& ref : refs) {
      ranged.push_back({known.at(ctx.topology->nodes[ref.node].id), ref.estimate.meters});
    }
    try {
      return geo::trilaterate(ranged);
    } catch (const geo::SingularGeometryError&) {
      // Collinear references: widen the ring and try again.
    }
  }
  return std::nullopt;
}

std::optional<double> dvhop_calibration(const chain::Ledger& ledger, const Topology& topology,
                                        const HopMatrix& hops) {
  std::vector<std::size_t> idx;
  std::vector<Position> positions;
  for (std::size_t b = 0; b < ledger.genesis_count(); ++b) {
    const auto& claim = ledger.blocks()[b].claim;
    const auto i = topology.index_of(claim.node_id);
    if (!i) continue;
    idx.push_back(*i);
    positions.push_back(claim.position);
  }
  geo::AnchorHopTable table;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const int h = hops[idx[a]][idx[b]];
      if (h != kUnreachable && h > 0) table[{a, b}] = h;
    }
  }
  if (table.empty()) return std::nullopt;
  const double avg = geo::dvhop_avg_hop_distance(positions, table);
  if (!(avg > 0.0)) return std::nullopt;
  return avg;
}

identity::Bytes serialize(const RunResult& result) {
  encoding::ByteWriter w;
  w.u64(result.per_node_error.size());
  for (const auto& [id, err] : result.per_node_error) {
    w.raw(id.bytes);
    w.u64(std::bit_cast<std::uint64_t>(err));
  }
  w.u64(std::bit_cast<std::uint64_t>(result.mean_error));
  w.u64(result.localized_count);
  w.u64(result.unlocalized_count);
  w.u64(result.rejected_claims);
  w.u64(result.rounds_used);
  return std::move(w).take();
}

namespace {

chain::LocationClaim claim_for(const Topology& topo, std::size_t i, const Position& position) {
  return chain::make_claim(topo.nodes[i].key, position, topo.neighbor_ids(i));
}

Position reported_position(const Node& node, const Position& honest, double error_factor) {
  return node.behavior == Behavior::Malicious ? adversary::falsify_position(node.true_position, error_factor)
                                              : honest;
}

}  // namespace

Simulation simulate(Topology topology, const SimConfig& config) {
  config.validate();
  const chain::ChainRules rules = config.chain_rules();

  Simulation sim;
  sim.topology = std::move(topology);
  const Topology& topo = sim.topology;
  const HopMatrix hops = all_hop_counts(topo);

  std::vector<chain::LocationClaim> anchor_claims;
  for (std::size_t i = 0; i < topo.nodes.size(); ++i) {
    const Node& node = topo.nodes[i];
    if (node.role != Role::Anchor) continue;
    anchor_claims.push_back(claim_for(topo, i, reported_position(node, node.true_position, config.error_factor)));
  }
  std::vector<NodeId> rejected_anchors;
  sim.ledger = chain::build_genesis(anchor_claims, rules, &rejected_anchors);

  RunResult& result = sim.result;
  result.rejected_claims = rejected_anchors.size();

  LocalizationContext ctx;
  ctx.topology = &topo;
  ctx.hops = &hops;
  ctx.pathloss = config.pathloss;
  ctx.avg_hop_distance = dvhop_calibration(sim.ledger, topo, hops);
  ctx.noise_seed = mix64(config.seed ^ 0x6e6f697365ULL);
  ctx.max_hopcount = config.max_hopcount;

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < topo.nodes.size(); ++i) {
    if (topo.nodes[i].role == Role::Unknown) pending.push_back(i);
  }

  // The discovery ring starts at one hop and widens only after a round that
  // localized nobody, so nearby localized nodes are preferred over DV-Hop.
  int ring = 1;
  for (int round = 0; round < config.max_rounds && !pending.empty(); ++round) {
    ++result.rounds_used;
    ctx.max_hopcount = ring;
    const std::map<NodeId, Position> snapshot = sim.ledger.position_index();
    std::vector<std::size_t> still_pending;
    for (const auto i : pending) {
      const auto estimate = localize_node(i, ctx, snapshot);
      if (!estimate) {
        still_pending.push_back(i);
        continue;
      }
      const Node& node = topo.nodes[i];
      const auto claim = claim_for(topo, i, reported_position(node, *estimate, config.error_factor));
      if (rules.verify_claims && !chain::verify_position_claim(claim, sim.ledger, rules).accepted) {
        ++result.rejected_claims;
        still_pending.push_back(i);
        continue;
      }
      chain::append_block(sim.ledger, chain::mine_block(claim, chain::next_link(sim.ledger), rules.difficulty),
                          rules);
      sim.estimates[node.id] = *estimate;
    }
    const bool progress = still_pending.size() < pending.size();
    pending = std::move(still_pending);
    if (!progress) {
      if (ring >= config.max_hopcount) break;
      ++ring;
    }
  }

  double total = 0.0;
  std::size_t honest_unknown = 0;
  for (const auto& node : topo.nodes) {
    if (node.role != Role::Unknown || node.behavior != Behavior::Honest) continue;
    ++honest_unknown;
    const auto it = sim.estimates.find(node.id);
    if (it == sim.estimates.end()) continue;
    const double err = geo::euclidean_distance(it->second, node.true_position);
    result.per_node_error[node.id] = err;
    total += err;
  }
  result.localized_count = result.per_node_error.size();
  result.unlocalized_count = honest_unknown - result.localized_count;
  result.mean_error = result.localized_count > 0 ? total / static_cast<double>(result.localized_count) : 0.0;
  return sim;
}

Simulation simulate(const SimConfig& config) {
  config.validate();
  RandomSource rng(config.seed);
  return simulate(deploy(config, rng), config);
}

RunResult run_localization(const SimConfig& config) { return simulate(config).result; }

}  // namespace chainloc::netsim
