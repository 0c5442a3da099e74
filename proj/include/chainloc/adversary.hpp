#pragma once

#include <cstddef>
#include <vector>

#include "chainloc/geo.hpp"
#include "chainloc/random.hpp"

namespace chainloc::adversary {

enum class Behavior { Honest, Malicious };

enum class AttackKind { PositionForge };

// A position-forging attack: the liar reports its true coordinates scaled
// by `error_factor` (1.5 means a 50% error).
struct AttackSpec {
  AttackKind kind = AttackKind::PositionForge;
  double error_factor = 1.5;

  // Throws std::invalid_argument unless error_factor is finite, positive and not 1.
  void validate() const;
};

// Componentwise scaling of the true position; the origin is its only fixed point.
geo::Position falsify_position(const geo::Position& true_pos, double factor);

// Marks exactly ceil(rate * n) of n nodes malicious, drawn uniformly without replacement.
std::vector<Behavior> assign_behaviors(std::size_t n_nodes, double malicious_rate, RandomSource& rng);

// ceil(rate * n), with a tolerance so that e.g. 0.2 * 100 does not round up to 21.
std::size_t count_for_rate(double rate, std::size_t n);

// Uniform sample of k distinct indices from [0, n), returned in ascending order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, RandomSource& rng);

}  // namespace chainloc::adversary
