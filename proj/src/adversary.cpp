#include "chainloc/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace chainloc::adversary {

void AttackSpec::validate() const {
  if (!std::isfinite(error_factor) || !(error_factor > 0.0) || error_factor == 1.0) {
    throw std::invalid_argument("attack error_factor must be positive and different from 1");
  }
}

geo::Position falsify_position(const geo::Position& true_pos, double factor) {
  AttackSpec{AttackKind::PositionForge, factor}.validate();
  return {factor * true_pos.x, factor * true_pos.y};
}

std::size_t count_for_rate(double rate, std::size_t n) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("rate must lie in [0, 1]");
  const double exact = rate * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(exact - 1e-9)));
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, RandomSource& rng) {
  if (k > n) throw std::invalid_argument("sample larger than population");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<Behavior> assign_behaviors(std::size_t n_nodes, double malicious_rate, RandomSource& rng) {
  std::vector<Behavior> out(n_nodes, Behavior::Honest);
  for (const auto i : sample_without_replacement(n_nodes, count_for_rate(malicious_rate, n_nodes), rng)) {
    out[i] = Behavior::Malicious;
  }
  return out;
}

}  // namespace chainloc::adversary
