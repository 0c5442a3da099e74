#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chainloc/adversary.hpp"
#include "chainloc/random.hpp"

using namespace chainloc;
using namespace chainloc::adversary;

TEST_CASE("position forging") {
  CHECK(falsify_position({10, 20}, 1.5) == geo::Position{15, 30});
  CHECK(falsify_position({0, 0}, 1.5) == geo::Position{0, 0});
  CHECK(falsify_position({0, 0}, 0.3) == geo::Position{0, 0});
  CHECK_THROWS_AS(falsify_position({1, 1}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(falsify_position({1, 1}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(falsify_position({1, 1}, -2.0), std::invalid_argument);

  AttackSpec spec;
  CHECK(spec.error_factor == 1.5);
  CHECK_NOTHROW(spec.validate());
  spec.error_factor = 1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("forged displacement grows with distance from the origin") {
  RandomSource rng(4);
  for (int i = 0; i < 500; ++i) {
    const geo::Position p{rng.uniform(-100, 100), rng.uniform(-100, 100)};
    const double f = rng.uniform(0.1, 3.0);
    if (std::abs(f - 1.0) < 1e-6) continue;
    const auto q = falsify_position(p, f);
    CHECK(geo::euclidean_distance(p, q) ==
          doctest::Approx(std::abs(f - 1.0) * geo::euclidean_distance(p, {0, 0})).epsilon(1e-12));
    CHECK_FALSE(q == p);
  }
}

TEST_CASE("behavior assignment") {
  RandomSource rng(1);
  const auto none = assign_behaviors(100, 0.0, rng);
  CHECK(std::count(none.begin(), none.end(), Behavior::Malicious) == 0);

  const auto half = assign_behaviors(100, 0.5, rng);
  CHECK(half.size() == 100);
  CHECK(std::count(half.begin(), half.end(), Behavior::Malicious) == 50);

  for (double rate : {0.1, 0.2, 0.3, 0.4, 0.5, 0.07, 1.0}) {
    const auto v = assign_behaviors(100, rate, rng);
    CHECK(static_cast<std::size_t>(std::count(v.begin(), v.end(), Behavior::Malicious)) ==
          static_cast<std::size_t>(std::ceil(rate * 100 - 1e-9)));
  }
  CHECK(count_for_rate(0.07, 30) == 3);  // 2.1 -> 3

  RandomSource a(9), b(9);
  CHECK(assign_behaviors(60, 0.3, a) == assign_behaviors(60, 0.3, b));
  CHECK_THROWS_AS(assign_behaviors(10, 1.5, a), std::invalid_argument);
  CHECK_THROWS_AS(assign_behaviors(10, -0.1, a), std::invalid_argument);
}

TEST_CASE("uniform selection covers every slot") {
  RandomSource rng(12);
  std::vector<int> hits(20, 0);
  for (int t = 0; t < 4000; ++t) {
    const auto pick = sample_without_replacement(20, 5, rng);
    CHECK(std::is_sorted(pick.begin(), pick.end()));
    CHECK(std::adjacent_find(pick.begin(), pick.end()) == pick.end());
    for (auto i : pick) ++hits[i];
  }
  // expected 1000 each; 6 sigma is about 165
  for (int h : hits) CHECK(std::abs(h - 1000) < 165);
}
