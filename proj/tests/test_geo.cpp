#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "chainloc/geo.hpp"
#include "chainloc/random.hpp"
#include "oracles.hpp"

using namespace chainloc;
using namespace chainloc::geo;

TEST_CASE("euclidean distance") {
  CHECK(euclidean_distance({0, 0}, {0, 0}) == 0.0);
  CHECK(euclidean_distance({0, 0}, {3, 4}) == 5.0);
  // 40-digit evaluation of sqrt(68.8^2 + 37.2^2)
  CHECK(euclidean_distance({12.5, 7.0}, {81.3, 44.2}) == doctest::Approx(78.21304239063968).epsilon(1e-14));
  CHECK(euclidean_distance({81.3, 44.2}, {12.5, 7.0}) == euclidean_distance({12.5, 7.0}, {81.3, 44.2}));
}

TEST_CASE("path loss curve") {
  const PathLossParams p;
  CHECK(rss_at_distance(p.d0, p, 0.0) == doctest::Approx(p.p_tr - p.p_loss_d0));

  PathLossParams two = p;
  two.tau = 2.0;
  CHECK(rss_at_distance(10.0 * two.d0, two, 0.0) == doctest::Approx(two.p_tr - two.p_loss_d0 - 20.0));

  CHECK(rss_at_distance(17.3, p, 0.0) == doctest::Approx(-77.14138309386386).epsilon(1e-14));
  CHECK(rss_at_distance(17.3, p, 1.25) == doctest::Approx(-77.14138309386386 + 1.25).epsilon(1e-14));

  CHECK_THROWS_AS(rss_at_distance(0.0, p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rss_at_distance(-3.0, p, 0.0), std::invalid_argument);

  for (double d = 0.5; d < 500.0; d *= 1.3) CHECK(rss_at_distance(d, p, 0.0) > rss_at_distance(d * 1.01, p, 0.0));
}

TEST_CASE("inverse path loss") {
  const PathLossParams p;
  CHECK(distance_from_rss(p.p_tr - p.p_loss_d0, p) == doctest::Approx(p.d0));

  PathLossParams two = p;
  two.tau = 2.0;
  CHECK(distance_from_rss(two.p_tr - two.p_loss_d0 - 6.0, two) == doctest::Approx(1.9952623149688796).epsilon(1e-14));

  CHECK(distance_from_rss(1e6, p) > 0.0);
  CHECK(distance_from_rss(-1e3, p) > 0.0);

  RandomSource rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double d = 1000.0 * (1.0 - rng.uniform01());
    CHECK(std::abs(distance_from_rss(rss_at_distance(d, p, 0.0), p) - d) <= 1e-9 * d);
  }
}

TEST_CASE("rssi ranging") {
  PathLossParams quiet;
  quiet.sigma = 0.0;
  RandomSource rng(3);
  const auto exact = measure_distance_rssi(23.7, quiet, rng);
  CHECK(exact.meters == doctest::Approx(23.7).epsilon(1e-12));
  CHECK(exact.method == RangingMethod::Rssi);
  CHECK(exact.hops == 1);

  const PathLossParams p;
  RandomSource a(99), b(99);
  CHECK(measure_distance_rssi(10.0, p, a).meters == measure_distance_rssi(10.0, p, b).meters);

  CHECK_THROWS_AS(measure_distance_rssi(0.0, p, a), std::invalid_argument);
}

TEST_CASE("rssi ranging median is unbiased") {
  const PathLossParams p;  // sigma 2 dB
  RandomSource rng(2024);
  std::vector<double> v(10000);
  for (auto& x : v) x = measure_distance_rssi(10.0, p, rng).meters;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  CHECK(std::abs(v[v.size() / 2] - 10.0) <= 0.2);
}

TEST_CASE("dv-hop calibration") {
  {
    const std::vector<Position> a{{0, 0}, {30, 0}};
    CHECK(dvhop_avg_hop_distance(a, {{{0, 1}, 1}}) == doctest::Approx(30.0));
  }
  {
    const std::vector<Position> a{{0, 0}, {30, 0}, {60, 0}};
    CHECK(dvhop_avg_hop_distance(a, {{{0, 1}, 1}, {{1, 2}, 1}, {{0, 2}, 2}}) == doctest::Approx(30.0));
  }
  CHECK_THROWS_AS(dvhop_avg_hop_distance(std::vector<Position>{{0, 0}, {1, 1}}, {}), std::invalid_argument);

  // Random 20-node deployment: hops from Floyd-Warshall, sum over reachable anchor pairs.
  RandomSource rng(5);
  std::vector<Position> pts(20);
  for (auto& q : pts) q = {rng.uniform(0, 100), rng.uniform(0, 100)};
  const auto hops = oracle::hop_matrix(pts, 30.0);
  const std::vector<std::size_t> anchors{0, 3, 7, 11, 15, 19};
  std::vector<Position> apos;
  for (auto i : anchors) apos.push_back(pts[i]);
  AnchorHopTable table;
  long double dist = 0, hop = 0;
  for (std::size_t i = 0; i < anchors.size(); ++i)
    for (std::size_t j = i + 1; j < anchors.size(); ++j) {
      const int h = hops[anchors[i]][anchors[j]];
      if (h <= 0) continue;
      table[{i, j}] = h;
      dist += std::hypot((long double)(apos[i].x - apos[j].x), (long double)(apos[i].y - apos[j].y));
      hop += h;
    }
  REQUIRE(!table.empty());
  CHECK(dvhop_avg_hop_distance(apos, table) == doctest::Approx(static_cast<double>(dist / hop)).epsilon(1e-12));
}

TEST_CASE("dv-hop distance") {
  CHECK(dvhop_distance(25.0, 1).meters == 25.0);
  const auto e = dvhop_distance(25.0, 3);
  CHECK(e.meters == 75.0);
  CHECK(e.method == RangingMethod::DvHop);
  CHECK(e.hops == 3);
  CHECK_THROWS_AS(dvhop_distance(0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(dvhop_distance(25.0, 0), std::invalid_argument);
}

TEST_CASE("trilateration") {
  const double r = std::sqrt(50.0);
  const std::vector<RangeReference> sym{{{0, 0}, r}, {{10, 0}, r}, {{0, 10}, r}};
  const auto p = trilaterate(sym);
  CHECK(std::abs(p.x - 5.0) < 1e-6);
  CHECK(std::abs(p.y - 5.0) < 1e-6);

  const std::vector<RangeReference> line{{{0, 0}, 5}, {{10, 0}, 5}, {{20, 0}, 5}};
  CHECK_THROWS_AS(trilaterate(line), SingularGeometryError);
  CHECK_THROWS_AS(trilaterate(std::vector<RangeReference>{{{0, 0}, 1}, {{1, 0}, 1}}), std::invalid_argument);
}

TEST_CASE("trilateration recovers exact targets") {
  RandomSource rng(77);
  int tried = 0;
  while (tried < 300) {
    std::vector<RangeReference> refs(3);
    for (auto& ref : refs) ref.position = {rng.uniform(0, 100), rng.uniform(0, 100)};
    const Position a = refs[0].position, b = refs[1].position, c = refs[2].position;
    const double area2 = std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
    if (area2 < 50.0) continue;  // skip near-collinear triples
    const Position t{rng.uniform(0, 100), rng.uniform(0, 100)};
    for (auto& ref : refs) ref.distance = euclidean_distance(ref.position, t);
    const auto p = trilaterate(refs);
    CHECK(euclidean_distance(p, t) < 1e-6);
    ++tried;
  }
}

TEST_CASE("trilateration matches grid minimizer on noisy references") {
  RandomSource rng(8);
  const PathLossParams p;
  for (int k = 0; k < 25; ++k) {
    const Position t{rng.uniform(20, 80), rng.uniform(20, 80)};
    std::vector<RangeReference> refs(5);
    for (auto& ref : refs) {
      const double ang = rng.uniform(0, 2 * M_PI), rad = rng.uniform(5, 30);
      ref.position = {t.x + rad * std::cos(ang), t.y + rad * std::sin(ang)};
      ref.distance = measure_distance_rssi(euclidean_distance(ref.position, t), p, rng).meters;
    }
    const auto got = trilaterate(refs);
    const auto want = oracle::grid_minimizer(refs, -20.0, 120.0);
    CHECK(euclidean_distance(got, want) <= 0.05);
  }
}
