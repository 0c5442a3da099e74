#include "chainloc/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chainloc::geo {

bool is_finite(const Position& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

void PathLossParams::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("path loss: tau must be positive");
  if (!(d0 > 0.0)) throw std::invalid_argument("path loss: d0 must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("path loss: sigma must be non-negative");
}

double euclidean_distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double rss_at_distance(double d, const PathLossParams& params, double noise_db) {
  if (!(d > 0.0)) throw std::invalid_argument("rss_at_distance: distance must be positive");
  return params.p_tr - params.p_loss_d0 - 10.0 * params.tau * std::log10(d / params.d0) +
         noise_db;
}

double distance_from_rss(double rss_dbm, const PathLossParams& params) {
  const double d = params.d0 * std::pow(10.0, (params.p_tr - params.p_loss_d0 - rss_dbm) / (10.0 * params.tau));
  // absurdly strong signals underflow; keep the result a valid distance
  return std::max(d, std::numeric_limits<double>::min());
}

DistanceEstimate measure_distance_rssi_with_noise(double true_d, const PathLossParams& params,
                                                  double noise_db) {
  const double rss = rss_at_distance(true_d, params, noise_db);
  return {distance_from_rss(rss, params), RangingMethod::Rssi, 1};
}

DistanceEstimate measure_distance_rssi(double true_d, const PathLossParams& params,
                                       RandomSource& rng) {
  if (!(true_d > 0.0)) throw std::invalid_argument("measure_distance_rssi: distance must be positive");
  const double noise = params.sigma > 0.0 ? rng.normal(0.0, params.sigma) : 0.0;
  return measure_distance_rssi_with_noise(true_d, params, noise);
}

double dvhop_avg_hop_distance(std::span<const Position> anchors, const AnchorHopTable& hops) {
  double total_distance = 0.0;
  long long total_hops = 0;
  for (const auto& [pair, count] : hops) {
    const auto [i, j] = pair;
    if (i >= j || j >= anchors.size() || count <= 0) continue;
    total_distance += euclidean_distance(anchors[i], anchors[j]);
    total_hops += count;
  }
  if (total_hops == 0) throw std::invalid_argument("dvhop_avg_hop_distance: no reachable anchor pair");
  return total_distance / static_cast<double>(total_hops);
}

DistanceEstimate dvhop_distance(double avg_hop_distance, int hops) {
  if (!(avg_hop_distance > 0.0)) throw std::invalid_argument("dvhop_distance: average hop distance must be positive");
  if (hops < 1) throw std::invalid_argument("dvhop_distance: hop count must be at least 1");
  return {avg_hop_distance * hops, RangingMethod::DvHop, hops};
}

namespace {

double range_residual_sq(std::span<const RangeReference> refs, const Position& p) {
  double sum = 0.0;
  for (const auto& r : refs) {
    const double e = euclidean_distance(p, r.position) - r.distance;
    sum += e * e;
  }
  return sum;
}

}  // namespace

Position refine_range_fit(std::span<const RangeReference> references, const Position& start) {
  Position p = start;
  double cost = range_residual_sq(references, p);
  double damping = -1.0;
  for (int iter = 0; iter < 500; ++iter) {
    // Gauss-Newton normal equations of the range residuals.
    double j00 = 0.0, j01 = 0.0, j11 = 0.0, g0 = 0.0, g1 = 0.0;
    for (const auto& r : references) {
      const double dx = p.x - r.position.x;
      const double dy = p.y - r.position.y;
      const double dist = std::hypot(dx, dy);
      if (dist < 1e-12) continue;
      const double ux = dx / dist;
      const double uy = dy / dist;
      const double res = dist - r.distance;
      j00 += ux * ux;
      j01 += ux * uy;
      j11 += uy * uy;
      g0 += ux * res;
      g1 += uy * res;
    }
    if (damping < 0.0) damping = 1e-3 * std::max(j00, j11);

    bool improved = false;
    while (damping < 1e12) {
      const double a00 = j00 + damping;
      const double a11 = j11 + damping;
      const double det = a00 * a11 - j01 * j01;
      if (det > 0.0) {
        const Position next{p.x - (a11 * g0 - j01 * g1) / det, p.y - (a00 * g1 - j01 * g0) / det};
        const double next_cost = range_residual_sq(references, next);
        if (next_cost < cost) {
          const double step = std::hypot(next.x - p.x, next.y - p.y);
          p = next;
          cost = next_cost;
          damping = std::max(damping * 0.1, 1e-15);
          improved = true;
          if (step < 1e-12 * (1.0 + std::hypot(p.x, p.y))) return p;
          break;
        }
      }
      damping = std::max(damping * 10.0, 1e-9);
    }
    if (!improved) break;
  }
  return p;
}

Position trilaterate(std::span<const RangeReference> references) {
  if (references.size() < 3) throw std::invalid_argument("trilaterate: need at least three references");

  const auto pivot_it = std::min_element(
      references.begin(), references.end(),
      [](const RangeReference& a, const RangeReference& b) { return a.distance < b.distance; });
  const RangeReference& pivot = *pivot_it;
  const double pivot_sq = pivot.position.x * pivot.position.x + pivot.position.y * pivot.position.y;

  // Accumulate A^T A and A^T b directly; each row is one differenced circle equation.
  double n00 = 0.0, n01 = 0.0, n11 = 0.0, c0 = 0.0, c1 = 0.0;
  for (auto it = references.begin(); it != references.end(); ++it) {
    if (it == pivot_it) continue;
    const Position& p = it->position;
    const double a0 = 2.0 * (p.x - pivot.position.x);
    const double a1 = 2.0 * (p.y - pivot.position.y);
    const double b = (p.x * p.x + p.y * p.y) - pivot_sq - it->distance * it->distance +
                     pivot.distance * pivot.distance;
    n00 += a0 * a0;
    n01 += a0 * a1;
    n11 += a1 * a1;
    c0 += a0 * b;
    c1 += a1 * b;
  }

  const double det = n00 * n11 - n01 * n01;
  const double scale = std::hypot(n00, n01) * std::hypot(n01, n11);
  if (!(scale > 0.0) || std::abs(det) < 1e-9 * scale) {
    throw SingularGeometryError("trilaterate: references are collinear");
  }
  const Position linear{(n11 * c0 - n01 * c1) / det, (n00 * c1 - n01 * c0) / det};

  // The range objective can have a second basin mirrored across the
  // references; descend from the reference centroid as well and keep the better fit.
  Position centroid;
  for (const auto& r : references) {
    centroid.x += r.position.x / static_cast<double>(references.size());
    centroid.y += r.position.y / static_cast<double>(references.size());
  }
  const Position from_linear = refine_range_fit(references, linear);
  const Position from_centroid = refine_range_fit(references, centroid);
  return range_residual_sq(references, from_centroid) < range_residual_sq(references, from_linear) ? from_centroid
                                                                                                  : from_linear;
}

}  // namespace chainloc::geo
