#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chainloc/random.hpp"

namespace chainloc::geo {

// A point in the plane, in meters.
struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

bool is_finite(const Position& p);

// Log-distance path-loss model with log-normal shadowing.
struct PathLossParams {
  double p_tr = 0.0;        // transmit power, dBm
  double p_loss_d0 = 40.0;  // loss at the reference distance, dB
  double tau = 3.0;         // path-loss exponent
  double d0 = 1.0;          // reference distance, m
  double sigma = 2.0;       // shadowing standard deviation, dB

  // Throws std::invalid_argument unless tau > 0, d0 > 0 and sigma >= 0.
  void validate() const;
};

enum class RangingMethod { Rssi, DvHop };

struct DistanceEstimate {
  double meters = 0.0;
  RangingMethod method = RangingMethod::Rssi;
  int hops = 1;
};

// Raised when a trilateration system has no unique solution.
class SingularGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double euclidean_distance(const Position& a, const Position& b);

// Received power at distance `d` (> 0) plus an additive shadowing term, in dBm.
double rss_at_distance(double d, const PathLossParams& params, double noise_db);

// Inverse of the noise-free path-loss curve; always strictly positive.
double distance_from_rss(double rss_dbm, const PathLossParams& params);

// Ranging from a single received-strength sample: draws the shadowing term
// from Normal(0, sigma) and inverts the noise-free curve.
DistanceEstimate measure_distance_rssi(double true_d, const PathLossParams& params,
                                       RandomSource& rng);

// Same as measure_distance_rssi with an already drawn shadowing term.
DistanceEstimate measure_distance_rssi_with_noise(double true_d, const PathLossParams& params,
                                                  double noise_db);

// Hop counts between anchors, keyed by (i, j) indices into the anchor list with i < j.
// Pairs absent from the map are treated as unreachable.
using AnchorHopTable = std::map<std::pair<std::size_t, std::size_t>, int>;

// DV-Hop mean hop length: total anchor-to-anchor distance over total hops.
// Throws std::invalid_argument when no reachable pair exists.
double dvhop_avg_hop_distance(std::span<const Position> anchors, const AnchorHopTable& hops);

DistanceEstimate dvhop_distance(double avg_hop_distance, int hops);

struct RangeReference {
  Position position;
  double distance = 0.0;
};

// Damped Gauss-Newton descent of sum((|p - a_i| - d_i)^2) from `start`.
Position refine_range_fit(std::span<const RangeReference> references, const Position& start);

// Least-squares position from three or more ranged references.
//
// The circle equations are linearized against the reference with the
// smallest range and the resulting overdetermined system is solved through
// its 2x2 normal equations; that closed-form point then seeds
// refine_range_fit, which settles on the range-residual minimizer. With
// exact ranges both stages agree on the true point. Throws std::invalid_argument with fewer than
// three references and SingularGeometryError for (near-)collinear anchors.
Position trilaterate(std::span<const RangeReference> references);

}  // namespace chainloc::geo
