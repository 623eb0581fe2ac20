#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "bprp/geometry.hpp"
#include "bprp/prp_model.hpp"
#include "bprp/rng.hpp"

namespace bprp {

struct TrajectorySample {
  double t = 0.0;
  Point position;
  double speed = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;

  bool empty() const { return samples.empty(); }
  double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }
};

/// Ground-truth RSSI generator: log-distance path loss plus a fixed extra loss per element.
struct RssiTruth {
  double p_ref = -75.0;       // dBm at 1 m for a beacon at reference_power
  double reference_power = -15.0;
  double path_exponent = 2.5;
  double one_stack_loss = 2.5;
  double two_stack_loss = 5.0;
  double corridor_loss = 0.0;

  double mean(GeometricElement e, double d, double power) const;
};

struct SimConfig {
  std::uint64_t seed = 0;
  double window = 10.0;  // delta, seconds
  double dwell = 10.0;
  double walk_speed = 0.5;
  double rssi_sigma = 5.0;
  double decode_threshold = -95.0;
  double tick = 0.1;
  double start_time = 0.0;
  RssiTruth rssi;

  void validate() const;
};

Trajectory generate_trajectory(const Layout& layout, const std::vector<Point>& waypoints, const SimConfig& config);

/// One window per complete delta-slice of the trajectory; every beacon gets a record (c may be 0).
std::vector<ObservationWindow> simulate_packets(const Layout& layout, const PrpModel& truth, const Trajectory& traj,
                                                const SimConfig& config, std::string_view receiver_id);

/// Mean receiver position over the ticks of each complete window, aligned with simulate_packets output.
std::vector<Point> window_mean_positions(const Trajectory& traj, const SimConfig& config);

struct TruncatedDraws {
  std::vector<double> kept;
  std::int64_t drop_count = 0;
};

TruncatedDraws simulate_truncated_rssi(const TruncatedRssiModel& model, std::int64_t n, std::uint64_t seed);

/// One draw from N(mu, sigma^2) conditioned on x >= lower.
double sample_truncated_normal(SplitMix64& rng, double mu, double sigma, double lower);

}  // namespace bprp
