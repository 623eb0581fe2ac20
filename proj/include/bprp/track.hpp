#pragma once

#include <vector>

#include "bprp/localize.hpp"
#include "bprp/simulator.hpp"

namespace bprp {

struct MobilityConfig {
  double s_max = 1.0;  // m/s
  double delta = 10.0;  // seconds between windows
  // Floor on the per-axis step sd; keeps the step prior proper as s_t -> 0.
  double min_step_sd = 0.05;

  void validate() const;
};

struct TrackResult {
  Trajectory map;   // per-window MAP, steps clipped to s_max * delta
  Trajectory mean;  // per-window posterior mean
  std::vector<Point> sd;
  PosteriorSamples samples;  // columns x_t, y_t, s_t per window
  std::vector<std::size_t> segment_starts;
  std::vector<std::string> warnings;
};

/// Joint posterior over positions and speeds for time-ordered windows of one receiver.
TrackResult track(const std::vector<ObservationWindow>& windows, const PrpModel& model, const Layout& layout,
                  const MobilityConfig& mobility, const LocalizeOptions& options = {});

}  // namespace bprp
