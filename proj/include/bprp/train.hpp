#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bprp/geometry.hpp"
#include "bprp/mcmc.hpp"
#include "bprp/prp_model.hpp"

namespace bprp {

/// Training windows plus whatever positions are known. Beacons with
/// position_known == false have their layout position ignored.
struct TrainingDataset {
  Layout layout;
  std::vector<ObservationWindow> windows;
  // Keyed by receiver id; nullopt marks an unlabeled location. A receiver is
  // assumed stationary across all of its windows.
  std::map<std::string, std::optional<Point>> receiver_locations;
};

struct TrainOptions {
  McmcConfig mcmc;
  double prior_sigma = 10.0;
  // Fixed z-scoring; when absent it is fitted on the known-position pairs.
  std::optional<Standardization> standardization;
  double init_grid_step = 0.25;
};

struct PositionEstimate {
  Point mean;
  Point sd;
};

struct TrainResult {
  PrpModel model;  // posterior means
  std::array<std::array<double, 10>, kElementCount> coefficient_sd{};
  PosteriorSamples samples;
  std::map<std::string, PositionEstimate> recovered_beacons;
  std::map<std::string, PositionEstimate> recovered_locations;
  std::vector<GeometricElement> untrained;
  std::vector<std::string> warnings;
};

/// Coefficient vector layout used in posterior draws: w0, w1..w3, then w_pair.
std::array<double, 10> to_vector(const LinkParams& p);
LinkParams from_vector(GeometricElement e, std::span<const double> v);
std::string coefficient_name(GeometricElement e, std::size_t k);

TrainResult train(const TrainingDataset& data, const TrainOptions& options = {});

/// The dataset layout with unknown beacons moved to their posterior means and marked known.
Layout recovered_layout(const Layout& layout, const TrainResult& result);

}  // namespace bprp
