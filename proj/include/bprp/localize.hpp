#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bprp/geometry.hpp"
#include "bprp/mcmc.hpp"
#include "bprp/prp_model.hpp"

namespace bprp {

/// Which evidence enters the position log-density and with what weight.
struct EvidenceWeights {
  double prp = 1.0;
  double rssi = 0.0;
};

/// Unnormalized log posterior over one receiver position for one window,
/// under a uniform prior on the floorplan. Beacons are visited in layout order,
/// so the value does not depend on the order of the window's records.
class LocalizationDensity {
 public:
  LocalizationDensity(const Layout& layout, const PrpModel& model, const ObservationWindow& window,
                      EvidenceWeights weights = {});

  double operator()(Point p) const;
  double prp_term(Point p) const;
  double rssi_term(Point p) const;

  const Layout& layout() const { return *layout_; }
  bool has_prp_information() const { return any_packets_; }
  bool has_rssi_information() const { return any_rssi_; }
  EvidenceWeights weights() const { return weights_; }

 private:
  struct Term {
    Point position;
    std::int64_t c = 0;
    std::int64_t n = 1;
    double log_choose = 0.0;
    // eta = a + b z1 + q z1^2 for each element, z1 the standardized distance.
    std::array<double, kElementCount> a{}, b{}, q{};
    std::optional<double> mean_rssi;
  };
  const Layout* layout_;
  double d_mean_;
  double d_sd_;
  std::optional<RssiPathModel> rssi_;
  EvidenceWeights weights_;
  std::vector<Term> terms_;
  bool any_packets_ = false;
  bool any_rssi_ = false;
};

struct LocalizeOptions {
  McmcConfig mcmc;
  double grid_step = 0.5;  // coarse grid used to start the chains
  EvidenceWeights weights;
};

struct LocationPosterior {
  PosteriorSamples samples;  // columns x, y
  Point map;
  Point mean;
  Point sd;
  std::map<std::string, GeometricElement> elements_at_map;
  bool low_information = false;
};

/// Best point of a regular grid with the given spacing (cell centres).
Point grid_argmax(const LocalizationDensity& density, double step);

LocationPosterior localize(const ObservationWindow& window, const PrpModel& model, const Layout& layout,
                           const LocalizeOptions& options = {});

/// Smaller chains for batch experiments.
McmcConfig fast_mcmc_config(std::uint64_t seed);

}  // namespace bprp
