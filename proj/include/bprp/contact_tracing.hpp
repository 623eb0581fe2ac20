#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bprp/localize.hpp"

namespace bprp {

enum class Signal { Prp, Rssi, Fused };
std::string_view signal_name(Signal s);
Signal signal_from_name(std::string_view name);

struct BeaconPairDistance {
  std::string beacon_i;
  std::string beacon_j;
  double distance = 0.0;
};

struct PairQuery {
  std::string receiver_a;
  std::string receiver_b;
  ObservationWindow window_a;
  ObservationWindow window_b;
  std::vector<std::string> beacons;  // common beacons used by the triangle method
  std::vector<BeaconPairDistance> beacon_pairs;

  void validate(const Layout& layout) const;
};

/// Builds a query from co-temporal windows, keeping the top_k beacons heard by both
/// receivers (ranked by combined count).
PairQuery make_pair_query(const Layout& layout, const ObservationWindow& a, const ObservationWindow& b,
                          std::size_t top_k = 6);

struct DistancePosterior {
  std::string target;
  std::vector<double> draws;
  double map_estimate = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  std::string method;
  Signal signal = Signal::Prp;
};

struct ContactOptions {
  McmcConfig mcmc;
  double sharpness = 10.0;       // 1/m
  bool use_triangles = true;     // stage-1 triangle potentials among beacons
  std::size_t stage2_draws = 200;  // stage-1 draws carried into stage 2
  Signal signal = Signal::Prp;
  LocalizeOptions localize;
};

/// Sum over the three cyclic inequalities of log sigmoid(sharpness * slack).
double triangle_log_potential(double a, double b, double c, double sharpness);

struct BeaconDistancePosteriors {
  PosteriorSamples a;  // one column per query beacon, in query order
  PosteriorSamples b;
  std::vector<std::string> warnings;
};

/// Per-element assignment for each query beacon; missing entries fall back to FreeSpace.
using ElementAssignment = std::map<std::string, GeometricElement>;

BeaconDistancePosteriors infer_beacon_distances(const PairQuery& query, const PrpModel& model, const Layout& layout,
                                                const std::optional<ElementAssignment>& elements_a,
                                                const std::optional<ElementAssignment>& elements_b,
                                                const ContactOptions& options = {});

/// Log-density of the stage-2 target at d12, averaging the triangle potentials over the given draws.
double pair_distance_log_density(const PairQuery& query, const BeaconDistancePosteriors& stage1,
                                 const std::vector<std::size_t>& rows, double d12, double sharpness);

/// Rows of the stage-1 posteriors used in stage 2 (evenly thinned).
std::vector<std::size_t> stage2_rows(const BeaconDistancePosteriors& stage1, std::size_t count);

DistancePosterior infer_pair_distance(const PairQuery& query, const BeaconDistancePosteriors& stage1,
                                      const Layout& layout, const ContactOptions& options = {});

/// Both stages, with elements taken from each receiver's MAP localization.
DistancePosterior triangle_pair_distance(const PairQuery& query, const PrpModel& model, const Layout& layout,
                                         const ContactOptions& options = {});

DistancePosterior two_step_pair_distance(const PairQuery& query, const PrpModel& model, const Layout& layout,
                                         const ContactOptions& options = {});

}  // namespace bprp
