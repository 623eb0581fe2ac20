#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bprp/contact_tracing.hpp"
#include "bprp/geometry.hpp"
#include "bprp/mcmc.hpp"
#include "bprp/prp_model.hpp"
#include "bprp/simulator.hpp"
#include "bprp/train.hpp"

namespace bprp {

namespace fs = std::filesystem;

inline const std::vector<std::string> kAllMethods = {"bprp", "rssi", "fused", "two_step", "triangle", "track"};

struct ExperimentConfig {
  std::string preset = "library";
  std::string layout_path;  // overrides the preset geometry when set
  std::uint64_t seed = 1;
  std::vector<std::string> methods = kAllMethods;
  fs::path output_dir = "bprp_out";
  double delta = 10.0;
  double smax = 1.0;
  double sharpness = 10.0;
  std::optional<std::vector<Point>> train_locations;  // default: preset spots
  std::optional<std::size_t> labeled_count;           // default: all spots labeled
  std::optional<std::size_t> known_beacon_count;      // default: all beacons known
  std::optional<std::vector<std::vector<Point>>> traces;
  double train_seconds = 60.0;
  std::size_t contact_pairs = 10;
  std::size_t contact_beacons = 6;
  std::vector<std::size_t> beacon_sweep = {60, 30, 10, 5};
  double rssi_sigma = 5.0;
  double decode_threshold = -95.0;
  McmcConfig mcmc;

  void validate() const;
  bool has_method(std::string_view m) const;
};

/// Reads a JSON config file into `config`; keys absent from the file are left untouched.
void apply_config_file(ExperimentConfig& config, const fs::path& path);

std::vector<std::string> parse_method_list(const std::string& text);

// ---- Scenario helpers shared by the pipeline and the test harnesses ----

/// Stationary receiver for `seconds`, one window per delta.
std::vector<ObservationWindow> simulate_stationary(const Layout& layout, const PrpModel& truth,
                                                   const std::string& receiver_id, Point where, double seconds,
                                                   const SimConfig& sim);

/// Evenly spaced subset (in layout order) of `count` beacons.
Layout beacon_subset(const Layout& layout, std::size_t count);

/// Drops records of beacons absent from the layout.
ObservationWindow restrict_to_layout(const ObservationWindow& window, const Layout& layout);

/// Inside the floorplan and not strictly inside a stack.
bool walkable(const Layout& layout, Point p);

std::string window_id(const ObservationWindow& w);

struct ContactPairTruth {
  std::string receiver_a;
  std::string receiver_b;
  Point a;
  Point b;
};

/// Receiver pairs at walkable points, separated by U(min_sep, max_sep) meters.
std::vector<ContactPairTruth> sample_contact_pairs(const Layout& layout, std::size_t count, std::uint64_t seed,
                                                   double min_sep = 0.5, double max_sep = 3.0);

// ---- Commands ----

struct SimulationArtifacts {
  Layout layout;
  std::vector<ObservationWindow> train_windows;
  std::vector<ObservationWindow> test_windows;  // traces then contact receivers
  std::map<std::string, Trajectory> trajectories;
  std::string truth_json;
  std::map<std::string, Point> window_truth;  // by window id
  std::map<std::string, std::optional<Point>> train_labels;
  std::vector<std::string> trace_receivers;
  std::vector<ContactPairTruth> contacts;
};

SimulationArtifacts run_simulation(const ExperimentConfig& config);

/// file name -> contents; written together once everything succeeded.
using OutputFiles = std::map<std::string, std::string>;

void write_outputs(const fs::path& dir, const OutputFiles& files);

OutputFiles simulation_files(const SimulationArtifacts& sim);

struct EvalReport {
  std::map<std::string, double> median_error;  // by method
  std::map<std::string, double> contact_median_abs_error;
  OutputFiles files;
};

/// Scores predictions.csv (and optionally contacts.csv) against truth.json contents.
/// Unknown or missing window ids raise DataConsistency.
EvalReport evaluate(const std::string& truth_json, const std::string& predictions_csv,
                    const std::optional<std::string>& contacts_csv);

OutputFiles run_pipeline(const ExperimentConfig& config);

int cmd_simulate(const ExperimentConfig& config);
int cmd_train(const ExperimentConfig& config, const fs::path& layout, const fs::path& packets, const fs::path& truth);
int cmd_localize(const ExperimentConfig& config, const fs::path& layout, const fs::path& model, const fs::path& packets);
int cmd_eval(const fs::path& truth, const fs::path& predictions, const std::optional<fs::path>& contacts,
             const fs::path& out);
int cmd_pipeline(const ExperimentConfig& config);

}  // namespace bprp
