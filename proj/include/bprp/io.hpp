#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bprp/contact_tracing.hpp"
#include "bprp/geometry.hpp"
#include "bprp/mcmc.hpp"
#include "bprp/prp_model.hpp"
#include "bprp/simulator.hpp"

namespace bprp::io {

namespace fs = std::filesystem;

/// Fixed-point formatting used by every writer, so outputs are byte-stable.
std::string format_number(double v, int decimals = 6);

std::string read_text(const fs::path& path);
// Writes through a temporary file in the same directory, then renames.
void write_text(const fs::path& path, const std::string& text);

std::string layout_to_json(const Layout& layout);
Layout layout_from_json(const std::string& text);
Layout read_layout(const fs::path& path);

std::string model_to_json(const PrpModel& model);
PrpModel model_from_json(const std::string& text);
PrpModel read_model(const fs::path& path);

inline constexpr const char* kPacketHeader = "receiver_id,window_start,beacon_id,packets_received,t_first,t_last,mean_rssi";
std::string packets_to_csv(const std::vector<ObservationWindow>& windows);
/// Groups rows by (receiver_id, window_start) in first-appearance order; window_end = start + delta.
std::vector<ObservationWindow> packets_from_csv(const std::string& text, double delta);

inline constexpr const char* kTrajectoryHeader = "t,x,y,speed";
std::string trajectory_to_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& text);

std::string posterior_to_csv(const PosteriorSamples& samples);
std::string posterior_sidecar_json(const PosteriorSamples& samples);

std::string pair_report_json(const std::string& a, const std::string& b, const DistancePosterior& posterior);

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);
double parse_double(const std::string& s, const std::string& what);

}  // namespace bprp::io
