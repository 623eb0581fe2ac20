#include "bprp/track.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <spdlog/spdlog.h>

#include "bprp/errors.hpp"

namespace bprp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class TrackTarget final : public BlockedTarget {
 public:
  TrackTarget(const std::vector<LocalizationDensity>& densities, std::vector<bool> linked, const MobilityConfig& m)
      : densities_(densities), linked_(std::move(linked)), m_(m) {
    for (std::size_t t = 0; t < densities_.size(); ++t) {
      map_.push_back({t, false});
      if (!linked_[t]) map_.push_back({t, true});
    }
  }

  std::size_t dimension() const override { return 3 * densities_.size(); }

  std::vector<std::vector<std::size_t>> blocks() const override {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t t = 0; t < densities_.size(); ++t) {
      if (linked_[t]) {
        out.push_back({3 * t, 3 * t + 1, 3 * t + 2});
      } else {
        out.push_back({3 * t, 3 * t + 1});
        out.push_back({3 * t + 2});
      }
    }
    return out;
  }

  double log_density(std::span<const double> v) const override {
    double sum = 0.0;
    for (std::size_t t = 0; t < densities_.size(); ++t) {
      sum += site(t, v) + step(t, v);
      if (!std::isfinite(sum)) return kNegInf;
    }
    return sum;
  }

  double block_log_density(std::size_t block, std::span<const double> v) const override {
    const auto [t, speed_only] = map_.at(block);
    if (speed_only) return speed_prior(v[3 * t + 2]);
    double sum = site(t, v) + step(t, v);
    if (t + 1 < densities_.size()) sum += step(t + 1, v);
    return sum;
  }

 private:
  double speed_prior(double s) const { return (s >= 0 && s <= m_.s_max) ? 0.0 : kNegInf; }

  double site(std::size_t t, std::span<const double> v) const { return densities_[t](Point{v[3 * t], v[3 * t + 1]}); }

  // Step prior from window t-1 to t, including the speed prior of s_t.
  double step(std::size_t t, std::span<const double> v) const {
    const double s = v[3 * t + 2];
    const double sp = speed_prior(s);
    if (!linked_[t] || !std::isfinite(sp)) return sp;
    const double sd = s * m_.delta + m_.min_step_sd;
    const double dx = (v[3 * t] - v[3 * (t - 1)]) / sd;
    const double dy = (v[3 * t + 1] - v[3 * (t - 1) + 1]) / sd;
    return -0.5 * (dx * dx + dy * dy) - 2.0 * std::log(sd) - std::log(2.0 * std::numbers::pi);
  }

  const std::vector<LocalizationDensity>& densities_;
  std::vector<bool> linked_;
  MobilityConfig m_;
  // Block -> (window, whether it is the lone speed of an unlinked window).
  std::vector<std::pair<std::size_t, bool>> map_;
};

}  // namespace

void MobilityConfig::validate() const {
  if (!(s_max > 0) || !(delta > 0) || !(min_step_sd > 0)) {
    throw InvalidInput("mobility config: s_max, delta and min_step_sd must be > 0");
  }
}

TrackResult track(const std::vector<ObservationWindow>& windows, const PrpModel& model, const Layout& layout,
                  const MobilityConfig& mobility, const LocalizeOptions& options) {
  mobility.validate();
  if (windows.empty()) throw InvalidInput("track: no windows");
  TrackResult out;
  std::vector<LocalizationDensity> densities;
  densities.reserve(windows.size());
  std::vector<bool> linked(windows.size(), false);
  for (std::size_t t = 0; t < windows.size(); ++t) {
    if (t > 0) {
      const double gap = windows[t].window_start - windows[t - 1].window_start;
      if (!(gap > 0)) throw InvalidInput("track: windows are not strictly time-ordered");
      if (gap > 10.0 * mobility.delta) {
        out.warnings.push_back("gap of " + std::to_string(gap) + " s before window " + std::to_string(t) +
                               "; trajectory split");
        spdlog::warn("track: {}", out.warnings.back());
      } else {
        linked[t] = true;
      }
    }
    if (!linked[t]) out.segment_starts.push_back(t);
    densities.emplace_back(layout, model, windows[t], options.weights);
  }

  const TrackTarget target(densities, linked, mobility);
  std::vector<double> init(3 * windows.size());
  std::vector<double> steps(3 * windows.size());
  for (std::size_t t = 0; t < windows.size(); ++t) {
    const Point p = grid_argmax(densities[t], options.grid_step);
    init[3 * t] = p.x;
    init[3 * t + 1] = p.y;
    steps[3 * t] = steps[3 * t + 1] = 0.5;
    steps[3 * t + 2] = 0.1 * mobility.s_max;
  }
  // Start speeds where the first step is plausible under the prior.
  for (std::size_t t = 0; t < windows.size(); ++t) {
    double s = 0.5 * mobility.s_max;
    if (linked[t]) {
      const double len = std::hypot(init[3 * t] - init[3 * (t - 1)], init[3 * t + 1] - init[3 * (t - 1) + 1]);
      s = std::clamp(len / mobility.delta, 0.05 * mobility.s_max, 0.95 * mobility.s_max);
    }
    init[3 * t + 2] = s;
  }

  std::vector<std::string> names;
  for (std::size_t t = 0; t < windows.size(); ++t) {
    const std::string k = std::to_string(t);
    names.push_back("x" + k);
    names.push_back("y" + k);
    names.push_back("s" + k);
  }
  McmcConfig cfg = options.mcmc;
  cfg.initial_step = steps;
  out.samples = mcmc_sample_blocked(target, init, cfg, names);
  for (const auto& w : out.samples.warnings) out.warnings.push_back(w);

  const auto best = out.samples.row(out.samples.argmax_row());
  const auto mean = out.samples.column_mean();
  const auto sd = out.samples.column_sd();
  const double max_step = mobility.s_max * mobility.delta;
  for (std::size_t t = 0; t < windows.size(); ++t) {
    const double time = windows[t].window_start;
    Point p{best[3 * t], best[3 * t + 1]};
    if (linked[t]) {
      const Point prev = out.map.samples.back().position;
      const double len = std::hypot(p.x - prev.x, p.y - prev.y);
      if (len > max_step) {
        const double f = (max_step / len) * (1.0 - 1e-12);
        p = {prev.x + f * (p.x - prev.x), prev.y + f * (p.y - prev.y)};
      }
    }
    out.map.samples.push_back({time, p, best[3 * t + 2]});
    out.mean.samples.push_back({time, {mean[3 * t], mean[3 * t + 1]}, mean[3 * t + 2]});
    out.sd.push_back({sd[3 * t], sd[3 * t + 1]});
  }
  return out;
}

}  // namespace bprp
