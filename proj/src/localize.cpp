#include "bprp/localize.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <spdlog/spdlog.h>

#include "bprp/errors.hpp"

namespace bprp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// RSSI path loss is singular at d = 0; positions closer than this are evaluated at this range.
constexpr double kMinRssiRange = 0.05;

}  // namespace

LocalizationDensity::LocalizationDensity(const Layout& layout, const PrpModel& model, const ObservationWindow& window,
                                         EvidenceWeights weights)
    : layout_(&layout),
      d_mean_(model.standardization.mean[0]),
      d_sd_(model.standardization.sd[0]),
      rssi_(model.rssi),
      weights_(weights) {
  window.validate();
  if (weights_.rssi != 0.0 && !rssi_) throw InvalidInput("localize: RSSI evidence requested without an RSSI model");
  for (const auto& r : window.records) {
    if (!layout.beacon_index(r.beacon_id)) {
      throw DataConsistency("window " + window.receiver_id + " references unknown beacon " + r.beacon_id);
    }
  }
  const double dwell = window.duration();
  terms_.reserve(layout.beacons().size());
  for (const auto& beacon : layout.beacons()) {
    Term t;
    t.position = beacon.position;
    t.n = packets_sent(beacon.rate_hz, dwell);
    if (const BeaconRecord* r = window.find(beacon.id)) {
      t.c = std::min(r->packets_received, t.n);
      if (r->packets_received > t.n) {
        spdlog::warn("window {} beacon {}: {} packets exceed the {} sent; clamped", window.receiver_id, beacon.id,
                     r->packets_received, t.n);
      }
      if (r->packets_received > 0 && r->mean_rssi) t.mean_rssi = r->mean_rssi;
    }
    t.log_choose = log_choose(t.n, t.c);
    const auto z = model.standardization.apply(0.0, beacon.rate_hz, beacon.power_dbm);
    for (const auto e : kAllElements) {
      const LinkParams& p = model.link(e);
      const std::size_t k = index_of(e);
      // w_pair order: (1,1),(1,2),(1,3),(2,2),(2,3),(3,3)
      t.a[k] = p.w0 + p.w[1] * z[1] + p.w[2] * z[2] + p.w_pair[3] * z[1] * z[1] + p.w_pair[4] * z[1] * z[2] +
               p.w_pair[5] * z[2] * z[2];
      t.b[k] = p.w[0] + p.w_pair[1] * z[1] + p.w_pair[2] * z[2];
      t.q[k] = p.w_pair[0];
    }
    any_packets_ = any_packets_ || t.c > 0;
    any_rssi_ = any_rssi_ || t.mean_rssi.has_value();
    terms_.push_back(t);
  }
}

double LocalizationDensity::prp_term(Point p) const {
  const bool corridor = layout_->in_corridor(p);
  double sum = 0.0;
  for (const auto& t : terms_) {
    GeometricElement e = GeometricElement::Corridor;
    if (!corridor) {
      const int n = layout_->stacks_crossed(t.position, p);
      e = n == 0 ? GeometricElement::FreeSpace : (n == 1 ? GeometricElement::OneStack : GeometricElement::TwoStack);
    }
    const std::size_t k = index_of(e);
    const double z1 = (std::hypot(t.position.x - p.x, t.position.y - p.y) - d_mean_) / d_sd_;
    const double eta = t.a[k] + t.b[k] * z1 + t.q[k] * z1 * z1;
    sum += t.log_choose + static_cast<double>(t.c) * eta - static_cast<double>(t.n) * softplus(eta);
  }
  return sum;
}

double LocalizationDensity::rssi_term(Point p) const {
  if (!rssi_) return 0.0;
  double sum = 0.0;
  for (const auto& t : terms_) {
    if (!t.mean_rssi) continue;
    const double d = std::max(kMinRssiRange, std::hypot(t.position.x - p.x, t.position.y - p.y));
    const double sd = rssi_->noise_sigma / std::sqrt(static_cast<double>(t.c));
    const double r = (*t.mean_rssi - rssi_->predicted_mean(d)) / sd;
    sum += -0.5 * r * r - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return sum;
}

double LocalizationDensity::operator()(Point p) const {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !layout_->contains(p)) return kNegInf;
  double v = 0.0;
  if (weights_.prp != 0.0) v += weights_.prp * prp_term(p);
  if (weights_.rssi != 0.0) v += weights_.rssi * rssi_term(p);
  return v;
}

Point grid_argmax(const LocalizationDensity& density, double step) {
  const Layout& layout = density.layout();
  const auto nx = std::max<long>(1, std::lround(std::ceil(layout.width() / step)));
  const auto ny = std::max<long>(1, std::lround(std::ceil(layout.length() / step)));
  const double sx = layout.width() / static_cast<double>(nx);
  const double sy = layout.length() / static_cast<double>(ny);
  Point best = layout.centroid();
  double best_v = kNegInf;
  for (long i = 0; i < nx; ++i) {
    for (long j = 0; j < ny; ++j) {
      const Point p{(static_cast<double>(i) + 0.5) * sx, (static_cast<double>(j) + 0.5) * sy};
      const double v = density(p);
      if (v > best_v) {
        best_v = v;
        best = p;
      }
    }
  }
  return best;
}

LocationPosterior localize(const ObservationWindow& window, const PrpModel& model, const Layout& layout,
                           const LocalizeOptions& options) {
  if (window.records.empty()) throw InvalidInput("window " + window.receiver_id + " has no beacon records");
  const LocalizationDensity density(layout, model, window, options.weights);
  LocationPosterior out;
  const bool prp_info = options.weights.prp != 0.0 && density.has_prp_information();
  const bool rssi_info = options.weights.rssi != 0.0 && density.has_rssi_information();
  out.low_information = !prp_info && !rssi_info;
  if (out.low_information) spdlog::debug("window {}: no packets; posterior is prior-dominated", window.receiver_id);

  McmcConfig cfg = options.mcmc;
  if (cfg.initial_step.empty()) cfg.initial_step = {0.5};
  if (cfg.init_jitter == 0.0) cfg.init_jitter = 0.5;
  const Point start = grid_argmax(density, options.grid_step);
  const LogDensity f = [&density](std::span<const double> v) { return density(Point{v[0], v[1]}); };
  out.samples = mcmc_sample(f, {start.x, start.y}, cfg, {"x", "y"});

  const auto best = out.samples.row(out.samples.argmax_row());
  out.map = {best[0], best[1]};
  const auto m = out.samples.column_mean();
  const auto s = out.samples.column_sd();
  out.mean = {m[0], m[1]};
  out.sd = {s[0], s[1]};
  out.elements_at_map = element_map(layout, out.map);
  return out;
}

McmcConfig fast_mcmc_config(std::uint64_t seed) {
  McmcConfig c;
  c.burn_in = 1000;
  c.draws = 2000;
  c.chains = 2;
  c.seed = seed;
  c.parallel = false;
  return c;
}

}  // namespace bprp
