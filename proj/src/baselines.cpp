#include "bprp/baselines.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "bprp/errors.hpp"

namespace bprp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct RssiObservation {
  double log10_d;
  double mean_rssi;
  double n;
};

}  // namespace

double rssi_log_likelihood(const RssiPathModel& model, double observed_mean_rssi, std::int64_t n_packets, double d) {
  model.validate();
  if (n_packets < 1) throw InvalidInput("rssi_log_likelihood: n_packets must be >= 1");
  if (!std::isfinite(d) || d < 0) throw InvalidInput("rssi_log_likelihood: distance must be finite and >= 0");
  if (d == 0.0) throw SingularDistance("rssi_log_likelihood: zero distance");
  const double sd = model.noise_sigma / std::sqrt(static_cast<double>(n_packets));
  const double r = (observed_mean_rssi - model.predicted_mean(d)) / sd;
  return -0.5 * r * r - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

RssiFitResult fit_rssi_model(const TrainingDataset& data, const McmcConfig& mcmc, double decode_threshold) {
  const Layout& layout = data.layout;
  std::vector<RssiObservation> obs;
  for (const auto& w : data.windows) {
    const auto it = data.receiver_locations.find(w.receiver_id);
    if (it == data.receiver_locations.end() || !it->second) continue;
    for (const auto& r : w.records) {
      if (r.packets_received < 1 || !r.mean_rssi) continue;
      const auto idx = layout.beacon_index(r.beacon_id);
      if (!idx) throw DataConsistency("window " + w.receiver_id + " references unknown beacon " + r.beacon_id);
      const Beacon& b = layout.beacons()[*idx];
      if (!b.position_known) continue;
      const double d = distance(b.position, *it->second);
      if (d <= 0) continue;
      obs.push_back({std::log10(d), *r.mean_rssi, static_cast<double>(r.packets_received)});
    }
  }
  if (obs.size() < 3) throw InsufficientData("fit_rssi_model: fewer than 3 RSSI observations at known positions");

  // Weighted least squares start: mean = p_ref - 10 n log10(d), weights n_packets.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& o : obs) {
    sw += o.n;
    sx += o.n * o.log10_d;
    sy += o.n * o.mean_rssi;
    sxx += o.n * o.log10_d * o.log10_d;
    sxy += o.n * o.log10_d * o.mean_rssi;
  }
  const double den = sw * sxx - sx * sx;
  double slope = den > 1e-12 ? (sw * sxy - sx * sy) / den : -20.0;
  double exponent = std::clamp(-slope / 10.0, 0.6, 5.9);
  double p_ref = (sy + 10.0 * exponent * sx) / sw;
  double rss = 0;
  for (const auto& o : obs) {
    const double r = o.mean_rssi - (p_ref - 10.0 * exponent * o.log10_d);
    rss += o.n * r * r;
  }
  const double sigma0 = std::max(0.5, std::sqrt(rss / static_cast<double>(obs.size())));

  const LogDensity f = [&obs](std::span<const double> v) {
    const double pr = v[0], n = v[1], ls = v[2];
    if (!(n > 0.5 && n < 6.0) || !(ls > std::log(0.05) && ls < std::log(100.0))) return kNegInf;
    const double s2 = std::exp(2.0 * ls);
    double sum = 0.0;
    for (const auto& o : obs) {
      const double r = o.mean_rssi - (pr - 10.0 * n * o.log10_d);
      sum += -0.5 * o.n * r * r / s2 - ls + 0.5 * std::log(o.n);
    }
    return sum;
  };
  McmcConfig cfg = mcmc;
  cfg.initial_step = {0.5, 0.05, 0.05};
  RssiFitResult out;
  out.observations = obs.size();
  out.samples = mcmc_sample(f, {p_ref, exponent, std::log(sigma0)}, cfg, {"p_ref", "path_exponent", "log_sigma"});
  const auto m = out.samples.column_mean();
  double sigma_mean = 0;
  for (std::size_t r = 0; r < out.samples.n_draws(); ++r) sigma_mean += std::exp(out.samples.at(r, 2));
  sigma_mean /= static_cast<double>(out.samples.n_draws());
  out.model = RssiPathModel{m[0], m[1], sigma_mean, decode_threshold};
  out.model.validate();
  return out;
}

LocationPosterior bayesian_rssi_localize(const ObservationWindow& window, const RssiPathModel& rssi, const Layout& layout,
                                         const LocalizeOptions& options) {
  rssi.validate();
  PrpModel carrier;
  carrier.rssi = rssi;
  LocalizeOptions opts = options;
  opts.weights = {0.0, 1.0};
  return localize(window, carrier, layout, opts);
}

LocationPosterior fused_localize(const ObservationWindow& window, const PrpModel& prp, const RssiPathModel& rssi,
                                 const Layout& layout, const LocalizeOptions& options, double rssi_weight) {
  rssi.validate();
  if (!(rssi_weight >= 0) || !std::isfinite(rssi_weight)) throw InvalidInput("fused_localize: weight must be >= 0");
  PrpModel model = prp;
  model.rssi = rssi;
  LocalizeOptions opts = options;
  opts.weights = {1.0, rssi_weight};
  return localize(window, model, layout, opts);
}

}  // namespace bprp
