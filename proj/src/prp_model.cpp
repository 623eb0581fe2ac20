#include "bprp/prp_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bprp/errors.hpp"
#include "bprp/stats.hpp"

namespace bprp {

const BeaconRecord* ObservationWindow::find(std::string_view beacon_id) const {
  for (const auto& r : records) {
    if (r.beacon_id == beacon_id) return &r;
  }
  return nullptr;
}

void ObservationWindow::validate() const {
  if (!(window_end > window_start)) throw InvalidInput("window " + receiver_id + ": end must follow start");
  for (const auto& r : records) {
    const std::string where = "window " + receiver_id + " beacon " + r.beacon_id;
    if (r.packets_received < 0) throw InvalidInput(where + ": negative packet count");
    if (r.packets_received == 0) {
      if (r.mean_rssi) throw InvalidInput(where + ": mean_rssi present with zero packets");
      continue;
    }
    if (!r.t_first || !r.t_last) throw InvalidInput(where + ": missing first/last timestamps");
    if (!r.mean_rssi) throw InvalidInput(where + ": mean_rssi missing with packets received");
    if (!(*r.t_first >= window_start && *r.t_first <= *r.t_last && *r.t_last <= window_end)) {
      throw InvalidInput(where + ": timestamps outside the window or out of order");
    }
  }
}

std::array<double, 3> Standardization::apply(double d, double rate, double power) const {
  return {(d - mean[0]) / sd[0], (rate - mean[1]) / sd[1], (power - mean[2]) / sd[2]};
}

Standardization Standardization::fit(const std::vector<std::array<double, 3>>& thetas) {
  Standardization s;
  if (thetas.empty()) return s;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> col;
    col.reserve(thetas.size());
    for (const auto& t : thetas) col.push_back(t[static_cast<std::size_t>(i)]);
    const double m = stats::mean(col);
    const double v = stats::sd(col);
    s.mean[static_cast<std::size_t>(i)] = m;
    s.sd[static_cast<std::size_t>(i)] = v > 1e-12 ? v : 1.0;
  }
  return s;
}

double RssiPathModel::predicted_mean(double d) const { return p_ref - 10.0 * path_exponent * std::log10(d); }

void RssiPathModel::validate() const {
  if (!(noise_sigma > 0) || !std::isfinite(noise_sigma)) throw InvalidInput("rssi noise_sigma must be > 0");
  if (!(path_exponent > 0.5 && path_exponent < 6.0)) throw InvalidInput("rssi path_exponent must lie in (0.5, 6)");
  if (!std::isfinite(p_ref)) throw InvalidInput("rssi p_ref must be finite");
}

PrpModel::PrpModel() {
  for (const auto e : kAllElements) links[index_of(e)].element = e;
}

double PrpModel::logit(GeometricElement e, double d, double rate, double power) const {
  return link_logit(link(e), d, rate, power, standardization);
}

double PrpModel::g(GeometricElement e, double d, double rate, double power) const {
  return link_g(link(e), d, rate, power, standardization);
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double log_choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double link_logit(const LinkParams& p, const std::array<double, 3>& z) {
  double eta = p.w0 + p.w[0] * z[0] + p.w[1] * z[1] + p.w[2] * z[2];
  for (std::size_t k = 0; k < kPairIndex.size(); ++k) {
    eta += p.w_pair[k] * z[static_cast<std::size_t>(kPairIndex[k][0])] * z[static_cast<std::size_t>(kPairIndex[k][1])];
  }
  return eta;
}

double link_logit(const LinkParams& params, double d, double rate, double power,
                  const Standardization& standardization) {
  if (!std::isfinite(d) || !std::isfinite(rate) || !std::isfinite(power)) throw InvalidInput("link: non-finite input");
  if (d < 0) throw InvalidInput("link: negative distance");
  return link_logit(params, standardization.apply(d, rate, power));
}

double link_g(const LinkParams& params, double d, double rate, double power, const Standardization& standardization) {
  const double eta = link_logit(params, d, rate, power, standardization);
  if (!std::isfinite(eta)) throw InvalidInput("link: non-finite coefficients");
  // Clamp keeps the result strictly inside (0, 1) in double precision.
  const double g = 1.0 / (1.0 + std::exp(-eta));
  return std::clamp(g, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

double binomial_logit_log_likelihood(std::int64_t c, std::int64_t n, double eta) {
  // c log g + (n - c) log(1 - g) with log g = eta - softplus(eta), log(1 - g) = -softplus(eta).
  return log_choose(n, c) + static_cast<double>(c) * eta - static_cast<double>(n) * softplus(eta);
}

double count_log_likelihood(const LinkParams& params, std::int64_t c, std::int64_t n, double d, double rate,
                            double power, const Standardization& standardization) {
  if (n < 1) throw InvalidInput("count likelihood: N must be >= 1");
  if (c < 0 || c > n) throw InvalidInput("count likelihood: need 0 <= c <= N");
  const double eta = link_logit(params, d, rate, power, standardization);
  if (!std::isfinite(eta)) throw InvalidInput("count likelihood: non-finite coefficients");
  return binomial_logit_log_likelihood(c, n, eta);
}

double estimate_prp(const ObservationWindow& window, std::string_view beacon_id, double rate) {
  if (!(rate > 0)) throw InvalidInput("estimate_prp: rate must be > 0");
  const BeaconRecord* r = window.find(beacon_id);
  if (r == nullptr || r->packets_received < 2 || !r->t_first || !r->t_last) {
    throw InsufficientData("estimate_prp: fewer than 2 packets from beacon " + std::string(beacon_id));
  }
  const double span = *r->t_last - *r->t_first;
  if (!(span > 0)) throw InsufficientData("estimate_prp: first and last packet share a timestamp");
  const double p = static_cast<double>(r->packets_received) / (rate * span);
  return std::min(p, 1.0);
}

std::int64_t packets_sent(double rate, double dwell) {
  if (!(rate > 0) || !(dwell > 0)) throw InvalidInput("packets_sent: rate and dwell must be > 0");
  return std::max<std::int64_t>(1, std::llround(rate * dwell));
}

double truncated_rssi_mean(const TruncatedRssiModel& m) {
  if (!(m.sigma > 0) || !std::isfinite(m.sigma) || !std::isfinite(m.mu)) {
    throw InvalidInput("truncated_rssi_mean: sigma must be > 0 and mu finite");
  }
  if (std::isnan(m.threshold)) throw InvalidInput("truncated_rssi_mean: threshold is NaN");
  if (m.threshold == -std::numeric_limits<double>::infinity()) return m.mu;
  const double z = (m.threshold - m.mu) / m.sigma;
  const double tail = stats::normal_upper_tail(z);
  // Far below the threshold the pdf underflows too; the hazard is then 0, which is correct.
  if (!(tail > 0)) throw Saturation("truncated_rssi_mean: essentially all packets dropped");
  const double hazard = stats::normal_pdf(z) / tail;
  if (!std::isfinite(hazard)) throw Saturation("truncated_rssi_mean: essentially all packets dropped");
  return m.mu + m.sigma * hazard;
}

}  // namespace bprp
