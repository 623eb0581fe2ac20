#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bprp/geometry.hpp"

namespace bprp {

struct BeaconRecord {
  std::string beacon_id;
  std::int64_t packets_received = 0;
  std::optional<double> t_first;
  std::optional<double> t_last;
  std::optional<double> mean_rssi;
};

/// Everything one receiver heard during [window_start, window_end).
struct ObservationWindow {
  std::string receiver_id;
  double window_start = 0.0;
  double window_end = 0.0;
  std::vector<BeaconRecord> records;

  double duration() const { return window_end - window_start; }
  const BeaconRecord* find(std::string_view beacon_id) const;
  // Throws InvalidInput when a record breaks the timestamp/count invariants.
  void validate() const;
};

/// Coefficients of the logit-quadratic link for one geometric element.
/// w_pair is ordered (1,1),(1,2),(1,3),(2,2),(2,3),(3,3) over theta = (d, R, p0).
struct LinkParams {
  GeometricElement element = GeometricElement::FreeSpace;
  double w0 = 0.0;
  std::array<double, 3> w{};
  std::array<double, 6> w_pair{};
};

inline constexpr std::array<std::array<int, 2>, 6> kPairIndex = {{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};

/// z-scoring of theta before it enters the link. The identity (mean 0, sd 1) is the default.
struct Standardization {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> sd{1.0, 1.0, 1.0};

  std::array<double, 3> apply(double d, double rate, double power) const;
  // Fit on raw training triples; zero spread falls back to sd 1.
  static Standardization fit(const std::vector<std::array<double, 3>>& thetas);
};

struct TruncatedRssiModel {
  double mu = 0.0;
  double sigma = 1.0;
  double threshold = -95.0;
};

/// Log-distance path loss: mean RSSI = p_ref - 10 n log10(d).
struct RssiPathModel {
  double p_ref = -75.0;
  double path_exponent = 2.0;
  double noise_sigma = 4.0;
  double decode_threshold = -95.0;

  double predicted_mean(double d) const;
  void validate() const;
};

/// Trained model: one link per element plus the standardization it was fit under.
struct PrpModel {
  std::array<LinkParams, kElementCount> links{};
  Standardization standardization;
  double prior_sigma = 10.0;
  std::optional<RssiPathModel> rssi;

  PrpModel();
  const LinkParams& link(GeometricElement e) const { return links[index_of(e)]; }
  LinkParams& link(GeometricElement e) { return links[index_of(e)]; }
  double logit(GeometricElement e, double d, double rate, double power) const;
  double g(GeometricElement e, double d, double rate, double power) const;
};

double softplus(double x);
double log_choose(std::int64_t n, std::int64_t k);

/// Linear predictor on already-standardized inputs.
double link_logit(const LinkParams& params, const std::array<double, 3>& z);
double link_logit(const LinkParams& params, double d, double rate, double power,
                  const Standardization& standardization = {});
double link_g(const LinkParams& params, double d, double rate, double power,
              const Standardization& standardization = {});

/// log Binomial(c | N, inverse_logit(eta)), stable for any finite eta.
double binomial_logit_log_likelihood(std::int64_t c, std::int64_t n, double eta);

double count_log_likelihood(const LinkParams& params, std::int64_t c, std::int64_t n, double d, double rate,
                            double power, const Standardization& standardization = {});

double estimate_prp(const ObservationWindow& window, std::string_view beacon_id, double rate);

std::int64_t packets_sent(double rate, double dwell);

double truncated_rssi_mean(const TruncatedRssiModel& model);

}  // namespace bprp
