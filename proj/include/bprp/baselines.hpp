#pragma once

#include <cstdint>

#include "bprp/localize.hpp"
#include "bprp/train.hpp"

namespace bprp {

/// Gaussian log-likelihood of a mean over n_packets RSSI readings at range d.
double rssi_log_likelihood(const RssiPathModel& model, double observed_mean_rssi, std::int64_t n_packets, double d);

struct RssiFitResult {
  RssiPathModel model;  // posterior means
  PosteriorSamples samples;  // columns p_ref, path_exponent, log_sigma
  std::size_t observations = 0;
};

/// Fits p_ref, path exponent and noise sigma on windows whose receiver and beacon
/// positions are both known. Truncation is not modeled.
RssiFitResult fit_rssi_model(const TrainingDataset& data, const McmcConfig& mcmc, double decode_threshold = -95.0);

LocationPosterior bayesian_rssi_localize(const ObservationWindow& window, const RssiPathModel& rssi, const Layout& layout,
                                         const LocalizeOptions& options = {});

/// PRP count likelihood plus rssi_weight times the RSSI likelihood.
LocationPosterior fused_localize(const ObservationWindow& window, const PrpModel& prp, const RssiPathModel& rssi,
                                 const Layout& layout, const LocalizeOptions& options = {}, double rssi_weight = 1.0);

}  // namespace bprp
