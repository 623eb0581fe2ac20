#include "bprp/contact_tracing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <spdlog/spdlog.h>

#include "bprp/baselines.hpp"
#include "bprp/errors.hpp"
#include "bprp/rng.hpp"
#include "bprp/stats.hpp"

namespace bprp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinRange = 0.05;

double log_sigmoid(double x) { return -softplus(-x); }

struct EdgeTerm {
  std::int64_t c = 0;
  std::int64_t n = 1;
  double a = 0, b = 0, q = 0;  // eta = a + b z1 + q z1^2
  std::optional<double> mean_rssi;
};

class BeaconDistanceDensity {
 public:
  BeaconDistanceDensity(const PairQuery& query, const ObservationWindow& window, const PrpModel& model,
                        const Layout& layout, const std::optional<ElementAssignment>& elements,
                        const ContactOptions& options, std::vector<std::string>& warnings)
      : diag_(layout.diagonal()),
        d_mean_(model.standardization.mean[0]),
        d_sd_(model.standardization.sd[0]),
        sharpness_(options.sharpness),
        use_prp_(options.signal != Signal::Rssi),
        use_rssi_(options.signal != Signal::Prp),
        use_triangles_(options.use_triangles),
        rssi_(model.rssi) {
    if (use_rssi_ && !rssi_) throw InvalidInput("contact tracing: RSSI signal requested without an RSSI model");
    for (const auto& id : query.beacons) {
      const Beacon& beacon = layout.beacon(id);
      EdgeTerm t;
      t.n = packets_sent(beacon.rate_hz, window.duration());
      if (const BeaconRecord* r = window.find(id)) {
        t.c = std::min(r->packets_received, t.n);
        if (r->packets_received > 0) t.mean_rssi = r->mean_rssi;
      }
      GeometricElement e = GeometricElement::FreeSpace;
      const auto it = elements ? elements->find(id) : ElementAssignment::const_iterator{};
      if (elements && it != elements->end()) {
        e = it->second;
      } else {
        warnings.push_back("no element for receiver " + window.receiver_id + " / beacon " + id + "; using F-S");
        spdlog::warn("contact tracing: {}", warnings.back());
      }
      const LinkParams& p = model.link(e);
      const auto z = model.standardization.apply(0.0, beacon.rate_hz, beacon.power_dbm);
      t.a = p.w0 + p.w[1] * z[1] + p.w[2] * z[2] + p.w_pair[3] * z[1] * z[1] + p.w_pair[4] * z[1] * z[2] +
            p.w_pair[5] * z[2] * z[2];
      t.b = p.w[0] + p.w_pair[1] * z[1] + p.w_pair[2] * z[2];
      t.q = p.w_pair[0];
      terms_.push_back(t);
    }
    const std::size_t k = query.beacons.size();
    pair_d_.assign(k * k, 0.0);
    for (const auto& bp : query.beacon_pairs) {
      const auto i = std::find(query.beacons.begin(), query.beacons.end(), bp.beacon_i) - query.beacons.begin();
      const auto j = std::find(query.beacons.begin(), query.beacons.end(), bp.beacon_j) - query.beacons.begin();
      pair_d_[static_cast<std::size_t>(i) * k + static_cast<std::size_t>(j)] = bp.distance;
      pair_d_[static_cast<std::size_t>(j) * k + static_cast<std::size_t>(i)] = bp.distance;
    }
  }

  double edge(std::size_t i, double d) const {
    const EdgeTerm& t = terms_[i];
    double v = 0.0;
    if (use_prp_) {
      const double z1 = (d - d_mean_) / d_sd_;
      v += binomial_logit_log_likelihood(t.c, t.n, t.a + t.b * z1 + t.q * z1 * z1);
    }
    if (use_rssi_ && t.mean_rssi) v += rssi_log_likelihood(*rssi_, *t.mean_rssi, t.c, std::max(kMinRange, d));
    return v;
  }

  double operator()(std::span<const double> d) const {
    const std::size_t k = terms_.size();
    double v = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (!(d[i] >= 0 && d[i] <= diag_)) return kNegInf;
      v += edge(i, d[i]);
    }
    if (use_triangles_) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) v += triangle_log_potential(d[i], d[j], pair_d_[i * k + j], sharpness_);
      }
    }
    return v;
  }

  // Per-edge maximum-likelihood range on a 5 cm grid, ignoring the triangle terms.
  std::vector<double> start() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      double best = 0.5 * diag_, best_v = kNegInf;
      for (double d = kMinRange; d <= diag_; d += 0.05) {
        const double v = edge(i, d);
        if (v > best_v) {
          best_v = v;
          best = d;
        }
      }
      out.push_back(best);
    }
    return out;
  }

 private:
  double diag_;
  double d_mean_;
  double d_sd_;
  double sharpness_;
  bool use_prp_;
  bool use_rssi_;
  bool use_triangles_;
  std::optional<RssiPathModel> rssi_;
  std::vector<EdgeTerm> terms_;
  std::vector<double> pair_d_;
};

LocationPosterior localize_with(Signal signal, const ObservationWindow& w, const PrpModel& model, const Layout& layout,
                                const LocalizeOptions& opts) {
  switch (signal) {
    case Signal::Prp: return localize(w, model, layout, opts);
    case Signal::Rssi:
      if (!model.rssi) throw InvalidInput("RSSI signal requested without an RSSI model");
      return bayesian_rssi_localize(w, *model.rssi, layout, opts);
    case Signal::Fused:
      if (!model.rssi) throw InvalidInput("fused signal requested without an RSSI model");
      return fused_localize(w, model, *model.rssi, layout, opts);
  }
  throw InvalidInput("unknown signal");
}

void summarize(DistancePosterior& out) {
  out.mean = stats::mean(out.draws);
  out.sd = stats::sd(out.draws);
}

}  // namespace

std::string_view signal_name(Signal s) {
  switch (s) {
    case Signal::Prp: return "prp";
    case Signal::Rssi: return "rssi";
    case Signal::Fused: return "prp+rssi";
  }
  return "?";
}

Signal signal_from_name(std::string_view name) {
  if (name == "prp") return Signal::Prp;
  if (name == "rssi") return Signal::Rssi;
  if (name == "prp+rssi" || name == "fused") return Signal::Fused;
  throw InvalidInput("unknown signal '" + std::string(name) + "'");
}

void PairQuery::validate(const Layout& layout) const {
  window_a.validate();
  window_b.validate();
  for (const auto& id : beacons) {
    if (!layout.beacon_index(id)) throw DataConsistency("pair query references unknown beacon " + id);
  }
  for (const auto& p : beacon_pairs) {
    if (!(p.distance > 0)) throw InvalidInput("pair query: inter-beacon distances must be > 0");
    const double actual = distance(layout.beacon(p.beacon_i).position, layout.beacon(p.beacon_j).position);
    if (std::abs(actual - p.distance) > 1e-6 * std::max(1.0, actual)) {
      throw DataConsistency("pair query: distance " + p.beacon_i + "-" + p.beacon_j + " disagrees with the layout");
    }
  }
}

PairQuery make_pair_query(const Layout& layout, const ObservationWindow& a, const ObservationWindow& b,
                          std::size_t top_k) {
  PairQuery q;
  q.receiver_a = a.receiver_id;
  q.receiver_b = b.receiver_id;
  q.window_a = a;
  q.window_b = b;
  std::vector<std::pair<std::int64_t, std::size_t>> ranked;
  for (std::size_t i = 0; i < layout.beacons().size(); ++i) {
    const auto& id = layout.beacons()[i].id;
    const BeaconRecord* ra = a.find(id);
    const BeaconRecord* rb = b.find(id);
    if (ra == nullptr || rb == nullptr || ra->packets_received < 1 || rb->packets_received < 1) continue;
    ranked.emplace_back(ra->packets_received + rb->packets_received, i);
  }
  // Highest combined count first; layout order breaks ties.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  if (ranked.size() < 2) throw InsufficientGeometry("receivers share fewer than 2 beacons");
  ranked.resize(std::min(ranked.size(), std::max<std::size_t>(2, top_k)));
  for (const auto& [count, i] : ranked) q.beacons.push_back(layout.beacons()[i].id);
  for (std::size_t i = 0; i < q.beacons.size(); ++i) {
    for (std::size_t j = i + 1; j < q.beacons.size(); ++j) {
      const double d = distance(layout.beacon(q.beacons[i]).position, layout.beacon(q.beacons[j]).position);
      q.beacon_pairs.push_back({q.beacons[i], q.beacons[j], d});
    }
  }
  return q;
}

double triangle_log_potential(double a, double b, double c, double sharpness) {
  if (!(a >= 0 && b >= 0 && c >= 0) || !std::isfinite(a + b + c)) {
    throw InvalidInput("triangle potential: edges must be finite and >= 0");
  }
  if (!(sharpness > 0)) throw InvalidInput("triangle potential: sharpness must be > 0");
  return log_sigmoid(sharpness * (a + b - c)) + log_sigmoid(sharpness * (a + c - b)) +
         log_sigmoid(sharpness * (b + c - a));
}

BeaconDistancePosteriors infer_beacon_distances(const PairQuery& query, const PrpModel& model, const Layout& layout,
                                                const std::optional<ElementAssignment>& elements_a,
                                                const std::optional<ElementAssignment>& elements_b,
                                                const ContactOptions& options) {
  query.validate(layout);
  if (query.beacons.size() < 2) throw InsufficientGeometry("pair query needs at least 2 common beacons");
  BeaconDistancePosteriors out;
  std::vector<std::string> names;
  for (const auto& id : query.beacons) names.push_back("d." + id);
  const auto run = [&](const ObservationWindow& w, const std::optional<ElementAssignment>& el, std::string_view label) {
    const BeaconDistanceDensity density(query, w, model, layout, el, options, out.warnings);
    McmcConfig cfg = options.mcmc;
    cfg.seed = derive_seed(options.mcmc.seed, label);
    cfg.initial_step = {0.3};
    if (cfg.init_jitter == 0.0) cfg.init_jitter = 0.5;
    const LogDensity f = [&density](std::span<const double> d) { return density(d); };
    auto s = mcmc_sample(f, density.start(), cfg, names);
    for (const auto& warning : s.warnings) out.warnings.push_back(warning);
    return s;
  };
  out.a = run(query.window_a, elements_a, "stage1-a");
  out.b = run(query.window_b, elements_b, "stage1-b");
  return out;
}

std::vector<std::size_t> stage2_rows(const BeaconDistancePosteriors& stage1, std::size_t count) {
  const std::size_t n = std::min(stage1.a.n_draws(), stage1.b.n_draws());
  const std::size_t m = std::max<std::size_t>(1, std::min(count, n));
  std::vector<std::size_t> rows(m);
  for (std::size_t i = 0; i < m; ++i) rows[i] = i * n / m;
  return rows;
}

double pair_distance_log_density(const PairQuery& query, const BeaconDistancePosteriors& stage1,
                                 const std::vector<std::size_t>& rows, double d12, double sharpness) {
  if (!(d12 >= 0) || !std::isfinite(d12)) return kNegInf;
  const std::size_t k = query.beacons.size();
  double sum = 0.0;
  for (const std::size_t r : rows) {
    for (std::size_t b = 0; b < k; ++b) sum += triangle_log_potential(stage1.a.at(r, b), stage1.b.at(r, b), d12, sharpness);
  }
  return sum / static_cast<double>(rows.size());
}

DistancePosterior infer_pair_distance(const PairQuery& query, const BeaconDistancePosteriors& stage1,
                                      const Layout& layout, const ContactOptions& options) {
  if (query.beacons.size() < 2) throw InsufficientGeometry("fewer than 2 usable triangles");
  if (stage1.a.n_params != query.beacons.size() || stage1.b.n_params != query.beacons.size()) {
    throw InvalidInput("stage-1 posteriors do not match the query beacons");
  }
  const double diag = layout.diagonal();
  const auto rows = stage2_rows(stage1, options.stage2_draws);
  const auto f1 = [&](double d) {
    if (!(d >= 0 && d <= diag)) return kNegInf;
    return pair_distance_log_density(query, stage1, rows, d, options.sharpness);
  };

  double start = 0.0, start_v = kNegInf;
  for (double d = 0.0; d <= diag; d += 0.05) {
    const double v = f1(d);
    if (v > start_v) {
      start_v = v;
      start = d;
    }
  }
  McmcConfig cfg = options.mcmc;
  cfg.seed = derive_seed(options.mcmc.seed, "stage2");
  cfg.initial_step = {0.3};
  if (cfg.init_jitter == 0.0) cfg.init_jitter = 0.5;
  const LogDensity f = [&f1](std::span<const double> v) { return f1(v[0]); };
  const auto s = mcmc_sample(f, {start}, cfg, {"d12"});

  DistancePosterior out;
  out.target = "d(" + query.receiver_a + "," + query.receiver_b + ")";
  out.draws = s.column(0);
  out.method = "triangle";
  out.signal = options.signal;
  // Golden-section refinement around the best draw.
  const double best = s.at(s.argmax_row(), 0);
  double lo = std::max(0.0, best - 0.25), hi = std::min(diag, best + 0.25);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f_1 = f1(x1), f_2 = f1(x2);
  for (int i = 0; i < 40 && hi - lo > 1e-4; ++i) {
    if (f_1 < f_2) {
      lo = x1;
      x1 = x2;
      f_1 = f_2;
      x2 = lo + inv_phi * (hi - lo);
      f_2 = f1(x2);
    } else {
      hi = x2;
      x2 = x1;
      f_2 = f_1;
      x1 = hi - inv_phi * (hi - lo);
      f_1 = f1(x1);
    }
  }
  const double refined = 0.5 * (lo + hi);
  out.map_estimate = f1(refined) >= f1(best) ? refined : best;
  summarize(out);
  return out;
}

DistancePosterior triangle_pair_distance(const PairQuery& query, const PrpModel& model, const Layout& layout,
                                         const ContactOptions& options) {
  LocalizeOptions lo = options.localize;
  lo.mcmc.seed = derive_seed(options.localize.mcmc.seed, "pair-localize-a");
  const auto pa = localize_with(options.signal, query.window_a, model, layout, lo);
  lo.mcmc.seed = derive_seed(options.localize.mcmc.seed, "pair-localize-b");
  const auto pb = localize_with(options.signal, query.window_b, model, layout, lo);
  const auto stage1 = infer_beacon_distances(query, model, layout, pa.elements_at_map, pb.elements_at_map, options);
  return infer_pair_distance(query, stage1, layout, options);
}

DistancePosterior two_step_pair_distance(const PairQuery& query, const PrpModel& model, const Layout& layout,
                                         const ContactOptions& options) {
  query.validate(layout);
  LocalizeOptions lo = options.localize;
  lo.mcmc.seed = derive_seed(options.localize.mcmc.seed, "pair-localize-a");
  const auto pa = localize_with(options.signal, query.window_a, model, layout, lo);
  lo.mcmc.seed = derive_seed(options.localize.mcmc.seed, "pair-localize-b");
  const auto pb = localize_with(options.signal, query.window_b, model, layout, lo);
  DistancePosterior out;
  out.target = "d(" + query.receiver_a + "," + query.receiver_b + ")";
  out.method = "two_step";
  out.signal = options.signal;
  const std::size_t n = std::min(pa.samples.n_draws(), pb.samples.n_draws());
  out.draws.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    out.draws.push_back(std::hypot(pa.samples.at(r, 0) - pb.samples.at(r, 0), pa.samples.at(r, 1) - pb.samples.at(r, 1)));
  }
  out.map_estimate = distance(pa.map, pb.map);
  summarize(out);
  return out;
}

}  // namespace bprp
