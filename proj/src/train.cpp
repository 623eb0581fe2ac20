#include "bprp/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "bprp/errors.hpp"
#include "bprp/rng.hpp"
#include "bprp/stats.hpp"

namespace bprp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kCoefficients = 10;

// Counts pooled over all windows of one (receiver, beacon) pair. Pooling is exact
// because a receiver is stationary across its windows.
struct Pair {
  std::size_t beacon = 0;
  std::size_t receiver = 0;
  std::int64_t c = 0;
  std::int64_t n = 0;
  double z2 = 0.0;
  double z3 = 0.0;
  // Only meaningful when both endpoints are known.
  GeometricElement element = GeometricElement::FreeSpace;
  double z1 = 0.0;
};

struct Problem {
  const Layout* layout = nullptr;
  Standardization standardization;
  double prior_sigma = 10.0;
  std::vector<std::string> receiver_ids;
  std::vector<std::optional<Point>> receiver_pos;
  std::vector<std::optional<Point>> beacon_pos;
  std::vector<Pair> fixed;    // both endpoints known
  std::vector<Pair> dynamic;  // at least one endpoint latent
};

double pair_loglik(const LinkParams& p, std::int64_t c, std::int64_t n, double z1, double z2, double z3) {
  return binomial_logit_log_likelihood(c, n, link_logit(p, std::array<double, 3>{z1, z2, z3}));
}

GeometricElement fast_classify(const Layout& layout, Point beacon, Point receiver) {
  if (layout.in_corridor(receiver)) return GeometricElement::Corridor;
  const int n = layout.stacks_crossed(beacon, receiver);
  return n == 0 ? GeometricElement::FreeSpace : (n == 1 ? GeometricElement::OneStack : GeometricElement::TwoStack);
}

/// Joint log posterior over the active elements' coefficients and the latent positions.
class TrainTarget final : public BlockedTarget {
  enum class Kind { Element, Beacon, Receiver };

 public:
  TrainTarget(const Problem& prob, std::vector<GeometricElement> active, bool with_latent)
      : prob_(prob), active_(std::move(active)), with_latent_(with_latent) {
    element_offset_.fill(npos);
    std::size_t off = 0;
    for (const auto e : active_) {
      element_offset_[index_of(e)] = off;
      off += kCoefficients;
    }
    beacon_offset_.assign(prob.beacon_pos.size(), npos);
    receiver_offset_.assign(prob.receiver_pos.size(), npos);
    if (with_latent_) {
      for (std::size_t i = 0; i < prob.beacon_pos.size(); ++i) {
        if (!prob.beacon_pos[i]) {
          beacon_offset_[i] = off;
          off += 2;
        }
      }
      for (std::size_t i = 0; i < prob.receiver_pos.size(); ++i) {
        if (!prob.receiver_pos[i]) {
          receiver_offset_[i] = off;
          off += 2;
        }
      }
      by_beacon_.resize(prob.beacon_pos.size());
      by_receiver_.resize(prob.receiver_pos.size());
      for (std::size_t k = 0; k < prob.dynamic.size(); ++k) {
        by_beacon_[prob.dynamic[k].beacon].push_back(k);
        by_receiver_[prob.dynamic[k].receiver].push_back(k);
      }
    }
    dim_ = off;
    // Distance terms (w0, w1, w11) and rate/power terms are updated as separate blocks
    // of the same element conditional.
    for (const auto e : active_) {
      const std::size_t off = element_offset_[index_of(e)];
      blocks_.push_back({off, off + 1, off + 4});
      block_kind_.push_back({Kind::Element, index_of(e)});
      blocks_.push_back({off + 2, off + 3, off + 5, off + 6, off + 7, off + 8, off + 9});
      block_kind_.push_back({Kind::Element, index_of(e)});
    }
    for (std::size_t i = 0; i < beacon_offset_.size(); ++i) {
      if (beacon_offset_[i] == npos) continue;
      blocks_.push_back({beacon_offset_[i], beacon_offset_[i] + 1});
      block_kind_.push_back({Kind::Beacon, i});
    }
    for (std::size_t i = 0; i < receiver_offset_.size(); ++i) {
      if (receiver_offset_[i] == npos) continue;
      blocks_.push_back({receiver_offset_[i], receiver_offset_[i] + 1});
      block_kind_.push_back({Kind::Receiver, i});
    }
    for (const auto& p : prob.fixed) fixed_by_element_[index_of(p.element)].push_back(&p);
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::size_t dimension() const override { return dim_; }

  std::vector<std::vector<std::size_t>> blocks() const override { return blocks_; }

  std::vector<std::string> names() const {
    std::vector<std::string> n(dim_);
    for (const auto e : active_) {
      for (std::size_t k = 0; k < kCoefficients; ++k) n[element_offset_[index_of(e)] + k] = coefficient_name(e, k);
    }
    const auto& beacons = prob_.layout->beacons();
    for (std::size_t i = 0; i < beacon_offset_.size(); ++i) {
      if (beacon_offset_[i] == npos) continue;
      n[beacon_offset_[i]] = "beacon." + beacons[i].id + ".x";
      n[beacon_offset_[i] + 1] = "beacon." + beacons[i].id + ".y";
    }
    for (std::size_t i = 0; i < receiver_offset_.size(); ++i) {
      if (receiver_offset_[i] == npos) continue;
      n[receiver_offset_[i]] = "receiver." + prob_.receiver_ids[i] + ".x";
      n[receiver_offset_[i] + 1] = "receiver." + prob_.receiver_ids[i] + ".y";
    }
    return n;
  }

  std::size_t element_offset(GeometricElement e) const { return element_offset_[index_of(e)]; }
  std::size_t beacon_offset(std::size_t i) const { return beacon_offset_[i]; }
  std::size_t receiver_offset(std::size_t i) const { return receiver_offset_[i]; }

  double log_density(std::span<const double> x) const override {
    double v = 0.0;
    for (const auto e : active_) v += element_prior(e, x) + fixed_sum(e, x);
    if (!with_latent_) return v;
    for (std::size_t i = 0; i < beacon_offset_.size(); ++i) {
      if (beacon_offset_[i] != npos && !inside(x, beacon_offset_[i])) return kNegInf;
    }
    for (std::size_t i = 0; i < receiver_offset_.size(); ++i) {
      if (receiver_offset_[i] != npos && !inside(x, receiver_offset_[i])) return kNegInf;
    }
    for (const auto& p : prob_.dynamic) v += dynamic_loglik(p, x, nullptr);
    return v;
  }

  double block_log_density(std::size_t block, std::span<const double> x) const override {
    const auto [kind, idx] = block_kind_.at(block);
    switch (kind) {
      case Kind::Element: {
        const auto e = static_cast<GeometricElement>(idx);
        double v = element_prior(e, x) + fixed_sum(e, x);
        for (const auto& p : prob_.dynamic) v += dynamic_loglik(p, x, &e);
        return v;
      }
      case Kind::Beacon: {
        if (!inside(x, beacon_offset_[idx])) return kNegInf;
        double v = 0.0;
        for (const auto k : by_beacon_[idx]) v += dynamic_loglik(prob_.dynamic[k], x, nullptr);
        return v;
      }
      case Kind::Receiver: {
        if (!inside(x, receiver_offset_[idx])) return kNegInf;
        double v = 0.0;
        for (const auto k : by_receiver_[idx]) v += dynamic_loglik(prob_.dynamic[k], x, nullptr);
        return v;
      }
    }
    return kNegInf;
  }

  LinkParams params(GeometricElement e, std::span<const double> x) const {
    const std::size_t off = element_offset_[index_of(e)];
    if (off == npos) return LinkParams{e, 0.0, {}, {}};
    return from_vector(e, x.subspan(off, kCoefficients));
  }

  Point beacon_at(std::size_t i, std::span<const double> x) const {
    if (prob_.beacon_pos[i]) return *prob_.beacon_pos[i];
    return {x[beacon_offset_[i]], x[beacon_offset_[i] + 1]};
  }
  Point receiver_at(std::size_t i, std::span<const double> x) const {
    if (prob_.receiver_pos[i]) return *prob_.receiver_pos[i];
    return {x[receiver_offset_[i]], x[receiver_offset_[i] + 1]};
  }

  // Log-likelihood of one latent pair; when `only` is set, pairs of other elements contribute 0.
  double dynamic_loglik(const Pair& p, std::span<const double> x, const GeometricElement* only) const {
    const Point b = beacon_at(p.beacon, x);
    const Point r = receiver_at(p.receiver, x);
    const GeometricElement e = fast_classify(*prob_.layout, b, r);
    if (only != nullptr && e != *only) return 0.0;
    const double z1 = (std::hypot(b.x - r.x, b.y - r.y) - prob_.standardization.mean[0]) / prob_.standardization.sd[0];
    return pair_loglik(params(e, x), p.c, p.n, z1, p.z2, p.z3);
  }

 private:

  bool inside(std::span<const double> x, std::size_t off) const {
    const double px = x[off], py = x[off + 1];
    return std::isfinite(px) && std::isfinite(py) && px >= 0 && py >= 0 && px <= prob_.layout->width() &&
           py <= prob_.layout->length();
  }

  double element_prior(GeometricElement e, std::span<const double> x) const {
    const std::size_t off = element_offset_[index_of(e)];
    double ss = 0.0;
    for (std::size_t k = 0; k < kCoefficients; ++k) ss += x[off + k] * x[off + k];
    return -0.5 * ss / (prob_.prior_sigma * prob_.prior_sigma);
  }

  double fixed_sum(GeometricElement e, std::span<const double> x) const {
    const LinkParams lp = params(e, x);
    double v = 0.0;
    for (const Pair* p : fixed_by_element_[index_of(e)]) v += pair_loglik(lp, p->c, p->n, p->z1, p->z2, p->z3);
    return v;
  }

  const Problem& prob_;
  std::vector<GeometricElement> active_;
  bool with_latent_;
  std::array<std::size_t, kElementCount> element_offset_{};
  std::vector<std::size_t> beacon_offset_;
  std::vector<std::size_t> receiver_offset_;
  std::vector<std::vector<std::size_t>> by_beacon_;
  std::vector<std::vector<std::size_t>> by_receiver_;
  std::array<std::vector<const Pair*>, kElementCount> fixed_by_element_;
  std::size_t dim_ = 0;
  std::vector<std::vector<std::size_t>> blocks_;
  std::vector<std::pair<Kind, std::size_t>> block_kind_;
};

Problem build_problem(const TrainingDataset& data, const TrainOptions& options) {
  const Layout& layout = data.layout;
  Problem prob;
  prob.layout = &layout;
  prob.prior_sigma = options.prior_sigma;
  for (const auto& b : layout.beacons()) {
    prob.beacon_pos.push_back(b.position_known ? std::optional<Point>(b.position) : std::nullopt);
  }

  std::map<std::string, std::size_t> rx_index;
  for (const auto& w : data.windows) {
    w.validate();
    if (rx_index.contains(w.receiver_id)) continue;
    rx_index.emplace(w.receiver_id, prob.receiver_ids.size());
    prob.receiver_ids.push_back(w.receiver_id);
    const auto it = data.receiver_locations.find(w.receiver_id);
    std::optional<Point> pos = it == data.receiver_locations.end() ? std::nullopt : it->second;
    if (pos && !layout.contains(*pos)) throw OutOfBounds("training location of " + w.receiver_id + " is outside the floorplan");
    prob.receiver_pos.push_back(pos);
  }

  // Pool counts per (receiver, beacon).
  const std::size_t nb = layout.beacons().size();
  std::vector<std::int64_t> c(prob.receiver_ids.size() * nb, 0), n(prob.receiver_ids.size() * nb, 0);
  for (const auto& w : data.windows) {
    const std::size_t ri = rx_index.at(w.receiver_id);
    for (const auto& r : w.records) {
      if (!layout.beacon_index(r.beacon_id)) {
        throw DataConsistency("window " + w.receiver_id + " references unknown beacon " + r.beacon_id);
      }
    }
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const auto& beacon = layout.beacons()[bi];
      const std::int64_t sent = packets_sent(beacon.rate_hz, w.duration());
      std::int64_t got = 0;
      if (const BeaconRecord* r = w.find(beacon.id)) got = std::min(r->packets_received, sent);
      c[ri * nb + bi] += got;
      n[ri * nb + bi] += sent;
    }
  }

  if (options.standardization) {
    prob.standardization = *options.standardization;
  } else {
    std::vector<std::array<double, 3>> thetas;
    for (std::size_t ri = 0; ri < prob.receiver_ids.size(); ++ri) {
      for (std::size_t bi = 0; bi < nb; ++bi) {
        if (!prob.receiver_pos[ri] || !prob.beacon_pos[bi]) continue;
        const auto& b = layout.beacons()[bi];
        thetas.push_back({distance(*prob.beacon_pos[bi], *prob.receiver_pos[ri]), b.rate_hz, b.power_dbm});
      }
    }
    if (thetas.size() >= 2) {
      prob.standardization = Standardization::fit(thetas);
    } else {
      std::vector<std::array<double, 3>> beacon_thetas;
      for (const auto& b : layout.beacons()) beacon_thetas.push_back({0.0, b.rate_hz, b.power_dbm});
      prob.standardization = Standardization::fit(beacon_thetas);
      prob.standardization.mean[0] = 0.5 * layout.diagonal();
      prob.standardization.sd[0] = 0.25 * layout.diagonal();
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(prob.standardization.sd[i] > 0)) throw InvalidInput("standardization sd must be > 0");
  }

  for (std::size_t ri = 0; ri < prob.receiver_ids.size(); ++ri) {
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const auto& b = layout.beacons()[bi];
      Pair p;
      p.beacon = bi;
      p.receiver = ri;
      p.c = c[ri * nb + bi];
      p.n = n[ri * nb + bi];
      if (p.n == 0) continue;
      const auto z = prob.standardization.apply(0.0, b.rate_hz, b.power_dbm);
      p.z2 = z[1];
      p.z3 = z[2];
      if (prob.receiver_pos[ri] && prob.beacon_pos[bi]) {
        p.element = classify_element(layout, *prob.beacon_pos[bi], *prob.receiver_pos[ri]);
        p.z1 = (distance(*prob.beacon_pos[bi], *prob.receiver_pos[ri]) - prob.standardization.mean[0]) /
               prob.standardization.sd[0];
        prob.fixed.push_back(p);
      } else {
        prob.dynamic.push_back(p);
      }
    }
  }
  return prob;
}

// Grid search of one latent point against pairs whose other endpoint is already placed.
template <typename Score>
Point grid_search(const Layout& layout, double step, Score score) {
  const auto nx = std::max<long>(1, std::lround(std::ceil(layout.width() / step)));
  const auto ny = std::max<long>(1, std::lround(std::ceil(layout.length() / step)));
  Point best = layout.centroid();
  double best_v = kNegInf;
  for (long i = 0; i < nx; ++i) {
    for (long j = 0; j < ny; ++j) {
      const Point p{(static_cast<double>(i) + 0.5) * layout.width() / static_cast<double>(nx),
                    (static_cast<double>(j) + 0.5) * layout.length() / static_cast<double>(ny)};
      const double v = score(p);
      if (v > best_v) {
        best_v = v;
        best = p;
      }
    }
  }
  return best;
}

}  // namespace

std::array<double, 10> to_vector(const LinkParams& p) {
  return {p.w0, p.w[0], p.w[1], p.w[2], p.w_pair[0], p.w_pair[1], p.w_pair[2], p.w_pair[3], p.w_pair[4], p.w_pair[5]};
}

LinkParams from_vector(GeometricElement e, std::span<const double> v) {
  LinkParams p;
  p.element = e;
  p.w0 = v[0];
  for (std::size_t k = 0; k < 3; ++k) p.w[k] = v[1 + k];
  for (std::size_t k = 0; k < 6; ++k) p.w_pair[k] = v[4 + k];
  return p;
}

std::string coefficient_name(GeometricElement e, std::size_t k) {
  static const std::array<const char*, kCoefficients> names = {"w0",  "w1",  "w2",  "w3",  "w11",
                                                               "w12", "w13", "w22", "w23", "w33"};
  return std::string(element_key(e)) + "." + names.at(k);
}

TrainResult train(const TrainingDataset& data, const TrainOptions& options) {
  const Layout& layout = data.layout;
  if (layout.beacons().size() < 3) throw InvalidInput("train: at least 3 beacons are required");
  if (data.windows.empty()) throw InvalidInput("train: no training windows");
  if (!(options.prior_sigma > 0)) throw InvalidInput("train: prior sigma must be > 0");
  const Problem prob = build_problem(data, options);

  const bool any_known_beacon =
      std::any_of(prob.beacon_pos.begin(), prob.beacon_pos.end(), [](const auto& p) { return p.has_value(); });
  const bool any_known_receiver =
      std::any_of(prob.receiver_pos.begin(), prob.receiver_pos.end(), [](const auto& p) { return p.has_value(); });
  if (!any_known_beacon && !any_known_receiver) {
    throw InvalidInput("train: need at least one known beacon or known receiver location");
  }

  std::array<bool, kElementCount> has_fixed{};
  for (const auto& p : prob.fixed) has_fixed[index_of(p.element)] = true;
  std::vector<GeometricElement> fixed_active;
  for (const auto e : kAllElements) {
    if (has_fixed[index_of(e)]) fixed_active.push_back(e);
  }
  std::vector<GeometricElement> active = fixed_active;
  if (!prob.dynamic.empty()) {
    active.clear();
    const bool corridors = !layout.corridors().empty() || !layout.desks().empty();
    for (const auto e : kAllElements) {
      if (e == GeometricElement::Corridor && !corridors) continue;
      if (e == GeometricElement::TwoStack && layout.stacks().size() < 2) continue;
      if (e == GeometricElement::OneStack && layout.stacks().empty()) continue;
      active.push_back(e);
    }
  }
  if (active.empty()) throw InvalidInput("train: no usable (beacon, receiver) pairs");

  // Starting coefficients: a fit on the fully known pairs when there are any,
  // otherwise a plain decay with distance.
  std::array<LinkParams, kElementCount> start{};
  for (const auto e : kAllElements) {
    start[index_of(e)] = LinkParams{e, 0.0, {-1.0, 0.0, 0.0}, {}};
  }
  if (!prob.dynamic.empty() && !fixed_active.empty()) {
    const TrainTarget warm(prob, fixed_active, false);
    McmcConfig cfg = options.mcmc;
    cfg.burn_in = std::max<std::size_t>(200, cfg.burn_in / 4);
    cfg.draws = std::max<std::size_t>(200, cfg.draws / 10);
    cfg.chains = 1;
    cfg.thin = 1;
    cfg.seed = derive_seed(options.mcmc.seed, "train-warm");
    cfg.initial_step = {0.1};
    std::vector<double> init(warm.dimension(), 0.0);
    const auto s = mcmc_sample_blocked(warm, init, cfg);
    const auto m = s.column_mean();
    for (const auto e : fixed_active) start[index_of(e)] = warm.params(e, m);
    const GeometricElement donor =
        has_fixed[index_of(GeometricElement::FreeSpace)] ? GeometricElement::FreeSpace : fixed_active.front();
    for (const auto e : kAllElements) {
      if (!has_fixed[index_of(e)]) start[index_of(e)] = LinkParams{e, start[index_of(donor)].w0, start[index_of(donor)].w,
                                                                    start[index_of(donor)].w_pair};
    }
  }

  const TrainTarget target(prob, active, true);
  std::vector<double> init(target.dimension(), 0.0);
  for (const auto e : active) {
    const auto v = prob.dynamic.empty() ? std::array<double, 10>{} : to_vector(start[index_of(e)]);
    std::copy(v.begin(), v.end(), init.begin() + static_cast<std::ptrdiff_t>(target.element_offset(e)));
  }
  std::vector<double> steps(target.dimension(), 0.1);

  if (!prob.dynamic.empty()) {
    const auto start_g = [&](Point b, Point r, const Pair& p) {
      const GeometricElement e = fast_classify(layout, b, r);
      const double z1 = (std::hypot(b.x - r.x, b.y - r.y) - prob.standardization.mean[0]) / prob.standardization.sd[0];
      return pair_loglik(start[index_of(e)], p.c, p.n, z1, p.z2, p.z3);
    };
    std::vector<std::optional<Point>> beacon_guess = prob.beacon_pos;
    std::vector<std::optional<Point>> receiver_guess = prob.receiver_pos;
    // Unknown receivers against known beacons first, when they heard any.
    for (std::size_t ri = 0; ri < receiver_guess.size(); ++ri) {
      if (receiver_guess[ri]) continue;
      std::vector<const Pair*> pairs;
      for (const auto& p : prob.dynamic) {
        if (p.receiver == ri && prob.beacon_pos[p.beacon]) pairs.push_back(&p);
      }
      if (std::none_of(pairs.begin(), pairs.end(), [](const Pair* p) { return p->c > 0; })) continue;
      receiver_guess[ri] = grid_search(layout, options.init_grid_step, [&](Point r) {
        double v = 0.0;
        for (const Pair* p : pairs) v += start_g(*prob.beacon_pos[p->beacon], r, *p);
        return v;
      });
    }
    // Unknown beacons against receivers placed so far.
    for (std::size_t bi = 0; bi < beacon_guess.size(); ++bi) {
      if (beacon_guess[bi]) continue;
      std::vector<const Pair*> pairs;
      for (const auto& p : prob.dynamic) {
        if (p.beacon == bi && receiver_guess[p.receiver]) pairs.push_back(&p);
      }
      if (pairs.empty()) {
        SplitMix64 rng(derive_seed(options.mcmc.seed, "train-init-beacon", {bi}));
        const Point c0 = layout.centroid();
        beacon_guess[bi] = Point{std::clamp(c0.x + 0.5 * rng.normal(), 0.0, layout.width()),
                                 std::clamp(c0.y + 0.5 * rng.normal(), 0.0, layout.length())};
        continue;
      }
      beacon_guess[bi] = grid_search(layout, options.init_grid_step, [&](Point b) {
        double v = 0.0;
        for (const Pair* p : pairs) v += start_g(b, *receiver_guess[p->receiver], *p);
        return v;
      });
    }
    // Remaining receivers against every beacon placed so far.
    for (std::size_t ri = 0; ri < receiver_guess.size(); ++ri) {
      if (receiver_guess[ri]) continue;
      std::vector<const Pair*> pairs;
      for (const auto& p : prob.dynamic) {
        if (p.receiver == ri) pairs.push_back(&p);
      }
      receiver_guess[ri] = grid_search(layout, options.init_grid_step, [&](Point r) {
        double v = 0.0;
        for (const Pair* p : pairs) v += start_g(*beacon_guess[p->beacon], r, *p);
        return v;
      });
    }
    for (std::size_t bi = 0; bi < beacon_guess.size(); ++bi) {
      if (target.beacon_offset(bi) == TrainTarget::npos) continue;
      init[target.beacon_offset(bi)] = beacon_guess[bi]->x;
      init[target.beacon_offset(bi) + 1] = beacon_guess[bi]->y;
      steps[target.beacon_offset(bi)] = steps[target.beacon_offset(bi) + 1] = 0.3;
    }
    for (std::size_t ri = 0; ri < receiver_guess.size(); ++ri) {
      if (target.receiver_offset(ri) == TrainTarget::npos) continue;
      init[target.receiver_offset(ri)] = receiver_guess[ri]->x;
      init[target.receiver_offset(ri) + 1] = receiver_guess[ri]->y;
      steps[target.receiver_offset(ri)] = steps[target.receiver_offset(ri) + 1] = 0.3;
    }
  }

  McmcConfig cfg = options.mcmc;
  cfg.initial_step = steps;
  TrainResult result;
  result.samples = mcmc_sample_blocked(target, init, cfg, target.names());
  result.warnings = result.samples.warnings;
  const auto mean = result.samples.column_mean();
  const auto sd = result.samples.column_sd();

  result.model.standardization = prob.standardization;
  result.model.prior_sigma = options.prior_sigma;
  for (const auto e : active) {
    result.model.link(e) = target.params(e, mean);
    const std::size_t off = target.element_offset(e);
    for (std::size_t k = 0; k < kCoefficients; ++k) result.coefficient_sd[index_of(e)][k] = sd[off + k];
  }
  for (const auto e : kAllElements) {
    if (std::find(active.begin(), active.end(), e) == active.end()) {
      result.coefficient_sd[index_of(e)].fill(options.prior_sigma);
    }
  }

  const auto& beacons = layout.beacons();
  for (std::size_t bi = 0; bi < beacons.size(); ++bi) {
    const std::size_t off = target.beacon_offset(bi);
    if (off == TrainTarget::npos) continue;
    result.recovered_beacons[beacons[bi].id] = {{mean[off], mean[off + 1]}, {sd[off], sd[off + 1]}};
  }
  for (std::size_t ri = 0; ri < prob.receiver_ids.size(); ++ri) {
    const std::size_t off = target.receiver_offset(ri);
    if (off == TrainTarget::npos) continue;
    result.recovered_locations[prob.receiver_ids[ri]] = {{mean[off], mean[off + 1]}, {sd[off], sd[off + 1]}};
  }

  // Elements with no data at the posterior-mean configuration keep the prior mean.
  std::array<std::size_t, kElementCount> support{};
  for (const auto& p : prob.fixed) ++support[index_of(p.element)];
  for (const auto& p : prob.dynamic) {
    ++support[index_of(fast_classify(layout, target.beacon_at(p.beacon, mean), target.receiver_at(p.receiver, mean)))];
  }
  std::string missing;
  for (const auto e : kAllElements) {
    if (support[index_of(e)] > 0) continue;
    result.untrained.push_back(e);
    result.model.link(e) = LinkParams{e, 0.0, {}, {}};
    result.coefficient_sd[index_of(e)].fill(options.prior_sigma);
    missing += (missing.empty() ? "" : ", ") + std::string(element_label(e));
  }
  if (!missing.empty()) {
    result.warnings.push_back("undertrained model: no data for " + missing);
    spdlog::warn("train: no data for element(s) {}; their links stay at the prior mean", missing);
  }
  return result;
}

Layout recovered_layout(const Layout& layout, const TrainResult& result) {
  std::vector<Beacon> beacons = layout.beacons();
  for (auto& b : beacons) {
    const auto it = result.recovered_beacons.find(b.id);
    if (it == result.recovered_beacons.end()) continue;
    b.position = it->second.mean;
    b.position_known = true;
  }
  return layout.with_beacons(std::move(beacons));
}

}  // namespace bprp
