#include "bprp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bprp/errors.hpp"

namespace bprp {

namespace {

// Index of the first complete-window boundary not yet reached, robust to tick rounding.
std::size_t complete_windows(const Trajectory& traj, double window) {
  if (traj.samples.size() < 2) return 0;
  return static_cast<std::size_t>(std::floor(traj.duration() / window + 1e-9));
}

// Samples whose time falls in [ws, we).
std::pair<std::size_t, std::size_t> tick_range(const Trajectory& traj, double ws, double we) {
  const auto& s = traj.samples;
  const double eps = 1e-9;
  auto lo = std::lower_bound(s.begin(), s.end(), ws - eps, [](const TrajectorySample& a, double t) { return a.t < t; });
  auto hi = std::lower_bound(lo, s.end(), we - eps, [](const TrajectorySample& a, double t) { return a.t < t; });
  return {static_cast<std::size_t>(lo - s.begin()), static_cast<std::size_t>(hi - s.begin())};
}

}  // namespace

double RssiTruth::mean(GeometricElement e, double d, double power) const {
  double loss = 0.0;
  switch (e) {
    case GeometricElement::OneStack: loss = one_stack_loss; break;
    case GeometricElement::TwoStack: loss = two_stack_loss; break;
    case GeometricElement::Corridor: loss = corridor_loss; break;
    case GeometricElement::FreeSpace: break;
  }
  return p_ref + (power - reference_power) - 10.0 * path_exponent * std::log10(std::max(d, 0.1)) - loss;
}

void SimConfig::validate() const {
  if (!(window > 0) || !(dwell >= 0) || !(walk_speed > 0) || !(tick > 0) || !(rssi_sigma > 0)) {
    throw InvalidInput("simulation config: window, tick, walk speed and rssi sigma must be positive");
  }
  if (std::isnan(decode_threshold)) throw InvalidInput("simulation config: decode threshold is NaN");
}

Trajectory generate_trajectory(const Layout& layout, const std::vector<Point>& waypoints, const SimConfig& config) {
  config.validate();
  if (waypoints.empty()) throw InvalidInput("generate_trajectory: no waypoints");
  for (const auto& p : waypoints) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !layout.contains(p)) {
      throw OutOfBounds("generate_trajectory: waypoint outside the floorplan");
    }
  }

  // Piecewise schedule: dwell at waypoint k, then walk to k + 1.
  struct Leg {
    double t0, t1;
    Point a, b;
    double speed;
  };
  std::vector<Leg> legs;
  double t = config.start_time;
  for (std::size_t k = 0; k < waypoints.size(); ++k) {
    if (config.dwell > 0) {
      legs.push_back({t, t + config.dwell, waypoints[k], waypoints[k], 0.0});
      t += config.dwell;
    }
    if (k + 1 < waypoints.size()) {
      const double len = distance(waypoints[k], waypoints[k + 1]);
      if (len > 0) {
        const double dt = len / config.walk_speed;
        legs.push_back({t, t + dt, waypoints[k], waypoints[k + 1], config.walk_speed});
        t += dt;
      }
    }
  }
  const double total = t - config.start_time;

  Trajectory traj;
  const auto n_ticks = static_cast<std::size_t>(std::floor(total / config.tick + 1e-9));
  traj.samples.reserve(n_ticks + 1);
  std::size_t leg = 0;
  for (std::size_t k = 0; k <= n_ticks; ++k) {
    const double tk = config.start_time + static_cast<double>(k) * config.tick;
    while (leg + 1 < legs.size() && tk >= legs[leg].t1 - 1e-12) ++leg;
    if (legs.empty()) {
      traj.samples.push_back({tk, waypoints.front(), 0.0});
      continue;
    }
    const Leg& L = legs[leg];
    const double span = L.t1 - L.t0;
    const double f = span > 0 ? std::clamp((tk - L.t0) / span, 0.0, 1.0) : 1.0;
    const Point p{L.a.x + f * (L.b.x - L.a.x), L.a.y + f * (L.b.y - L.a.y)};
    traj.samples.push_back({tk, p, L.speed});
  }
  return traj;
}

std::vector<Point> window_mean_positions(const Trajectory& traj, const SimConfig& config) {
  std::vector<Point> out;
  const std::size_t n = complete_windows(traj, config.window);
  const double t0 = traj.samples.empty() ? 0.0 : traj.samples.front().t;
  for (std::size_t w = 0; w < n; ++w) {
    const auto [lo, hi] = tick_range(traj, t0 + static_cast<double>(w) * config.window,
                                     t0 + static_cast<double>(w + 1) * config.window);
    Point m{0, 0};
    for (std::size_t i = lo; i < hi; ++i) {
      m.x += traj.samples[i].position.x;
      m.y += traj.samples[i].position.y;
    }
    const double k = static_cast<double>(std::max<std::size_t>(1, hi - lo));
    out.push_back({m.x / k, m.y / k});
  }
  return out;
}

std::vector<ObservationWindow> simulate_packets(const Layout& layout, const PrpModel& truth, const Trajectory& traj,
                                                const SimConfig& config, std::string_view receiver_id) {
  config.validate();
  if (traj.samples.empty()) throw InvalidInput("simulate_packets: empty trajectory");
  const std::size_t n_windows = complete_windows(traj, config.window);
  const double t0 = traj.samples.front().t;
  const std::uint64_t rx_hash = hash_string(receiver_id);
  const bool truncate = std::isfinite(config.decode_threshold);

  std::vector<ObservationWindow> out;
  out.reserve(n_windows);
  std::vector<double> mu_tick;
  for (std::size_t w = 0; w < n_windows; ++w) {
    const double ws = t0 + static_cast<double>(w) * config.window;
    const double we = ws + config.window;
    const auto [lo, hi] = tick_range(traj, ws, we);
    if (hi <= lo) throw InvalidInput("simulate_packets: window without trajectory samples");

    ObservationWindow win;
    win.receiver_id = std::string(receiver_id);
    win.window_start = ws;
    win.window_end = we;
    win.records.reserve(layout.beacons().size());
    for (const auto& b : layout.beacons()) {
      double g_sum = 0.0;
      mu_tick.clear();
      for (std::size_t i = lo; i < hi; ++i) {
        const Point p = traj.samples[i].position;
        const GeometricElement e = classify_element(layout, b.position, p);
        const double d = distance(b.position, p);
        g_sum += truth.g(e, d, b.rate_hz, b.power_dbm);
        mu_tick.push_back(config.rssi.mean(e, d, b.power_dbm));
      }
      const double g_bar = g_sum / static_cast<double>(hi - lo);
      const std::int64_t n = packets_sent(b.rate_hz, config.window);
      SplitMix64 rng(derive_seed(config.seed, "packets", {rx_hash, hash_string(b.id), w}));
      const double phase = rng.uniform();
      const double spacing = config.window / static_cast<double>(n);

      BeaconRecord rec;
      rec.beacon_id = b.id;
      double rssi_sum = 0.0;
      for (std::int64_t k = 0; k < n; ++k) {
        if (!rng.bernoulli(g_bar)) continue;
        const double tk = ws + (static_cast<double>(k) + phase) * spacing;
        if (!rec.t_first) rec.t_first = tk;
        rec.t_last = tk;
        ++rec.packets_received;
        auto idx = static_cast<std::size_t>((tk - ws) / config.tick);
        idx = std::min(idx, mu_tick.size() - 1);
        const double mu = mu_tick[idx];
        rssi_sum += truncate ? sample_truncated_normal(rng, mu, config.rssi_sigma, config.decode_threshold)
                             : mu + config.rssi_sigma * rng.normal();
      }
      if (rec.packets_received > 0) rec.mean_rssi = rssi_sum / static_cast<double>(rec.packets_received);
      win.records.push_back(std::move(rec));
    }
    out.push_back(std::move(win));
  }
  return out;
}

double sample_truncated_normal(SplitMix64& rng, double mu, double sigma, double lower) {
  const double a = (lower - mu) / sigma;
  if (a < 0.45) {
    for (;;) {
      const double z = rng.normal();
      if (z >= a) return mu + sigma * z;
    }
  }
  // Exponential-proposal rejection for the far tail.
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.uniform_open_zero()) / lambda;
    const double r = z - lambda;
    if (std::log(rng.uniform_open_zero()) <= -0.5 * r * r) return mu + sigma * z;
  }
}

TruncatedDraws simulate_truncated_rssi(const TruncatedRssiModel& model, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("simulate_truncated_rssi: n must be >= 1");
  if (!(model.sigma > 0)) throw InvalidInput("simulate_truncated_rssi: sigma must be > 0");
  SplitMix64 rng(derive_seed(seed, "truncated-rssi"));
  TruncatedDraws out;
  out.kept.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = model.mu + model.sigma * rng.normal();
    if (x < model.threshold) {
      ++out.drop_count;
    } else {
      out.kept.push_back(x);
    }
  }
  return out;
}

}  // namespace bprp
