#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bprp/contact_tracing.hpp"
#include "bprp/errors.hpp"
#include "bprp/experiment.hpp"
#include "bprp/presets.hpp"
#include "bprp/stats.hpp"

using namespace bprp;

namespace {

// Independent log-sigmoid for the oracle.
double oracle_log_sig(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double oracle_potential(double a, double b, double c, double s) {
  return oracle_log_sig(s * (a + b - c)) + oracle_log_sig(s * (a + c - b)) + oracle_log_sig(s * (b + c - a));
}

PosteriorSamples table(const std::vector<std::vector<double>>& rows) {
  PosteriorSamples s;
  s.n_params = rows.front().size();
  for (std::size_t k = 0; k < s.n_params; ++k) s.names.push_back("d" + std::to_string(k));
  for (const auto& r : rows) {
    s.draws.insert(s.draws.end(), r.begin(), r.end());
    s.log_density.push_back(0.0);
  }
  s.chain_count = 1;
  return s;
}

// Stage-1 stand-in: exact receiver-beacon distances plus a little jitter.
BeaconDistancePosteriors synthetic_stage1(const Layout& layout, const std::vector<std::string>& ids, Point a, Point b,
                                          double jitter, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<double>> ra, rb;
  for (int r = 0; r < 300; ++r) {
    std::vector<double> xa, xb;
    for (const auto& id : ids) {
      const Point p = layout.beacon(id).position;
      xa.push_back(std::max(0.0, distance(a, p) + jitter * rng.normal()));
      xb.push_back(std::max(0.0, distance(b, p) + jitter * rng.normal()));
    }
    ra.push_back(xa);
    rb.push_back(xb);
  }
  return {table(ra), table(rb), {}};
}

ObservationWindow window_at(const Layout& layout, const std::string& id, Point p, std::uint64_t seed) {
  SimConfig sim;
  sim.seed = seed;
  return simulate_stationary(layout, truth_model(), id, p, 10, sim)[0];
}

ContactOptions quick() {
  ContactOptions o;
  o.mcmc = fast_mcmc_config(3);
  o.localize.mcmc = fast_mcmc_config(4);
  return o;
}

}  // namespace

TEST(TrianglePotential, Examples) {
  EXPECT_GE(triangle_log_potential(3, 4, 5, 10), -0.01);
  EXPECT_LE(triangle_log_potential(1, 1, 5, 10), -20.0);
  EXPECT_NEAR(triangle_log_potential(2, 3, 5, 10), std::log(0.5) + oracle_log_sig(40) + oracle_log_sig(60), 1e-12);
  for (const double a : {0.3, 1.7, 4.0}) {
    for (const double c : {0.1, 2.2, 6.5}) {
      EXPECT_NEAR(triangle_log_potential(a, 2.0, c, 7.0), oracle_potential(a, 2.0, c, 7.0), 1e-12);
    }
  }
}

TEST(TrianglePotential, PermutationSymmetry) {
  std::array<double, 3> e{1.3, 2.9, 3.7};
  const double ref = triangle_log_potential(e[0], e[1], e[2], 5);
  std::sort(e.begin(), e.end());
  do {
    EXPECT_NEAR(triangle_log_potential(e[0], e[1], e[2], 5), ref, 1e-12);
  } while (std::next_permutation(e.begin(), e.end()));
}

TEST(TrianglePotential, HardLimit) {
  EXPECT_GT(triangle_log_potential(3, 4, 5, 1e3), -1e-12);
  EXPECT_LT(triangle_log_potential(1, 1, 2.5, 1e3), -400.0);
  EXPECT_TRUE(std::isfinite(triangle_log_potential(1, 1, 100, 1e3)));
}

TEST(TrianglePotential, Errors) {
  EXPECT_THROW(triangle_log_potential(-1, 2, 2, 10), InvalidInput);
  EXPECT_THROW(triangle_log_potential(1, 2, 2, 0), InvalidInput);
  EXPECT_THROW(triangle_log_potential(1, std::nan(""), 2, 10), InvalidInput);
}

TEST(PairQuery, RanksByCombinedCount) {
  const Layout room(10, 10, {}, {},
                    {Beacon{"a", {1, 1}, 10, -15, true}, Beacon{"b", {9, 1}, 10, -15, true},
                     Beacon{"c", {5, 9}, 10, -15, true}, Beacon{"d", {5, 5}, 10, -15, true}});
  const auto rec = [](const std::string& id, std::int64_t c) {
    return c == 0 ? BeaconRecord{id, 0, std::nullopt, std::nullopt, std::nullopt} : BeaconRecord{id, c, 0.1, 9.9, -80.0};
  };
  const ObservationWindow wa{"A", 0, 10, {rec("a", 10), rec("b", 50), rec("c", 30), rec("d", 0)}};
  const ObservationWindow wb{"B", 0, 10, {rec("a", 10), rec("b", 40), rec("c", 30), rec("d", 90)}};
  const auto q = make_pair_query(room, wa, wb, 2);
  EXPECT_EQ(q.beacons, (std::vector<std::string>{"b", "c"}));
  ASSERT_EQ(q.beacon_pairs.size(), 1u);
  EXPECT_NEAR(q.beacon_pairs[0].distance, std::hypot(4, 8), 1e-12);
  EXPECT_EQ(make_pair_query(room, wa, wb).beacons.size(), 3u);

  const ObservationWindow lonely{"C", 0, 10, {rec("a", 0), rec("b", 5), rec("c", 0), rec("d", 0)}};
  EXPECT_THROW(make_pair_query(room, wa, lonely), InsufficientGeometry);

  auto bad = q;
  bad.beacon_pairs[0].distance += 1.0;
  EXPECT_THROW(bad.validate(room), DataConsistency);
}

TEST(Stage2, MapMatchesGridOracle) {
  const auto pre = library_preset();
  const Point a{4.0, 4.6}, b{6.5, 4.6};
  const std::vector<std::string> ids{"L10", "L20", "L30", "L40", "L50", "L5"};
  PairQuery q;
  q.receiver_a = "A";
  q.receiver_b = "B";
  q.beacons = ids;
  const auto stage1 = synthetic_stage1(pre.layout, ids, a, b, 0.1, 1);
  auto opts = quick();
  const auto post = infer_pair_distance(q, stage1, pre.layout, opts);
  EXPECT_EQ(post.method, "triangle");

  const auto rows = stage2_rows(stage1, opts.stage2_draws);
  double best = 0, best_v = -1e300;
  for (double d = 0; d <= pre.layout.diagonal(); d += 0.001) {
    double v = 0;
    for (const auto r : rows) {
      for (std::size_t k = 0; k < ids.size(); ++k) v += oracle_potential(stage1.a.at(r, k), stage1.b.at(r, k), d, 10);
    }
    v /= static_cast<double>(rows.size());
    EXPECT_NEAR(v, pair_distance_log_density(q, stage1, rows, d, 10), 1e-9 * std::max(1.0, std::abs(v)));
    if (v > best_v) {
      best_v = v;
      best = d;
    }
  }
  EXPECT_LE(std::abs(post.map_estimate - best), 0.2);
  EXPECT_GT(post.sd, 0.0);
  EXPECT_GE(*std::min_element(post.draws.begin(), post.draws.end()), 0.0);
}

TEST(Stage2, SwappingReceiversLeavesDensityUnchanged) {
  const auto pre = library_preset();
  const std::vector<std::string> ids{"L1", "L12", "L33"};
  PairQuery q;
  q.beacons = ids;
  const auto s = synthetic_stage1(pre.layout, ids, {2, 1}, {3, 4.6}, 0.2, 2);
  const BeaconDistancePosteriors swapped{s.b, s.a, {}};
  const auto rows = stage2_rows(s, 50);
  EXPECT_EQ(rows.size(), 50u);
  for (const double d : {0.0, 1.0, 3.3, 7.0}) {
    EXPECT_DOUBLE_EQ(pair_distance_log_density(q, s, rows, d, 10), pair_distance_log_density(q, swapped, rows, d, 10));
  }
  EXPECT_EQ(pair_distance_log_density(q, s, rows, -0.1, 10), -std::numeric_limits<double>::infinity());
}

TEST(Stage2, NeedsTwoBeacons) {
  const auto pre = library_preset();
  PairQuery q;
  q.beacons = {"L1"};
  const auto s = synthetic_stage1(pre.layout, q.beacons, {2, 1}, {3, 4.6}, 0.2, 2);
  EXPECT_THROW(infer_pair_distance(q, s, pre.layout, quick()), InsufficientGeometry);
}

TEST(Stage1, SameWindowGivesSamePosterior) {
  const auto pre = library_preset();
  const auto w = window_at(pre.layout, "A", {5, 4.6}, 3);
  auto wb = w;
  wb.receiver_id = "B";
  const auto q = make_pair_query(pre.layout, w, wb);
  auto opts = quick();
  opts.mcmc.draws = 6000;
  const auto s = infer_beacon_distances(q, truth_model(), pre.layout, std::nullopt, std::nullopt, opts);
  ASSERT_EQ(s.a.n_params, q.beacons.size());
  const auto ma = s.a.column_mean(), mb = s.b.column_mean();
  for (std::size_t k = 0; k < ma.size(); ++k) EXPECT_NEAR(ma[k], mb[k], 0.15) << q.beacons[k];
}

TEST(Stage1, TrianglesDoNotWidenPosterior) {
  const auto pre = library_preset();
  const auto wa = window_at(pre.layout, "A", {5, 4.6}, 5);
  const auto wb = window_at(pre.layout, "B", {6, 4.6}, 6);
  const auto q = make_pair_query(pre.layout, wa, wb);
  auto with = quick();
  with.mcmc.draws = 6000;
  auto without = with;
  without.use_triangles = false;
  const auto sw = infer_beacon_distances(q, truth_model(), pre.layout, std::nullopt, std::nullopt, with);
  const auto so = infer_beacon_distances(q, truth_model(), pre.layout, std::nullopt, std::nullopt, without);
  EXPECT_LE(stats::mean(sw.a.column_sd()), stats::mean(so.a.column_sd()) * 1.05);
  EXPECT_LE(stats::mean(sw.b.column_sd()), stats::mean(so.b.column_sd()) * 1.05);
}

TEST(TwoStep, IdenticalWindowsGiveNearZero) {
  const auto pre = library_preset();
  const auto w = window_at(pre.layout, "A", {8, 4.6}, 7);
  auto wb = w;
  wb.receiver_id = "B";
  const auto post = two_step_pair_distance(make_pair_query(pre.layout, w, wb), truth_model(), pre.layout, quick());
  EXPECT_LT(post.map_estimate, 0.2);
  EXPECT_EQ(post.method, "two_step");
}

TEST(EndToEnd, BothMethodsRunOnSimulatedPair) {
  const auto pre = library_preset();
  const Point a{3, 4.6}, b{5, 4.6};
  const auto q = make_pair_query(pre.layout, window_at(pre.layout, "A", a, 8), window_at(pre.layout, "B", b, 9));
  const auto ts = two_step_pair_distance(q, truth_model(), pre.layout, quick());
  EXPECT_NEAR(ts.map_estimate, 2.0, 0.75);
  const auto tr = triangle_pair_distance(q, truth_model(), pre.layout, quick());
  EXPECT_GE(tr.map_estimate, 0.0);
  EXPECT_LE(tr.map_estimate, pre.layout.diagonal());
  EXPECT_EQ(tr.draws.size(), quick().mcmc.draws * quick().mcmc.chains);
}

TEST(Signal, Names) {
  for (const auto s : {Signal::Prp, Signal::Rssi, Signal::Fused}) EXPECT_EQ(signal_from_name(signal_name(s)), s);
  EXPECT_THROW(signal_from_name("sonar"), InvalidInput);
  const auto pre = library_preset();
  const auto q = make_pair_query(pre.layout, window_at(pre.layout, "A", {3, 1}, 1), window_at(pre.layout, "B", {4, 1}, 2));
  auto o = quick();
  o.signal = Signal::Rssi;
  // truth_model() carries no RSSI path model.
  EXPECT_THROW(two_step_pair_distance(q, truth_model(), pre.layout, o), InvalidInput);
}
