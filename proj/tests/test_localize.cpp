#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bprp/errors.hpp"
#include "bprp/experiment.hpp"
#include "bprp/localize.hpp"
#include "bprp/presets.hpp"
#include "bprp/simulator.hpp"

using namespace bprp;

namespace {

// Plain distance-decay model: identity standardization, no interactions.
PrpModel decay_model() {
  PrpModel m;
  for (auto& l : m.links) {
    l.w0 = 3.0;
    l.w[0] = -0.8;
  }
  return m;
}

BeaconRecord record(const std::string& id, std::int64_t c) {
  if (c == 0) return {id, 0, std::nullopt, std::nullopt, std::nullopt};
  return {id, c, 0.05, 9.95, -70.0};
}

Beacon beacon(std::string id, Point p) { return Beacon{std::move(id), p, 10.0, -15.0, true}; }

LocalizeOptions small(std::uint64_t seed) {
  LocalizeOptions o;
  o.mcmc = fast_mcmc_config(seed);
  return o;
}

// Oracle: exhaustive 0.1 m lattice over the floor.
Point lattice_map(const LocalizationDensity& f, const Layout& L) {
  Point best{0, 0};
  double best_v = -1e300;
  for (double x = 0.0; x <= L.width() + 1e-9; x += 0.1) {
    for (double y = 0.0; y <= L.length() + 1e-9; y += 0.1) {
      const double v = f({x, y});
      if (v > best_v) {
        best_v = v;
        best = {x, y};
      }
    }
  }
  return best;
}

}  // namespace

TEST(Localize, MapAgreesWithLatticeOracle) {
  const auto pre = library_preset();
  const PrpModel truth = truth_model();
  SimConfig sim;
  sim.seed = 4;
  // Receiver on top of a beacon, then a couple of aisle positions.
  for (const Point p : {pre.layout.beacons()[12].position, Point{6.3, 3.4}, Point{10.2, 1.0}}) {
    const auto w = simulate_stationary(pre.layout, truth, "rx", p, 10, sim)[0];
    const LocalizationDensity f(pre.layout, truth, w);
    const auto post = localize(w, truth, pre.layout, small(9));
    const Point oracle = lattice_map(f, pre.layout);
    EXPECT_LE(distance(post.map, oracle), 0.2) << p.x << "," << p.y;
    EXPECT_LE(distance(post.map, p), 1.0);
  }
}

TEST(Localize, SymmetricSceneGivesOnAxisMean) {
  const Layout room(10, 6, {}, {}, {beacon("w", {2, 3}), beacon("e", {8, 3})});
  // Strong counts put each ring well short of the midpoint: one mode, on the axis.
  ObservationWindow w{"rx", 0, 10, {record("w", 90), record("e", 90)}};
  auto o = small(3);
  o.mcmc.draws = 8000;
  o.mcmc.chains = 4;
  const auto post = localize(w, decay_model(), room, o);
  EXPECT_NEAR(post.mean.x, 5.0, 0.15);
  EXPECT_NEAR(post.mean.y, 3.0, 0.15);
}

TEST(Localize, ZeroCountBeaconRepelsMass) {
  const Layout with(10, 10, {}, {}, {beacon("near", {5, 5}), beacon("far", {9, 9})});
  const Layout without = with.with_beacons({beacon("near", {5, 5})});
  const ObservationWindow w_with{"rx", 0, 10, {record("near", 30), record("far", 0)}};
  const ObservationWindow w_without{"rx", 0, 10, {record("near", 30)}};
  const auto a = localize(w_with, decay_model(), with, small(1));
  const auto b = localize(w_without, decay_model(), without, small(1));
  const auto mean_dist = [](const LocationPosterior& p) {
    double s = 0;
    for (std::size_t r = 0; r < p.samples.n_draws(); ++r) s += distance({p.samples.at(r, 0), p.samples.at(r, 1)}, {9, 9});
    return s / static_cast<double>(p.samples.n_draws());
  };
  EXPECT_GT(mean_dist(a), mean_dist(b));
}

TEST(Localize, MissingRecordsCountAsZero) {
  const Layout room(10, 10, {}, {}, {beacon("near", {5, 5}), beacon("far", {9, 9})});
  const LocalizationDensity explicit_zero(room, decay_model(), {"rx", 0, 10, {record("near", 30), record("far", 0)}});
  const LocalizationDensity absent(room, decay_model(), {"rx", 0, 10, {record("near", 30)}});
  for (const Point p : {Point{1, 1}, Point{5, 6}, Point{8.5, 8.5}}) EXPECT_EQ(explicit_zero(p), absent(p));
}

TEST(Localize, RecordOrderDoesNotMatter) {
  const auto pre = library_preset();
  SimConfig sim;
  sim.seed = 2;
  auto w = simulate_stationary(pre.layout, truth_model(), "rx", {7, 1}, 10, sim)[0];
  const LocalizationDensity f(pre.layout, truth_model(), w);
  std::reverse(w.records.begin(), w.records.end());
  std::rotate(w.records.begin(), w.records.begin() + 17, w.records.end());
  const LocalizationDensity g(pre.layout, truth_model(), w);
  for (const Point p : {Point{0.3, 0.2}, Point{7, 1}, Point{12.9, 7.7}, Point{4.4, 4.6}}) EXPECT_EQ(f(p), g(p));
}

TEST(Localize, InvariantUnderRotationOfSquareLayout) {
  // 90 degrees about the centre of a 10 x 10 room: (x, y) -> (10 - y, x).
  const auto rot = [](Point p) { return Point{10.0 - p.y, p.x}; };
  const std::vector<Point> pos{{1, 2}, {7, 3}, {4, 8}};
  std::vector<Beacon> a, b;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    a.push_back(beacon("b" + std::to_string(i), pos[i]));
    b.push_back(beacon("b" + std::to_string(i), rot(pos[i])));
  }
  const Layout la(10, 10, {}, {}, a), lb(10, 10, {}, {}, b);
  const ObservationWindow w{"rx", 0, 10, {record("b0", 70), record("b1", 20), record("b2", 0)}};
  const LocalizationDensity fa(la, decay_model(), w), fb(lb, decay_model(), w);
  for (const Point p : {Point{2, 2}, Point{5, 5}, Point{9.5, 0.5}, Point{3.3, 7.1}}) {
    EXPECT_NEAR(fa(p), fb(rot(p)), 1e-9);
  }
}

TEST(Localize, OutsideFloorHasNoMass) {
  const auto pre = library_preset();
  const LocalizationDensity f(pre.layout, truth_model(), {"rx", 0, 10, {record("L0", 10)}});
  EXPECT_EQ(f({-0.1, 1}), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(f({1, 8.1}), -std::numeric_limits<double>::infinity());
}

TEST(Localize, AllZeroCountsFlagLowInformation) {
  const Layout room(10, 10, {}, {}, {beacon("a", {1, 1}), beacon("b", {9, 9})});
  const auto post = localize({"rx", 0, 10, {record("a", 0), record("b", 0)}}, decay_model(), room, small(2));
  EXPECT_TRUE(post.low_information);
  const auto ok = localize({"rx", 0, 10, {record("a", 50), record("b", 0)}}, decay_model(), room, small(2));
  EXPECT_FALSE(ok.low_information);
}

TEST(Localize, Errors) {
  const Layout room(10, 10, {}, {}, {beacon("a", {1, 1})});
  EXPECT_THROW(localize({"rx", 0, 10, {}}, decay_model(), room, small(1)), InvalidInput);
  EXPECT_THROW(localize({"rx", 0, 10, {record("ghost", 5)}}, decay_model(), room, small(1)), DataConsistency);
}

TEST(Localize, ElementsAtMapMatchGeometry) {
  const auto pre = library_preset();
  SimConfig sim;
  sim.seed = 6;
  const auto w = simulate_stationary(pre.layout, truth_model(), "rx", {5, 4.6}, 10, sim)[0];
  const auto post = localize(w, truth_model(), pre.layout, small(6));
  EXPECT_EQ(post.elements_at_map, element_map(pre.layout, post.map));
  EXPECT_GT(post.sd.x, 0.0);
  EXPECT_GT(post.sd.y, 0.0);
}

TEST(Localize, DeterministicPerSeed) {
  const auto pre = library_preset();
  SimConfig sim;
  const auto w = simulate_stationary(pre.layout, truth_model(), "rx", {9, 6.5}, 10, sim)[0];
  const auto a = localize(w, truth_model(), pre.layout, small(5));
  const auto b = localize(w, truth_model(), pre.layout, small(5));
  EXPECT_EQ(a.samples.draws, b.samples.draws);
}
