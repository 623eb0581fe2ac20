#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bprp/errors.hpp"
#include "bprp/experiment.hpp"
#include "bprp/presets.hpp"
#include "bprp/train.hpp"

using namespace bprp;

namespace {

McmcConfig quick(std::uint64_t seed) {
  McmcConfig c;
  c.burn_in = 2000;
  c.draws = 4000;
  c.chains = 2;
  c.seed = seed;
  c.parallel = false;
  return c;
}

TrainingDataset stationary_data(const Layout& layout, const std::vector<Point>& spots, std::uint64_t seed,
                                double seconds = 60.0) {
  TrainingDataset d{layout, {}, {}};
  SimConfig sim;
  sim.seed = seed;
  for (std::size_t k = 0; k < spots.size(); ++k) {
    const std::string id = "t" + std::to_string(k);
    const auto ws = simulate_stationary(layout, truth_model(), id, spots[k], seconds, sim);
    d.windows.insert(d.windows.end(), ws.begin(), ws.end());
    d.receiver_locations[id] = spots[k];
  }
  return d;
}

double mean_sd(const TrainResult& r) {
  double s = 0;
  int n = 0;
  for (const auto& e : r.coefficient_sd) {
    for (const double v : e) {
      s += v;
      ++n;
    }
  }
  return s / n;
}

}  // namespace

TEST(TrainVector, RoundTripAndNames) {
  LinkParams p;
  p.element = GeometricElement::TwoStack;
  p.w0 = 1;
  p.w = {2, 3, 4};
  p.w_pair = {5, 6, 7, 8, 9, 10};
  const auto v = to_vector(p);
  EXPECT_EQ(v[0], 1);
  EXPECT_EQ(v[4], 5);
  const auto q = from_vector(GeometricElement::TwoStack, v);
  EXPECT_EQ(q.w0, p.w0);
  EXPECT_EQ(q.w, p.w);
  EXPECT_EQ(q.w_pair, p.w_pair);
  EXPECT_NE(coefficient_name(GeometricElement::FreeSpace, 0), coefficient_name(GeometricElement::Corridor, 0));
}

TEST(Train, RecoversCoefficientsWithinThreeSd) {
  const auto pre = library_preset();
  const PrpModel truth = truth_model();
  auto data = stationary_data(pre.layout, pre.training_spots, 11);
  TrainOptions o;
  o.mcmc = quick(5);
  o.standardization = truth.standardization;
  const auto r = train(data, o);
  EXPECT_TRUE(r.untrained.empty());
  for (const auto e : kAllElements) {
    const auto est = to_vector(r.model.link(e));
    const auto tru = to_vector(truth.link(e));
    for (std::size_t k = 0; k < 10; ++k) {
      const double sd = r.coefficient_sd[index_of(e)][k];
      EXPECT_LE(std::abs(est[k] - tru[k]), 3.0 * sd + 1e-9) << coefficient_name(e, k);
    }
  }
  // Curves agree where the data lives.
  double mae = 0;
  int n = 0;
  for (const auto e : kAllElements) {
    for (double d = 0.5; d <= 10.0; d += 0.5) {
      mae += std::abs(r.model.g(e, d, 10, -15) - truth.g(e, d, 10, -15));
      ++n;
    }
  }
  EXPECT_LT(mae / n, 0.05);
}

TEST(Train, UncoveredElementIsFlagged) {
  // No corridors and no stacks: only free space is ever observed.
  std::vector<Beacon> beacons;
  for (int i = 0; i < 4; ++i) beacons.push_back(Beacon{"b" + std::to_string(i), {1.0 + 2.5 * i, 1.0}, 10, -15, true});
  const Layout open(10, 6, {}, {}, beacons);
  auto data = stationary_data(open, {{2, 3}, {5, 4}, {8, 2}}, 2);
  TrainOptions o;
  o.mcmc = quick(1);
  o.mcmc.burn_in = 500;
  o.mcmc.draws = 1000;
  const auto r = train(data, o);
  EXPECT_EQ(r.untrained.size(), 3u);
  EXPECT_TRUE(std::find(r.untrained.begin(), r.untrained.end(), GeometricElement::Corridor) != r.untrained.end());
  EXPECT_FALSE(r.warnings.empty());
  // Untrained elements stay at the prior centre.
  EXPECT_EQ(r.model.link(GeometricElement::Corridor).w0, 0.0);
}

TEST(Train, GaugeFixingAndMinimumBeacons) {
  const auto pre = library_preset();
  auto data = stationary_data(pre.layout, {pre.training_spots[0], pre.training_spots[4]}, 3, 10);
  std::vector<Beacon> hidden = pre.layout.beacons();
  for (auto& b : hidden) b.position_known = false;
  data.layout = pre.layout.with_beacons(hidden);
  for (auto& [id, p] : data.receiver_locations) p = std::nullopt;
  TrainOptions o;
  o.mcmc = quick(1);
  EXPECT_THROW(train(data, o), InvalidInput);

  const Layout two(10, 6, {}, {}, {Beacon{"a", {1, 1}, 10, -15, true}, Beacon{"b", {9, 1}, 10, -15, true}});
  EXPECT_THROW(train(stationary_data(two, {{5, 3}}, 1, 10), o), InvalidInput);
}

TEST(Train, RecoversHiddenBeacons) {
  const auto pre = library_preset();
  auto data = stationary_data(pre.layout, pre.training_spots, 21);
  const Layout known6 = beacon_subset(pre.layout, 6);
  std::vector<Beacon> beacons = pre.layout.beacons();
  for (auto& b : beacons) {
    if (!known6.beacon_index(b.id)) {
      b.position_known = false;
      b.position = pre.layout.centroid();
    }
  }
  data.layout = pre.layout.with_beacons(beacons);
  TrainOptions o;
  o.mcmc = quick(8);
  const auto r = train(data, o);
  EXPECT_EQ(r.recovered_beacons.size(), 54u);
  std::vector<double> err;
  for (const auto& [id, est] : r.recovered_beacons) err.push_back(distance(est.mean, pre.layout.beacon(id).position));
  std::sort(err.begin(), err.end());
  EXPECT_LT(err[err.size() / 2], 0.5);

  const Layout rec = recovered_layout(data.layout, r);
  for (const auto& b : rec.beacons()) EXPECT_TRUE(b.position_known);
  const std::string id = pre.layout.beacons()[5].id;
  EXPECT_EQ(rec.beacon(id).position, r.recovered_beacons.at(id).mean);
}

TEST(Train, RecoversUnlabeledReceiver) {
  const auto pre = library_preset();
  auto data = stationary_data(pre.layout, pre.training_spots, 21);
  data.receiver_locations["t11"] = std::nullopt;
  data.receiver_locations.erase("t10");  // absent from the map is unknown too
  TrainOptions o;
  o.mcmc = quick(8);
  const auto r = train(data, o);
  ASSERT_EQ(r.recovered_locations.size(), 2u);
  EXPECT_LT(distance(r.recovered_locations.at("t11").mean, pre.training_spots[11]), 0.5);
  EXPECT_LT(distance(r.recovered_locations.at("t10").mean, pre.training_spots[10]), 0.5);
  EXPECT_TRUE(r.recovered_beacons.empty());
}

TEST(Train, MoreDataDoesNotWidenPosterior) {
  const auto pre = library_preset();
  const std::vector<Point> spots(pre.training_spots.begin(), pre.training_spots.begin() + 8);
  TrainOptions o;
  o.mcmc = quick(4);
  o.standardization = truth_model().standardization;
  const auto one = train(stationary_data(pre.layout, spots, 31, 60), o);
  const auto two = train(stationary_data(pre.layout, spots, 31, 120), o);
  EXPECT_LE(mean_sd(two), 1.1 * mean_sd(one));
}

TEST(Train, RejectsInconsistentData) {
  const auto pre = library_preset();
  auto data = stationary_data(pre.layout, {pre.training_spots[0]}, 1, 10);
  data.windows[0].records.push_back({"ghost", 0, std::nullopt, std::nullopt, std::nullopt});
  TrainOptions o;
  o.mcmc = quick(1);
  EXPECT_THROW(train(data, o), DataConsistency);
}
