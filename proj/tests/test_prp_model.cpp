#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "bprp/errors.hpp"
#include "bprp/prp_model.hpp"
#include "bprp/rng.hpp"

using namespace bprp;

namespace {

// Oracle: pmf by direct product, no log-gamma.
double brute_pmf(int n, int k, double p) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

// Oracle: truncated normal mean by Simpson integration of x f(x) / P(X >= a).
double simpson_truncated_mean(double mu, double sigma, double a) {
  const double hi = std::max(a, mu) + 14.0 * sigma;
  const int n = 200000;
  const double h = (hi - a) / n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = a + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double f = std::exp(-0.5 * ((x - mu) / sigma) * ((x - mu) / sigma));
    num += w * x * f;
    den += w * f;
  }
  return num / den;
}

ObservationWindow window_with(std::int64_t c, double tf, double tl) {
  ObservationWindow w{"rx", 0.0, 10.0, {{"b", c, tf, tl, -70.0}}};
  return w;
}

}  // namespace

TEST(EstimatePrp, Examples) {
  EXPECT_DOUBLE_EQ(estimate_prp(window_with(85, 0.0, 10.0), "b", 10.0), 0.85);
  EXPECT_DOUBLE_EQ(estimate_prp(window_with(100, 0.0, 10.0), "b", 10.0), 1.0);
  // Jitter above 1 is clamped.
  EXPECT_DOUBLE_EQ(estimate_prp(window_with(100, 0.0, 9.9), "b", 10.0), 1.0);
}

TEST(EstimatePrp, InsufficientData) {
  EXPECT_THROW(estimate_prp(window_with(1, 3.0, 3.0), "b", 10.0), InsufficientData);
  ObservationWindow empty{"rx", 0.0, 10.0, {{"b", 0, std::nullopt, std::nullopt, std::nullopt}}};
  EXPECT_THROW(estimate_prp(empty, "b", 10.0), InsufficientData);
  EXPECT_THROW(estimate_prp(window_with(5, 0.0, 1.0), "missing", 10.0), InsufficientData);
}

TEST(EstimatePrp, ConvergesToTrueProbability) {
  // Bernoulli trials on a 1/R grid, as the simulator places them.
  const double rate = 10.0, p = 0.37;
  const int n_trials = 600;
  SplitMix64 r(4);
  for (int rep = 0; rep < 20; ++rep) {
    std::int64_t c = 0;
    double tf = -1, tl = -1;
    for (int i = 0; i < n_trials; ++i) {
      if (r.bernoulli(p)) {
        ++c;
        if (tf < 0) tf = i / rate;
        tl = i / rate;
      }
    }
    ObservationWindow w{"rx", 0.0, 60.0, {{"b", c, tf, tl, -80.0}}};
    const double est = estimate_prp(w, "b", rate);
    EXPECT_LE(std::abs(est - p), 3.0 * std::sqrt(p * (1 - p) / n_trials) + 0.01);
  }
}

TEST(Window, ValidateInvariants) {
  EXPECT_NO_THROW(window_with(5, 1.0, 2.0).validate());
  EXPECT_THROW(window_with(5, 3.0, 2.0).validate(), InvalidInput);
  EXPECT_THROW(window_with(5, -1.0, 2.0).validate(), InvalidInput);
  EXPECT_THROW(window_with(-1, 1.0, 2.0).validate(), InvalidInput);
  ObservationWindow no_rssi{"rx", 0, 10, {{"b", 3, 1.0, 2.0, std::nullopt}}};
  EXPECT_THROW(no_rssi.validate(), InvalidInput);
  ObservationWindow zero_with_rssi{"rx", 0, 10, {{"b", 0, std::nullopt, std::nullopt, -80.0}}};
  EXPECT_THROW(zero_with_rssi.validate(), InvalidInput);
}

TEST(LinkG, Examples) {
  LinkParams p;
  EXPECT_DOUBLE_EQ(link_g(p, 3.0, 10.0, -15.0), 0.5);
  p.w0 = std::log(9.0);
  EXPECT_NEAR(link_g(p, 3.0, 10.0, -15.0), 0.9, 1e-12);
  LinkParams dec;
  dec.w0 = 2.0;
  dec.w[0] = -0.7;
  double prev = 1.0;
  for (double d = 0.0; d <= 20.0; d += 0.25) {
    const double g = link_g(dec, d, 10.0, -15.0);
    EXPECT_LT(g, prev);
    prev = g;
  }
}

TEST(LinkG, StrictlyInsideUnitIntervalProperty) {
  SplitMix64 r(17);
  for (int i = 0; i < 5000; ++i) {
    LinkParams p;
    p.w0 = r.uniform(-20, 20);
    for (auto& w : p.w) w = r.uniform(-5, 5);
    for (auto& w : p.w_pair) w = r.uniform(-1, 1);
    const double g = link_g(p, r.uniform(0, 15), r.uniform(1, 20), r.uniform(-30, 0));
    EXPECT_GT(g, 0.0);
    EXPECT_LT(g, 1.0);
  }
}

TEST(LinkG, QuadraticTermsUseStandardizedInputs) {
  LinkParams p;
  p.w0 = 0.3;
  p.w = {0.5, -0.2, 0.1};
  p.w_pair = {0.05, 0.01, -0.02, 0.03, 0.04, -0.01};
  Standardization s;
  s.mean = {4.0, 10.0, -15.0};
  s.sd = {2.0, 1.0, 3.0};
  const double d = 5.0, rate = 11.0, power = -12.0;
  const double z[3] = {(d - 4.0) / 2.0, (rate - 10.0) / 1.0, (power + 15.0) / 3.0};
  double eta = p.w0;
  for (int i = 0; i < 3; ++i) eta += p.w[i] * z[i];
  for (int k = 0; k < 6; ++k) eta += p.w_pair[k] * z[kPairIndex[k][0]] * z[kPairIndex[k][1]];
  EXPECT_NEAR(link_logit(p, d, rate, power, s), eta, 1e-12);
}

TEST(CountLikelihood, MatchesBruteForcePmf) {
  for (int n = 1; n <= 20; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (const double eta : {-3.0, -0.4, 0.0, 1.1, 4.0}) {
        const double p = 1.0 / (1.0 + std::exp(-eta));
        const double oracle = std::log(brute_pmf(n, c, p));
        const double got = binomial_logit_log_likelihood(c, n, eta);
        EXPECT_NEAR(got, oracle, 1e-10 * std::abs(oracle) + 1e-13) << n << " " << c << " " << eta;
      }
    }
  }
}

TEST(CountLikelihood, Examples) {
  LinkParams half;
  EXPECT_NEAR(count_log_likelihood(half, 5, 10, 2.0, 10, -15), std::log(0.24609375), 1e-12);
  LinkParams sure;
  sure.w0 = 40.0;
  const double ll = count_log_likelihood(sure, 10, 10, 2.0, 10, -15);
  EXPECT_LE(ll, 0.0);
  EXPECT_GT(ll, -1e-15);
  LinkParams p;
  p.w0 = -0.8;
  const double g = link_g(p, 1, 10, -15);
  EXPECT_NEAR(count_log_likelihood(p, 0, 37, 1, 10, -15), 37 * std::log(1 - g), 1e-10);
  EXPECT_THROW(count_log_likelihood(p, 11, 10, 1, 10, -15), InvalidInput);
  EXPECT_THROW(count_log_likelihood(p, 1, 0, 1, 10, -15), InvalidInput);
}

TEST(CountLikelihood, FiniteAtExtremeLogits) {
  EXPECT_TRUE(std::isfinite(binomial_logit_log_likelihood(0, 100, 800.0)));
  EXPECT_TRUE(std::isfinite(binomial_logit_log_likelihood(100, 100, -800.0)));
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
}

TEST(PacketsSent, Examples) {
  EXPECT_EQ(packets_sent(10, 60), 600);
  EXPECT_EQ(packets_sent(10, 10), 100);
  EXPECT_EQ(packets_sent(1, 0.4), 1);
}

TEST(TruncatedMean, Examples) {
  EXPECT_NEAR(truncated_rssi_mean({-80, 4, -1e6}), -80.0, 1e-9);
  EXPECT_NEAR(truncated_rssi_mean({-90, 5, -90}), -86.0106, 1e-4);
  EXPECT_NEAR(truncated_rssi_mean({-90, 5, -90}), simpson_truncated_mean(-90, 5, -90), 1e-6);
}

TEST(TruncatedMean, AgreesWithIntegrationOracle) {
  for (const double z : {-3.0, -1.5, 0.0, 1.0, 2.0, 4.0}) {
    const double mu = -80.0, sigma = 6.0, alpha = mu + z * sigma;
    EXPECT_NEAR(truncated_rssi_mean({mu, sigma, alpha}), simpson_truncated_mean(mu, sigma, alpha), 1e-5) << z;
  }
}

TEST(TruncatedMean, BiasGrowsAsMeanApproachesThreshold) {
  double prev_bias = 0.0;
  for (double mu = -60.0; mu >= -100.0; mu -= 2.0) {
    const double m = truncated_rssi_mean({mu, 5.0, -95.0});
    EXPECT_GT(m, mu);
    const double bias = m - mu;
    EXPECT_GT(bias, prev_bias);
    prev_bias = bias;
  }
}

TEST(TruncatedMean, Errors) {
  EXPECT_THROW(truncated_rssi_mean({-80, 0.0, -90}), InvalidInput);
  EXPECT_THROW(truncated_rssi_mean({-80, 1.0, 1000}), Saturation);
}

TEST(Standardization, FitAndDegenerateSpread) {
  const auto s = Standardization::fit({{1, 10, -15}, {3, 10, -15}});
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_GT(s.sd[0], 0.0);
  EXPECT_DOUBLE_EQ(s.sd[1], 1.0);
  EXPECT_DOUBLE_EQ(s.sd[2], 1.0);
  const auto z = s.apply(2.0, 10, -15);
  EXPECT_DOUBLE_EQ(z[0], 0.0);
}
