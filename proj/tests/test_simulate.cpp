#include <cmath>
#include <set>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "hfgp/simulate.hpp"

using namespace hfgp;

TEST(Sampling, RuleAndGrid) {
  const auto s = SamplingScheme::from_rule(1000, 0.4);
  EXPECT_NEAR(s.h, std::pow(1000.0, -0.4), 1e-15);
  EXPECT_NEAR(s.h, 0.0630957, 1e-7);
  EXPECT_TRUE(s.high_frequency_regime());
  EXPECT_FALSE(SamplingScheme::from_rule(10, 1.0).high_frequency_regime());
  EXPECT_FALSE(SamplingScheme::fixed(10, 0.1).high_frequency_regime());
  const auto g = SamplingScheme::fixed(4, 0.25).grid();
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.back(), 1.0);
  EXPECT_THROW(SamplingScheme::fixed(0, 0.1), ConfigError);
  EXPECT_THROW(SamplingScheme::fixed(5, 0.0), ConfigError);
}

TEST(Seeds, DerivedSeedsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, s, i));
  EXPECT_EQ(seen.size(), 4000u);
  EXPECT_EQ(derive_seed(42, 500, 7), derive_seed(42, 500, 7));
  EXPECT_NE(derive_seed(42, 500, 7), derive_seed(43, 500, 7));
}

TEST(Simulate, SameSeedSamePath) {
  const auto k = KernelModel::gaussian(1, 1);
  const auto s = SamplingScheme::from_rule(300, 0.4);
  const auto a = sample_stationary_gp(k, s, 11);
  const auto b = sample_stationary_gp(k, s, 11);
  const auto c = sample_stationary_gp(k, s, 12);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  EXPECT_EQ(a.method, SimulationMethod::CirculantEmbedding);
  EXPECT_GE(a.embedding_size, 600u);
}

TEST(Simulate, SingleIncrementPath) {
  const auto p = sample_stationary_gp(KernelModel::exponential_ou(1, 1), SamplingScheme::fixed(1, 0.5), 3);
  EXPECT_EQ(p.n(), 1u);
  EXPECT_EQ(p.values.size(), 2u);
}

TEST(Simulate, CirculantGivesUpBelowItsSizeCap) {
  // a smooth kernel on a fine grid needs a padded embedding; the minimal one is refused
  const auto k = KernelModel::gaussian(1, 1);
  const auto s = SamplingScheme::fixed(200, 0.01);
  EXPECT_THROW(CirculantSampler(k, s, 400), SimulationError);
  const CirculantSampler padded(k, s);
  EXPECT_GT(padded.embedding_size(), 400u);
}

TEST(Simulate, CholeskyRejectsLargeGrids) {
  EXPECT_THROW(CholeskySampler(KernelModel::exponential_ou(1, 1), SamplingScheme::fixed(6000, 0.01)), SimulationError);
}

TEST(Simulate, ExplicitMethodsAreHonoured) {
  const auto k = KernelModel::exponential_ou(1, 2);
  const auto s = SamplingScheme::fixed(50, 0.1);
  EXPECT_EQ(sample_stationary_gp(k, s, 1, SimulationMethod::Cholesky).method, SimulationMethod::Cholesky);
  EXPECT_EQ(sample_stationary_gp(k, s, 1, SimulationMethod::CirculantEmbedding).method,
            SimulationMethod::CirculantEmbedding);
  EXPECT_EQ(parse_method("cholesky"), SimulationMethod::Cholesky);
  EXPECT_THROW(parse_method("spectral"), ConfigError);
}

TEST(Simulate, MarginalVarianceBothMethods) {
  // K(0) = 2, n = 20: 3000 reps, each path contributes 21 correlated points.
  const auto k = KernelModel::rational_quadratic(2.0, 1.0, 1.0);
  const auto s = SamplingScheme::fixed(20, 0.2);
  for (auto method : {SimulationMethod::CirculantEmbedding, SimulationMethod::Cholesky}) {
    const GaussianPathSampler sampler(k, s, method);
    double acc0 = 0.0, acc_lag = 0.0;
    const int reps = 3000;
    for (int r = 0; r < reps; ++r) {
      const auto z = sampler.draw_values(derive_seed(5, 0, r));
      acc0 += z[0] * z[0];
      acc_lag += z[0] * z[5];
    }
    // Var(z0^2) = 2 K(0)^2 = 8: se = sqrt(8 / 3000) ~ 0.052
    EXPECT_NEAR(acc0 / reps, 2.0, 5 * 0.052) << method_name(method);
    EXPECT_NEAR(acc_lag / reps, k(1.0), 5 * 0.052) << method_name(method);
  }
}

TEST(Simulate, AddDriftAddsTheIntegral) {
  const auto k = KernelModel::gaussian(1, 1);
  const auto s = SamplingScheme::fixed(10, 0.1);
  const auto z = sample_stationary_gp(k, s, 9);
  const auto x = add_drift(z, DriftModel::exp_decay(2.0));
  for (std::size_t i = 0; i <= 10; ++i) EXPECT_NEAR(x.values[i] - z.values[i], 2.0 * (1 - std::exp(-0.1 * i)), 1e-14);
  ASSERT_TRUE(x.truth.has_value());
  EXPECT_EQ(x.truth->drift.kind(), DriftModel::Kind::ExpDecay);
}

TEST(Simulate, ConcurrentDrawsMatchSerial) {
  const GaussianPathSampler sampler(KernelModel::gaussian(1, 1), SamplingScheme::from_rule(500, 0.4));
  std::vector<std::vector<double>> serial(16), parallel(16);
  for (int i = 0; i < 16; ++i) serial[i] = sampler.draw_values(i);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < 4; ++t)
      pool.emplace_back([&, t] {
        for (int i = t; i < 16; i += 4) parallel[i] = sampler.draw_values(i);
      });
  }
  EXPECT_EQ(serial, parallel);
}

TEST(Simulate, EmpiricalCovarianceOfLongOUPath) {
  const auto p = sample_stationary_gp(KernelModel::exponential_ou(1.0, 1.0), SamplingScheme::fixed(200000, 0.05), 77);
  const auto acov = empirical_covariance(p, 20);
  EXPECT_NEAR(acov[0], 1.0, 0.1);
  EXPECT_NEAR(acov[20], std::exp(-1.0), 0.1);
  EXPECT_THROW(empirical_covariance(p.values, p.values.size()), ConfigError);
}

TEST(Simulate, EmpiricalCovarianceHandValues) {
  const std::vector<double> x{1, 2, 3};
  const auto a = empirical_covariance(x, 1, false);
  EXPECT_DOUBLE_EQ(a[0], 14.0 / 3.0);
  EXPECT_DOUBLE_EQ(a[1], 8.0 / 3.0);
  const auto b = empirical_covariance(x, 1, true);
  EXPECT_DOUBLE_EQ(b[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(b[1], 0.0);
}
