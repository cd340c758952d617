#include "tslab/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "tslab/rng.hpp"

namespace tslab {
namespace {

TEST(ChiSquaredCdf, MatchesClosedFormsForSmallDof) {
  // dof 2: F(x) = 1 - exp(-x/2).
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0})
    EXPECT_NEAR(chi_squared_cdf(x, 2), 1.0 - std::exp(-0.5 * x), 1e-12);
  // dof 4: F(x) = 1 - exp(-x/2) (1 + x/2).
  for (double x : {0.5, 2.0, 7.0, 30.0})
    EXPECT_NEAR(chi_squared_cdf(x, 4),
                1.0 - std::exp(-0.5 * x) * (1.0 + 0.5 * x), 1e-12);
  // dof 1: F(x) = 2 Phi(sqrt(x)) - 1.
  for (double x : {0.2, 1.0, 4.0})
    EXPECT_NEAR(chi_squared_cdf(x, 1), 2.0 * normal_cdf(std::sqrt(x)) - 1.0,
                1e-12);
  EXPECT_EQ(chi_squared_cdf(0.0, 3), 0.0);
  EXPECT_EQ(chi_squared_cdf(-1.0, 3), 0.0);
}

TEST(NormalCdf, ReferencePoints) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(normal_cdf(-1.959963984540054), 0.025, 1e-12);
}

TEST(ExpectedGaussianNorm, ClosedForms) {
  EXPECT_NEAR(expected_gaussian_norm(1), std::sqrt(2.0 / std::numbers::pi), 1e-14);
  EXPECT_NEAR(expected_gaussian_norm(2), std::sqrt(std::numbers::pi / 2.0), 1e-14);
  EXPECT_NEAR(expected_gaussian_norm(3), 2.0 * std::sqrt(2.0 / std::numbers::pi), 1e-14);
}

TEST(Wilson, EdgeAndMonotone) {
  const auto w0 = wilson_interval(0, 100);
  EXPECT_EQ(w0.phat, 0.0);
  EXPECT_NEAR(w0.low, 0.0, 1e-15);
  EXPECT_GT(w0.high, 0.0);
  const auto w1 = wilson_interval(100, 100);
  EXPECT_EQ(w1.high, 1.0);
  double prev = -1.0;
  for (int k = 0; k <= 50; k += 10) {
    const auto w = wilson_interval(k, 50);
    EXPECT_GT(w.phat, prev);
    prev = w.phat;
    EXPECT_LE(w.low, w.phat);
    EXPECT_GE(w.high, w.phat);
  }
  EXPECT_THROW(wilson_interval(0, 0), PreconditionViolated);
}

TEST(KsStatistic, GridSampleIsSmall) {
  const int n = 1000;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = (i + 0.5) / n;
  const double d = ks_statistic(xs, [](double x) { return x; });
  EXPECT_LE(d, 0.5 / n + 1e-12);
  EXPECT_NEAR(ks_critical_1pct(10000), 0.0162762, 1e-7);
}

TEST(RunningMoments, MatchesDirectComputation) {
  RunningMoments m;
  const std::vector<double> xs = {1.0, 2.0, 4.0, 8.0};
  for (double x : xs) m.add(x);
  EXPECT_NEAR(m.mean(), 3.75, 1e-15);
  EXPECT_NEAR(m.variance(), (7.5625 + 3.0625 + 0.0625 + 18.0625) / 3.0, 1e-12);
}

TEST(LeastSquaresFit, ExactLine) {
  const std::vector<double> xs = {0, 1, 2, 3}, ys = {1, 3, 5, 7};
  const auto fit = least_squares_fit(xs, ys);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-12);
}

TEST(EnergyStatistic, ZeroForIdenticalSamples) {
  RngStream rng(9, 0, stream_role::kAux);
  std::vector<double> a(500);
  for (auto& x : a) x = rng.normal();
  EXPECT_NEAR(energy_statistic_1d(a, a), 0.0, 1e-10);
}

TEST(EnergyStatistic, MultivariateAgreesWith1d) {
  RngStream rng(10, 0, stream_role::kAux);
  const int n = 200;
  std::vector<double> a(n), b(n);
  Eigen::MatrixXd am(n, 1), bm(n, 1);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal() + 0.3;
    am(i, 0) = a[i];
    bm(i, 0) = b[i];
  }
  EXPECT_NEAR(energy_statistic_1d(a, b), energy_statistic(am, bm), 1e-9);
}

TEST(EnergyPermutation, AcceptsSameLawRejectsShift) {
  RngStream rng(11, 0, stream_role::kAux);
  const int n = 2000;
  std::vector<double> a(n), b(n), c(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
    c[i] = rng.normal() + 0.5;
  }
  RngStream perm_rng(12, 0, stream_role::kAux);
  EXPECT_GT(energy_permutation_pvalue_1d(a, b, 199, perm_rng), 0.01);
  RngStream perm_rng2(13, 0, stream_role::kAux);
  EXPECT_LE(energy_permutation_pvalue_1d(a, c, 199, perm_rng2), 0.01);
}

}  // namespace
}  // namespace tslab
