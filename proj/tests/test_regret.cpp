#include "tslab/regret.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "tslab/stats.hpp"

namespace tslab {
namespace {

EpisodeSetup simple_setup(int d, double r = 1.0, double sigma = 1.0,
                          double prior_scale = 1.0) {
  return make_episode_setup(d, r, sigma, Vector::Zero(d),
                            SpdMatrix(prior_scale * Matrix::Identity(d, d)));
}

TEST(HorizonGrid, PowersOfTwoPlusEndpoint) {
  EXPECT_EQ(horizon_grid(1), (std::vector<int>{1}));
  EXPECT_EQ(horizon_grid(8), (std::vector<int>{1, 2, 4, 8}));
  EXPECT_EQ(horizon_grid(100), (std::vector<int>{1, 2, 4, 8, 16, 32, 64, 100}));
}

TEST(BayesRegretCurve, ZeroHorizonGivesZeroCurve) {
  const auto curve = bayes_regret_curve(simple_setup(2), 0, 8, 1);
  ASSERT_EQ(curve.horizons, (std::vector<int>{0}));
  EXPECT_EQ(curve.mean_regret[0], 0.0);
  EXPECT_EQ(curve.half_width[0], 0.0);
  EXPECT_THROW(bayes_regret_curve(simple_setup(2), 4, 1, 1), PreconditionViolated);
}

TEST(BayesRegretCurve, HalfWidthFollowsCltScaling) {
  const auto setup = simple_setup(1);
  const auto small = bayes_regret_curve(setup, 32, 250, 2);
  const auto doubled = bayes_regret_curve(setup, 32, 500, 2);
  const auto quadrupled = bayes_regret_curve(setup, 32, 1000, 2);
  const std::size_t last = small.horizons.size() - 1;
  const double ratio2 = doubled.half_width[last] / small.half_width[last];
  const double ratio4 = quadrupled.half_width[last] / small.half_width[last];
  EXPECT_NEAR(ratio2, 1.0 / std::numbers::sqrt2, 0.2 / std::numbers::sqrt2);
  EXPECT_NEAR(ratio4, 0.5, 0.1);
  EXPECT_GT(small.half_width[last], 0.0);
}

TEST(BayesRegretCurve, StaysInsideTheoryEnvelope) {
  const auto setup = simple_setup(2);
  const auto curve = bayes_regret_curve(setup, 64, 1000, 3);
  const Vector tau = Vector::Ones(2);
  for (std::size_t j = 0; j < curve.horizons.size(); ++j) {
    const double upper =
        ts_upper_bound(2, curve.horizons[j], 1.0, 1.0, SpdMatrix::identity(2));
    const double lower = minimax_lower_bound(1.0, tau, curve.horizons[j]);
    EXPECT_LE(curve.mean_regret[j] + 3.0 * curve.half_width[j], upper)
        << "T=" << curve.horizons[j];
    EXPECT_GE(curve.mean_regret[j] - 3.0 * curve.half_width[j], lower - 1e-9)
        << "T=" << curve.horizons[j];
  }
}

TEST(BayesRegretCurve, MeanNondecreasingWithinSlack) {
  const auto curve = bayes_regret_curve(simple_setup(2), 128, 400, 4);
  for (std::size_t j = 1; j < curve.horizons.size(); ++j)
    EXPECT_GE(curve.mean_regret[j],
              curve.mean_regret[j - 1] - 2.0 * curve.half_width[j]);
}

TEST(BayesRegretCurve, DeterministicAcrossWorkerCounts) {
  const auto setup = simple_setup(2);
  const auto a = bayes_regret_curve(setup, 16, 64, 5);
  setenv("TSLAB_THREADS", "1", 1);
  const auto b = bayes_regret_curve(setup, 16, 64, 5);
  unsetenv("TSLAB_THREADS");
  ASSERT_EQ(a.mean_regret.size(), b.mean_regret.size());
  for (std::size_t j = 0; j < a.mean_regret.size(); ++j) {
    EXPECT_EQ(a.mean_regret[j], b.mean_regret[j]);
    EXPECT_EQ(a.half_width[j], b.half_width[j]);
  }
}

TEST(EventViolationRate, ExtremeBetas) {
  const auto setup = simple_setup(2);
  const auto never = event_violation_rate(setup, 1e6, 8, 300, 6);
  EXPECT_EQ(never.union_frequency, 0.0);
  const auto always = event_violation_rate(setup, 0.0, 8, 300, 6);
  EXPECT_EQ(always.union_frequency, 1.0);
  for (double f : always.per_step_frequency) EXPECT_EQ(f, 1.0);
}

TEST(EventViolationRate, CalibratedBetaMeetsUnionTarget) {
  const int d = 4, horizon = 32, reps = 10000;
  const double beta = concentration_radius(d, horizon);
  const auto report =
      event_violation_rate(simple_setup(d), beta, horizon, reps, 7);
  const double target = 1.0 / (static_cast<double>(horizon) * horizon);
  EXPECT_LE(report.union_wilson.high,
            target + 3.0 * report.union_wilson.half_width + 1e-12);
}

TEST(ChiSquareDiagnostic, MatchesReferenceLawAtCheckpoints) {
  for (int d : {1, 2}) {
    const auto checkpoints =
        chi_square_diagnostic(simple_setup(d), {0, 8}, 16, 10000, 8);
    for (const auto& cp : checkpoints)
      EXPECT_LT(cp.ks_statistic, cp.ks_critical_1pct) << "d=" << d << " t=" << cp.t;
  }
}

TEST(ChiSquareDiagnostic, MisscaledStatisticIsRejected) {
  // Dropping the 1/2 factor doubles every value; the KS test must notice.
  const int d = 2, n = 10000;
  std::vector<double> misscaled;
  misscaled.reserve(n);
  const auto setup = simple_setup(d);
  for (int rep = 0; rep < n; ++rep)
    run_episode_observe(setup, 1, 9, rep,
                        [&](const StepRecord& rec, const Vector&) {
                          misscaled.push_back(2.0 * rec.half_maha_sq);
                        });
  const double stat = ks_statistic(
      misscaled, [d](double x) { return chi_squared_cdf(x, d); });
  EXPECT_GT(stat, ks_critical_1pct(n));
}

TEST(ChiSquareDiagnostic, RejectsBadCheckpoints) {
  EXPECT_THROW(chi_square_diagnostic(simple_setup(2), {20}, 16, 1000, 1),
               PreconditionViolated);
  EXPECT_THROW(chi_square_diagnostic(simple_setup(2), {}, 16, 1000, 1),
               PreconditionViolated);
  EXPECT_THROW(chi_square_diagnostic(simple_setup(2), {0}, 16, 5, 1),
               PreconditionViolated);
}

TEST(Decoupling, DegenerateGridHasNoExponent) {
  const auto report =
      decoupling_experiment(simple_setup(2), {1.0}, 32, 50, 10);
  EXPECT_FALSE(report.early_exponent.has_value());
  EXPECT_EQ(report.scales.size(), 1u);
  for (double x : report.early_regret) EXPECT_GE(x, 0.0);
  for (double x : report.late_slope) EXPECT_GE(x, -1e-9);
}

TEST(Decoupling, RejectsBadInputs) {
  EXPECT_THROW(decoupling_experiment(simple_setup(2), {1.0, 2.0}, 64, 50, 1),
               PreconditionViolated);  // span < 16x
  EXPECT_THROW(decoupling_experiment(simple_setup(2), {1.0, 16.0}, 4, 50, 1),
               PreconditionViolated);  // horizon < 4d
  EXPECT_THROW(decoupling_experiment(simple_setup(2), {}, 64, 50, 1),
               PreconditionViolated);
}

TEST(Decoupling, PriorScaleMovesEarlyRegretNotLateSlope) {
  const auto report =
      decoupling_experiment(simple_setup(2), {1.0, 16.0}, 128, 600, 11);
  ASSERT_EQ(report.early_regret.size(), 2u);
  const double early_ratio = report.early_regret[1] / report.early_regret[0];
  EXPECT_GT(early_ratio, 2.0);
  EXPECT_LT(early_ratio, 8.0);
  const double slope_change =
      std::fabs(report.late_slope[1] - report.late_slope[0]) /
      std::max(report.late_slope[0], 1e-12);
  EXPECT_LT(slope_change, 0.4);
  ASSERT_TRUE(report.early_exponent.has_value());
  EXPECT_NEAR(*report.early_exponent, 1.0, 0.5);
}

}  // namespace
}  // namespace tslab
