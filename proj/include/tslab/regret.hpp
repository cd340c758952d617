#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "tslab/bandit.hpp"
#include "tslab/bounds.hpp"
#include "tslab/errors.hpp"
#include "tslab/parallel.hpp"
#include "tslab/stats.hpp"

namespace tslab {

/// Geometric horizon grid: powers of two up to T, plus T itself.
inline std::vector<int> horizon_grid(int horizon) {
  std::vector<int> grid;
  for (int h = 1; h <= horizon; h *= 2) grid.push_back(h);
  if (grid.empty() || grid.back() != horizon) grid.push_back(horizon);
  return grid;
}

struct RegretCurve {
  std::vector<int> horizons;
  std::vector<double> mean_regret;
  std::vector<double> half_width;  // 95% normal-approximation half-widths
  int n_replicates = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo Bayesian regret: cumulative pseudo-regret averaged over
/// replicates, each with a fresh theta* from the prior. Replicates map onto
/// fixed stream keys, so the result is independent of the worker count.
inline RegretCurve bayes_regret_curve(const EpisodeSetup& setup, int horizon,
                                      int n_replicates, std::uint64_t base_seed) {
  if (n_replicates < 2)
    throw PreconditionViolated("bayes_regret_curve: n_replicates >= 2 required");
  if (horizon < 0) throw InvalidHorizon("bayes_regret_curve: horizon >= 0");
  RegretCurve curve;
  curve.n_replicates = n_replicates;
  curve.seed = base_seed;
  curve.horizons = horizon == 0 ? std::vector<int>{0} : horizon_grid(horizon);
  const std::size_t k = curve.horizons.size();

  std::vector<double> totals(static_cast<std::size_t>(n_replicates) * k, 0.0);
  parallel_for(n_replicates, [&](std::int64_t rep) {
    double cumulative = 0.0;
    std::size_t next = 0;
    double* slot = totals.data() + static_cast<std::size_t>(rep) * k;
    while (next < k && curve.horizons[next] == 0) slot[next++] = 0.0;
    std::size_t cursor = next;
    run_episode_observe(setup, horizon, base_seed, static_cast<std::uint64_t>(rep),
                        [&](const StepRecord& rec, const Vector&) {
                          cumulative += rec.pseudo_regret;
                          while (cursor < k && rec.t + 1 == curve.horizons[cursor])
                            slot[cursor++] = cumulative;
                        });
  });

  curve.mean_regret.resize(k);
  curve.half_width.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    RunningMoments mom;
    for (int rep = 0; rep < n_replicates; ++rep)
      mom.add(totals[static_cast<std::size_t>(rep) * k + j]);
    curve.mean_regret[j] = mom.mean();
    curve.half_width[j] = 1.959963984540054 * mom.standard_error();
  }
  return curve;
}

struct EventReport {
  double beta = 0.0;
  int horizon = 0;
  int n_replicates = 0;
  std::vector<double> per_step_frequency;  // per-step violation rates
  double union_frequency = 0.0;            // any-step violation rate
  WilsonInterval union_wilson;
};

/// Frequency of the union event {exists t: ||theta_hat_t - theta*||_{V_t} > beta}.
inline EventReport event_violation_rate(const EpisodeSetup& setup, double beta,
                                        int horizon, int n_replicates,
                                        std::uint64_t base_seed) {
  if (!(beta >= 0.0)) throw PreconditionViolated("event_violation_rate: beta >= 0");
  if (horizon < 1) throw InvalidHorizon("event_violation_rate: horizon >= 1");
  if (n_replicates < 1)
    throw PreconditionViolated("event_violation_rate: n_replicates >= 1");
  EpisodeSetup probe = setup;
  probe.beta = beta;
  std::vector<std::uint8_t> any(static_cast<std::size_t>(n_replicates), 0);
  // one flag byte per (replicate, step); reduced serially afterwards
  std::vector<std::uint8_t> flags(
      static_cast<std::size_t>(n_replicates) * static_cast<std::size_t>(horizon), 0);
  parallel_for(n_replicates, [&](std::int64_t rep) {
    std::uint8_t* slot =
        flags.data() + static_cast<std::size_t>(rep) * static_cast<std::size_t>(horizon);
    run_episode_observe(probe, horizon, base_seed, static_cast<std::uint64_t>(rep),
                        [&](const StepRecord& rec, const Vector&) {
                          if (!rec.event_ok) {
                            slot[rec.t] = 1;
                            any[static_cast<std::size_t>(rep)] = 1;
                          }
                        });
  });
  std::vector<std::int64_t> per_step_counts(static_cast<std::size_t>(horizon), 0);
  for (std::int64_t rep = 0; rep < n_replicates; ++rep)
    for (int t = 0; t < horizon; ++t)
      per_step_counts[t] +=
          flags[static_cast<std::size_t>(rep) * static_cast<std::size_t>(horizon) + t];
  EventReport report;
  report.beta = beta;
  report.horizon = horizon;
  report.n_replicates = n_replicates;
  report.per_step_frequency.resize(horizon);
  for (int t = 0; t < horizon; ++t)
    report.per_step_frequency[t] =
        static_cast<double>(per_step_counts[t]) / n_replicates;
  std::int64_t union_count = 0;
  for (auto flag : any) union_count += flag;
  report.union_frequency = static_cast<double>(union_count) / n_replicates;
  report.union_wilson = wilson_interval(union_count, n_replicates);
  return report;
}

struct ChiSquareCheckpoint {
  int t = 0;
  double ks_statistic = 0.0;
  double ks_critical_1pct = 0.0;
  int n = 0;
};

/// KS goodness of fit of (1/2)||theta_hat_t - theta*||^2_{V_t} against the
/// chi-squared law with d degrees of freedom, at the given checkpoints.
inline std::vector<ChiSquareCheckpoint> chi_square_diagnostic(
    const EpisodeSetup& setup, const std::vector<int>& t_checkpoints, int horizon,
    int n_replicates, std::uint64_t base_seed) {
  if (t_checkpoints.empty())
    throw PreconditionViolated("chi_square_diagnostic: no checkpoints given");
  for (int t : t_checkpoints)
    if (t < 0 || t >= std::max(horizon, 1))
      throw PreconditionViolated("chi_square_diagnostic: checkpoint beyond horizon");
  if (n_replicates < 10)
    throw PreconditionViolated("chi_square_diagnostic: n_replicates too small");
  const int run_to =
      1 + *std::max_element(t_checkpoints.begin(), t_checkpoints.end());
  std::vector<double> values(t_checkpoints.size() *
                             static_cast<std::size_t>(n_replicates));
  parallel_for(n_replicates, [&](std::int64_t rep) {
    run_episode_observe(setup, run_to, base_seed, static_cast<std::uint64_t>(rep),
                        [&](const StepRecord& rec, const Vector&) {
                          for (std::size_t j = 0; j < t_checkpoints.size(); ++j)
                            if (rec.t == t_checkpoints[j])
                              values[j * n_replicates + rep] = rec.half_maha_sq;
                        });
  });
  std::vector<ChiSquareCheckpoint> out;
  const double dof = setup.d;
  for (std::size_t j = 0; j < t_checkpoints.size(); ++j) {
    std::vector<double> sample(values.begin() + j * n_replicates,
                               values.begin() + (j + 1) * n_replicates);
    ChiSquareCheckpoint cp;
    cp.t = t_checkpoints[j];
    cp.n = n_replicates;
    cp.ks_statistic =
        ks_statistic(std::move(sample), [dof](double x) { return chi_squared_cdf(x, dof); });
    cp.ks_critical_1pct = ks_critical_1pct(static_cast<std::size_t>(n_replicates));
    out.push_back(cp);
  }
  return out;
}

struct DecouplingReport {
  std::vector<double> scales;        // multipliers applied to Sigma0
  std::vector<double> tr_sigma0;     // resulting prior traces
  std::vector<double> early_regret;  // cumulative regret over the first d steps
  std::vector<double> early_half_width;
  std::vector<double> late_slope;    // regret increment over [T/2, T] per sqrt-step
  std::vector<double> late_half_width;
  std::optional<double> early_exponent;  // d log(early) / d log(sqrt tr Sigma0)
  int horizon = 0;
  int n_replicates = 0;
};

/// Burn-in/minimax decoupling experiment: scaling the prior trace must move
/// the early-window regret but leave the late sqrt-T slope intact.
inline DecouplingReport decoupling_experiment(const EpisodeSetup& base,
                                              const std::vector<double>& scale_grid,
                                              int horizon, int n_replicates,
                                              std::uint64_t base_seed) {
  if (scale_grid.empty())
    throw PreconditionViolated("decoupling_experiment: empty scale grid");
  if (horizon < 4 * base.d)
    throw PreconditionViolated("decoupling_experiment: horizon >= 4 d required");
  if (n_replicates < 2)
    throw PreconditionViolated("decoupling_experiment: n_replicates >= 2");
  if (scale_grid.size() >= 2) {
    const auto [lo, hi] = std::minmax_element(scale_grid.begin(), scale_grid.end());
    if (*hi / *lo < 16.0 * (1.0 - 1e-12))
      throw PreconditionViolated("decoupling_experiment: scale grid must span >= 16x");
  }

  DecouplingReport report;
  report.scales = scale_grid;
  report.horizon = horizon;
  report.n_replicates = n_replicates;
  const int early_end = base.d;           // steps [0, d)
  const int mid = horizon / 2;
  const double sqrt_gap = std::sqrt(static_cast<double>(horizon)) -
                          std::sqrt(static_cast<double>(mid));

  for (double scale : scale_grid) {
    EpisodeSetup setup = base;
    setup.sigma0 = SpdMatrix(scale * base.sigma0.mat());
    report.tr_sigma0.push_back(setup.sigma0.trace());

    std::vector<double> early(n_replicates, 0.0), late(n_replicates, 0.0);
    parallel_for(n_replicates, [&](std::int64_t rep) {
      double cumulative = 0.0, at_mid = 0.0, at_early = 0.0;
      run_episode_observe(setup, horizon, base_seed, static_cast<std::uint64_t>(rep),
                          [&](const StepRecord& rec, const Vector&) {
                            cumulative += rec.pseudo_regret;
                            if (rec.t + 1 == early_end) at_early = cumulative;
                            if (rec.t + 1 == mid) at_mid = cumulative;
                          });
      early[static_cast<std::size_t>(rep)] = at_early;
      late[static_cast<std::size_t>(rep)] = (cumulative - at_mid) / sqrt_gap;
    });
    RunningMoments early_mom, late_mom;
    for (int rep = 0; rep < n_replicates; ++rep) {
      early_mom.add(early[rep]);
      late_mom.add(late[rep]);
    }
    report.early_regret.push_back(early_mom.mean());
    report.early_half_width.push_back(1.959963984540054 * early_mom.standard_error());
    report.late_slope.push_back(late_mom.mean());
    report.late_half_width.push_back(1.959963984540054 * late_mom.standard_error());
  }

  if (scale_grid.size() >= 2) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < scale_grid.size(); ++i) {
      if (report.early_regret[i] <= 0.0) continue;
      xs.push_back(0.5 * std::log(report.tr_sigma0[i]));  // log sqrt(tr)
      ys.push_back(std::log(report.early_regret[i]));
    }
    if (xs.size() >= 2) report.early_exponent = least_squares_fit(xs, ys).slope;
  }
  return report;
}

}  // namespace tslab
