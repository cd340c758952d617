#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "tslab/bandit.hpp"
#include "tslab/errors.hpp"
#include "tslab/linalg.hpp"
#include "tslab/parallel.hpp"
#include "tslab/regret.hpp"
#include "tslab/rng.hpp"
#include "tslab/stats.hpp"

namespace tslab {

/// Unnormalized strongly log-concave density: -log p(x) - (1/2) x^T Lambda x
/// is convex.
struct LogConcaveDensity {
  int dim = 0;
  std::function<double(const Vector&)> log_density;
  std::function<Vector(const Vector&)> gradient;
  SpdMatrix strong_convexity = SpdMatrix::identity(1);  // Lambda
};

inline LogConcaveDensity make_gaussian_density(const Vector& mean,
                                               const SpdMatrix& cov) {
  if (mean.size() != cov.dim())
    throw DimensionMismatch("make_gaussian_density: dimension mismatch");
  Eigen::LLT<Matrix> llt(cov.mat());
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("make_gaussian_density: covariance not PD");
  const Matrix precision = llt.solve(Matrix::Identity(cov.dim(), cov.dim()));
  LogConcaveDensity out;
  out.dim = cov.dim();
  out.strong_convexity = SpdMatrix(precision);
  out.log_density = [mean, precision](const Vector& x) {
    const Vector c = x - mean;
    return -0.5 * c.dot(precision * c);
  };
  out.gradient = [mean, precision](const Vector& x) {
    return Vector(-(precision * (x - mean)));
  };
  return out;
}

/// Coordinate-separable quadratic-plus-smooth-convex density
///   -log p(x) = (1/2) x^T Lambda x + b sum_j sqrt(x_j^2 + eps^2),
/// Lambda diagonal; strongly log-concave with parameter Lambda by
/// construction. Ships with an exact rejection sampler.
struct SampledDensity {
  LogConcaveDensity density;
  std::function<Vector(RngStream&)> sample;
};

inline SampledDensity make_quadratic_convex_density(const Vector& lambda_diag,
                                                    double b = 1.0,
                                                    double eps = 0.5) {
  const int d = static_cast<int>(lambda_diag.size());
  for (int i = 0; i < d; ++i)
    if (!(lambda_diag(i) > 0.0))
      throw InvalidEigenvalue("make_quadratic_convex_density: lambda > 0 required");
  if (!(b >= 0.0) || !(eps > 0.0))
    throw PreconditionViolated("make_quadratic_convex_density: b >= 0, eps > 0");
  SampledDensity out;
  out.density.dim = d;
  out.density.strong_convexity = SpdMatrix(Matrix(lambda_diag.asDiagonal()));
  out.density.log_density = [lambda_diag, b, eps, d](const Vector& x) {
    double v = 0.0;
    for (int i = 0; i < d; ++i)
      v -= 0.5 * lambda_diag(i) * x(i) * x(i) +
           b * std::sqrt(x(i) * x(i) + eps * eps);
    return v;
  };
  out.density.gradient = [lambda_diag, b, eps, d](const Vector& x) {
    Vector g(d);
    for (int i = 0; i < d; ++i)
      g(i) = -lambda_diag(i) * x(i) -
             b * x(i) / std::sqrt(x(i) * x(i) + eps * eps);
    return g;
  };
  out.sample = [lambda_diag, b, eps, d](RngStream& rng) {
    Vector x(d);
    for (int i = 0; i < d; ++i) {
      const double sd = 1.0 / std::sqrt(lambda_diag(i));
      for (;;) {
        const double cand = sd * rng.normal();
        const double accept =
            std::exp(-b * (std::sqrt(cand * cand + eps * eps) - eps));
        if (rng.uniform() < accept) {
          x(i) = cand;
          break;
        }
      }
    }
    return x;
  };
  return out;
}

/// One-dimensional reward-noise model with density, score, and sampler.
struct NoiseModel {
  std::function<double(double)> log_density;
  std::function<double(double)> dlog_density;
  double strong_convexity = 1.0;  // sigma^{-2}
  std::function<double(RngStream&)> sample;
};

inline NoiseModel make_gaussian_noise(double sigma) {
  if (!(sigma > 0.0)) throw PreconditionViolated("make_gaussian_noise: sigma > 0");
  NoiseModel out;
  const double inv_var = 1.0 / (sigma * sigma);
  out.strong_convexity = inv_var;
  out.log_density = [inv_var](double w) { return -0.5 * inv_var * w * w; };
  out.dlog_density = [inv_var](double w) { return -inv_var * w; };
  out.sample = [sigma](RngStream& rng) { return sigma * rng.normal(); };
  return out;
}

/// Smoothed-Laplace noise: -log p(w) = w^2/(2 sigma^2) + b sqrt(w^2 + eps^2).
/// The quadratic term alone certifies sigma^{-2}-strong log-concavity; the
/// pseudo-Huber term only adds convexity. Symmetric, hence mean zero.
inline NoiseModel make_smoothed_laplace_noise(double sigma, double b = 1.0,
                                              double eps = 0.5) {
  if (!(sigma > 0.0) || !(b >= 0.0) || !(eps > 0.0))
    throw PreconditionViolated("make_smoothed_laplace_noise: bad parameters");
  NoiseModel out;
  const double inv_var = 1.0 / (sigma * sigma);
  out.strong_convexity = inv_var;
  out.log_density = [inv_var, b, eps](double w) {
    return -0.5 * inv_var * w * w - b * std::sqrt(w * w + eps * eps);
  };
  out.dlog_density = [inv_var, b, eps](double w) {
    return -inv_var * w - b * w / std::sqrt(w * w + eps * eps);
  };
  out.sample = [sigma, b, eps](RngStream& rng) {
    for (;;) {
      const double cand = sigma * rng.normal();
      const double accept =
          std::exp(-b * (std::sqrt(cand * cand + eps * eps) - eps));
      if (rng.uniform() < accept) return cand;
    }
  };
  return out;
}

/// Posterior over theta for a log-concave prior and reward-noise model:
/// log pi_t(theta) = c + log prior(theta) + sum_s log p_W(R_{s+1} - A_s^T theta).
struct PosteriorDensity {
  LogConcaveDensity prior;
  NoiseModel noise;
  std::vector<Vector> actions;
  std::vector<double> rewards;

  double log_density(const Vector& theta) const {
    double v = prior.log_density(theta);
    for (std::size_t s = 0; s < actions.size(); ++s)
      v += noise.log_density(rewards[s] - actions[s].dot(theta));
    return v;
  }

  Vector gradient(const Vector& theta) const {
    Vector g = prior.gradient(theta);
    for (std::size_t s = 0; s < actions.size(); ++s)
      g -= actions[s] * noise.dlog_density(rewards[s] - actions[s].dot(theta));
    return g;
  }

  /// Lambda of the posterior: prior curvature plus sigma^{-2} sum A A^T.
  SpdMatrix implied_precision() const {
    Matrix v = prior.strong_convexity.mat();
    for (const auto& a : actions)
      v.noalias() += noise.strong_convexity * (a * a.transpose());
    return SpdMatrix(v);
  }
};

struct MalaResult {
  Vector endpoint;
  double acceptance_rate = 0.0;
};

/// Metropolis-adjusted Langevin chain endpoint. Proposal
/// y = x + h grad log pi(x) + sqrt(2h) xi with the exact MH correction.
inline MalaResult mala_sample(const std::function<double(const Vector&)>& log_density,
                              const std::function<Vector(const Vector&)>& gradient,
                              const Vector& init, int n_steps, double step_size,
                              RngStream& rng) {
  if (n_steps < 1) throw PreconditionViolated("mala_sample: n_steps >= 1 required");
  if (!(step_size > 0.0)) throw PreconditionViolated("mala_sample: step_size > 0");
  double lp = log_density(init);
  if (!std::isfinite(lp))
    throw InvalidInit("mala_sample: log-density not finite at init");
  const int d = static_cast<int>(init.size());
  Vector x = init;
  Vector g = gradient(x);
  const double h = step_size;
  int accepted = 0;
  Vector xi(d), y(d);
  for (int step = 0; step < n_steps; ++step) {
    for (int i = 0; i < d; ++i) xi(i) = rng.normal();
    y = x + h * g + std::sqrt(2.0 * h) * xi;
    const double lpy = log_density(y);
    const Vector gy = gradient(y);
    const double forward = (y - x - h * g).squaredNorm();
    const double backward = (x - y - h * gy).squaredNorm();
    const double log_alpha = lpy - lp + (forward - backward) / (4.0 * h);
    if (std::log(rng.uniform_pos()) < log_alpha) {
      x = y;
      g = gy;
      lp = lpy;
      ++accepted;
    }
  }
  return MalaResult{std::move(x), static_cast<double>(accepted) / n_steps};
}

/// Thompson sampling with a Gaussian prior and a strongly log-concave noise
/// model; posterior draws come from a MALA chain warm-started at the
/// Gaussian-equivalent ridge mean.
struct LcEpisodeSetup {
  int d = 1;
  double r = 1.0;
  Vector mu0;
  SpdMatrix sigma0 = SpdMatrix::identity(1);
  NoiseModel noise;
  double noise_sigma = 1.0;  // sigma: noise strong convexity is sigma^{-2}
  int mala_steps = 0;         // 0 -> 50 d
  double mala_step_size = 0;  // 0 -> 0.5 / lambda_max(V_t)
  double beta = std::numeric_limits<double>::quiet_NaN();
};

inline LcEpisodeSetup make_lc_episode_setup(int d, double r, Vector mu0,
                                            SpdMatrix sigma0, NoiseModel noise,
                                            double noise_sigma) {
  if (d < 1) throw PreconditionViolated("make_lc_episode_setup: d >= 1 required");
  if (!(r > 0.0)) throw PreconditionViolated("make_lc_episode_setup: r > 0 required");
  if (!(noise_sigma > 0.0))
    throw PreconditionViolated("make_lc_episode_setup: noise sigma > 0 required");
  if (mu0.size() == 0) mu0 = Vector::Zero(d);
  if (mu0.size() != d || sigma0.dim() != d)
    throw DimensionMismatch("make_lc_episode_setup: dimension mismatch");
  LcEpisodeSetup setup;
  setup.d = d;
  setup.r = r;
  setup.mu0 = std::move(mu0);
  setup.sigma0 = std::move(sigma0);
  setup.noise = std::move(noise);
  setup.noise_sigma = noise_sigma;
  return setup;
}

struct StepLcRecord {
  int t = 0;
  const Vector& theta_hat;
  const Vector& action;
  double reward = 0.0;
  double pseudo_regret = 0.0;
  double half_maha_sq = 0.0;
  bool event_ok = true;
  double potential = 0.0;
  double acceptance_rate = 0.0;
};

template <class Observer>
void lc_episode_observe(const LcEpisodeSetup& setup, int horizon, std::uint64_t seed,
                        std::uint64_t replicate, Observer&& obs) {
  if (horizon < 0) throw InvalidHorizon("lc_episode: horizon >= 0 required");
  RngStream theta_rng(seed, replicate, stream_role::kThetaStar);
  RngStream draw_rng(seed, replicate, stream_role::kPosteriorDraw);
  RngStream noise_rng(seed, replicate, stream_role::kRewardNoise);

  const Vector theta_star = gaussian_sample(setup.mu0, setup.sigma0, theta_rng);
  const double beta = std::isnan(setup.beta)
                          ? concentration_radius(setup.d, std::max(horizon, 1))
                          : setup.beta;
  const double beta_sq = beta * beta;
  const double best_value = setup.r * theta_star.norm();
  const int mala_steps = setup.mala_steps > 0 ? setup.mala_steps : 50 * setup.d;

  PosteriorDensity target;
  target.prior = make_gaussian_density(setup.mu0, setup.sigma0);
  target.noise = setup.noise;
  const double inv_var = 1.0 / (setup.noise_sigma * setup.noise_sigma);

  Matrix v = target.prior.strong_convexity.mat();
  Vector info = v * setup.mu0;
  Eigen::LLT<Matrix> llt;
  const auto log_density = [&target](const Vector& x) { return target.log_density(x); };
  const auto gradient = [&target](const Vector& x) { return target.gradient(x); };

  for (int t = 0; t < horizon; ++t) {
    llt.compute(v);
    if (llt.info() != Eigen::Success)
      throw SingularMatrix("lc_episode: posterior curvature not PD");
    const Vector ridge_mean = llt.solve(info);
    const double lambda_max = spectral_decomposition(SpdMatrix(v)).eigenvalues(0);
    const double h = setup.mala_step_size > 0.0 ? setup.mala_step_size
                                                : 0.5 / lambda_max;
    const MalaResult draw =
        mala_sample(log_density, gradient, ridge_mean, mala_steps, h, draw_rng);
    const Vector& theta_hat = draw.endpoint;
    const Vector action = optimal_action(theta_hat, setup.r);
    const double reward = theta_star.dot(action) + setup.noise.sample(noise_rng);

    const Vector diff = theta_hat - theta_star;
    const double maha_sq = std::max(0.0, diff.dot(v * diff));
    const Vector pot = llt.solve(action);
    StepLcRecord record{t,
                        theta_hat,
                        action,
                        reward,
                        best_value - theta_star.dot(action),
                        0.5 * maha_sq,
                        maha_sq <= beta_sq,
                        std::sqrt(std::max(0.0, action.dot(pot))),
                        draw.acceptance_rate};
    obs(record, theta_star);

    target.actions.push_back(action);
    target.rewards.push_back(reward);
    v.noalias() += inv_var * (action * action.transpose());
    info.noalias() += inv_var * reward * action;
  }
}

inline Trajectory lc_thompson_episode(const LcEpisodeSetup& setup, int horizon,
                                      std::uint64_t seed, std::uint64_t replicate = 0) {
  Trajectory traj;
  traj.horizon = horizon;
  traj.beta = std::isnan(setup.beta)
                  ? concentration_radius(setup.d, std::max(horizon, 1))
                  : setup.beta;
  traj.actions.reserve(horizon);
  traj.theta_hats.reserve(horizon);
  traj.rewards.resize(horizon);
  traj.pseudo_regrets.resize(horizon);
  traj.potentials.resize(horizon);
  traj.event_ok.resize(horizon);
  lc_episode_observe(setup, horizon, seed, replicate,
                     [&](const StepLcRecord& rec, const Vector& theta_star) {
                       if (rec.t == 0) traj.theta_star = theta_star;
                       traj.actions.push_back(rec.action);
                       traj.theta_hats.push_back(rec.theta_hat);
                       traj.rewards(rec.t) = rec.reward;
                       traj.pseudo_regrets(rec.t) = rec.pseudo_regret;
                       traj.potentials(rec.t) = rec.potential;
                       traj.event_ok[rec.t] = rec.event_ok ? 1 : 0;
                     });
  if (horizon == 0) {
    RngStream theta_rng(seed, replicate, stream_role::kThetaStar);
    traj.theta_star = gaussian_sample(setup.mu0, setup.sigma0, theta_rng);
  }
  return traj;
}

/// Monte Carlo regret curve for the MALA-backed sampler; same layout as
/// bayes_regret_curve so the two are directly comparable.
inline RegretCurve lc_regret_curve(const LcEpisodeSetup& setup, int horizon,
                                   int n_replicates, std::uint64_t base_seed) {
  if (n_replicates < 2)
    throw PreconditionViolated("lc_regret_curve: n_replicates >= 2 required");
  if (horizon < 0) throw InvalidHorizon("lc_regret_curve: horizon >= 0");
  RegretCurve curve;
  curve.n_replicates = n_replicates;
  curve.seed = base_seed;
  curve.horizons = horizon == 0 ? std::vector<int>{0} : horizon_grid(horizon);
  const std::size_t k = curve.horizons.size();
  std::vector<double> totals(static_cast<std::size_t>(n_replicates) * k, 0.0);
  parallel_for(n_replicates, [&](std::int64_t rep) {
    double cumulative = 0.0;
    double* slot = totals.data() + static_cast<std::size_t>(rep) * k;
    std::size_t cursor = 0;
    while (cursor < k && curve.horizons[cursor] == 0) slot[cursor++] = 0.0;
    lc_episode_observe(setup, horizon, base_seed, static_cast<std::uint64_t>(rep),
                       [&](const StepLcRecord& rec, const Vector&) {
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

struct SubGaussianPoint {
  double margin = 0.0;    // log empirical MGF - v^T Lambda^{-1} v
  double mc_error = 0.0;  // delta-method standard error of the margin
};

struct SubGaussianReport {
  std::vector<SubGaussianPoint> points;
  double worst_margin = 0.0;
  double worst_excess = 0.0;  // max over grid of margin - 3 mc_error
};

/// Empirical moment-generating-function check of 2 Lambda^{-1}-sub-Gaussianity:
/// log E exp(v^T (X - EX)) <= v^T Lambda^{-1} v for every probe v.
inline SubGaussianReport empirical_subgaussian_check(
    const std::function<Vector(RngStream&)>& sampler, const SpdMatrix& lambda,
    const std::vector<Vector>& v_grid, int n, std::uint64_t seed) {
  if (v_grid.empty())
    throw PreconditionViolated("empirical_subgaussian_check: empty grid");
  if (n < 10000)
    throw PreconditionViolated("empirical_subgaussian_check: n >= 10^4 required");
  RngStream rng(seed, 0, stream_role::kAux);
  const int d = lambda.dim();
  Matrix samples(n, d);
  Vector mean = Vector::Zero(d);
  for (int i = 0; i < n; ++i) {
    const Vector x = sampler(rng);
    samples.row(i) = x;
    mean += x;
  }
  mean /= n;
  Eigen::LLT<Matrix> llt(lambda.mat());
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("empirical_subgaussian_check: Lambda not PD");

  SubGaussianReport report;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  report.worst_excess = -std::numeric_limits<double>::infinity();
  for (const auto& v : v_grid) {
    if (v.size() != d)
      throw DimensionMismatch("empirical_subgaussian_check: probe dimension");
    RunningMoments mgf;
    for (int i = 0; i < n; ++i)
      mgf.add(std::exp(v.dot(Vector(samples.row(i))) - v.dot(mean)));
    const double quad = v.dot(llt.solve(v));
    SubGaussianPoint point;
    point.margin = std::log(mgf.mean()) - quad;
    point.mc_error = mgf.standard_error() / mgf.mean();
    report.points.push_back(point);
    report.worst_margin = std::max(report.worst_margin, point.margin);
    report.worst_excess =
        std::max(report.worst_excess, point.margin - 3.0 * point.mc_error);
  }
  return report;
}

/// Analytic margin for the Gaussian case: log MGF is exactly (1/2) v^T Sigma v.
inline double gaussian_subgaussian_margin(const SpdMatrix& cov,
                                          const SpdMatrix& lambda, const Vector& v) {
  Eigen::LLT<Matrix> llt(lambda.mat());
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("gaussian_subgaussian_margin: Lambda not PD");
  return 0.5 * v.dot(cov.mat() * v) - v.dot(llt.solve(v));
}

struct NormTailPoint {
  double t = 0.0;
  double threshold = 0.0;  // C (sqrt(d) + t)
  double frequency = 0.0;
  double bound = 0.0;  // 2 exp(-t^2)
  WilsonInterval wilson;
  bool pass = false;
};

/// Empirical exceedance of P(||X||_{Sigma^{-1}} >= C (sqrt(d) + t)) against
/// the sub-Gaussian norm tail 2 exp(-t^2).
inline std::vector<NormTailPoint> norm_tail_check(
    const std::function<Vector(RngStream&)>& sampler, const SpdMatrix& sigma,
    double c, const std::vector<double>& t_grid, int n, std::uint64_t seed) {
  if (!(c > 0.0)) throw PreconditionViolated("norm_tail_check: C > 0 required");
  if (t_grid.empty()) throw PreconditionViolated("norm_tail_check: empty grid");
  Eigen::LLT<Matrix> llt(sigma.mat());
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("norm_tail_check: Sigma not PD");
  const int d = sigma.dim();
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  RngStream rng(seed, 0, stream_role::kAux);
  std::vector<std::int64_t> exceed(t_grid.size(), 0);
  for (int i = 0; i < n; ++i) {
    const Vector x = sampler(rng);
    const double norm = std::sqrt(std::max(0.0, x.dot(llt.solve(x))));
    for (std::size_t j = 0; j < t_grid.size(); ++j)
      if (norm >= c * (sqrt_d + t_grid[j])) ++exceed[j];
  }
  std::vector<NormTailPoint> out;
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    NormTailPoint point;
    point.t = t_grid[j];
    point.threshold = c * (sqrt_d + t_grid[j]);
    point.frequency = static_cast<double>(exceed[j]) / n;
    point.bound = 2.0 * std::exp(-t_grid[j] * t_grid[j]);
    point.wilson = wilson_interval(exceed[j], n);
    point.pass = point.frequency <= point.bound;
    out.push_back(point);
  }
  return out;
}

}  // namespace tslab
