#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "tslab/bounds.hpp"
#include "tslab/errors.hpp"
#include "tslab/linalg.hpp"
#include "tslab/rng.hpp"

namespace tslab {

/// Linear-Gaussian bandit: rewards R = theta*^T a + sigma z over the
/// l2-ball of radius r, with a N(mu0, Sigma0) prior on theta*.
struct BanditInstance {
  int d = 0;
  double r = 1.0;
  double sigma = 1.0;
  Vector prior_mean;
  SpdMatrix prior_cov = SpdMatrix::identity(1);
  Vector theta_star;
};

inline BanditInstance make_bandit_instance(int d, double r, double sigma,
                                           Vector prior_mean, SpdMatrix prior_cov,
                                           Vector theta_star) {
  if (d < 1) throw PreconditionViolated("make_bandit_instance: d >= 1 required");
  if (!(r > 0.0)) throw PreconditionViolated("make_bandit_instance: r > 0 required");
  if (!(sigma > 0.0))
    throw PreconditionViolated("make_bandit_instance: sigma > 0 required");
  if (prior_mean.size() == 0) prior_mean = Vector::Zero(d);
  if (prior_mean.size() != d || prior_cov.dim() != d || theta_star.size() != d)
    throw DimensionMismatch("make_bandit_instance: dimension mismatch");
  return BanditInstance{d, r, sigma, std::move(prior_mean), std::move(prior_cov),
                        std::move(theta_star)};
}

/// Draws theta* from the prior.
inline BanditInstance sample_bandit_instance(int d, double r, double sigma,
                                             const Vector& prior_mean,
                                             const SpdMatrix& prior_cov,
                                             RngStream& rng) {
  const Vector mu0 = prior_mean.size() == 0 ? Vector::Zero(d) : prior_mean;
  return make_bandit_instance(d, r, sigma, mu0, prior_cov,
                              gaussian_sample(mu0, prior_cov, rng));
}

/// argmax of theta^T a over the r-ball: r theta / ||theta||. The maximizer
/// is degenerate at theta = 0 (every action attains 0); ties break to r e_1.
inline Vector optimal_action(const Vector& theta, double r) {
  if (!(r > 0.0)) throw PreconditionViolated("optimal_action: r > 0 required");
  const double norm = theta.norm();
  if (norm <= 1e-14) {
    Vector e = Vector::Zero(theta.size());
    e(0) = r;
    return e;
  }
  return (r / norm) * theta;
}

/// One environment interaction; rejects actions outside the ball.
inline double step(const BanditInstance& instance, const Vector& action,
                   RngStream& rng) {
  if (action.size() != instance.d)
    throw DimensionMismatch("step: action dimension mismatch");
  if (action.norm() > instance.r * (1.0 + 1e-12))
    throw ActionOutOfSet("step: action lies outside the radius-r ball");
  return instance.theta_star.dot(action) + instance.sigma * rng.normal();
}

/// Conjugate posterior snapshot after t observations.
struct GaussianPosterior {
  int t = 0;
  Vector mean;
  SpdMatrix precision = SpdMatrix::identity(1);
  SpdMatrix covariance = SpdMatrix::identity(1);
};

inline GaussianPosterior make_prior_posterior(const Vector& mu0,
                                              const SpdMatrix& sigma0) {
  if (mu0.size() != sigma0.dim())
    throw DimensionMismatch("make_prior_posterior: dimension mismatch");
  GaussianPosterior post;
  post.t = 0;
  post.mean = mu0;
  post.covariance = sigma0;
  Eigen::LLT<Matrix> llt(sigma0.mat());
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("make_prior_posterior: prior covariance not PD");
  post.precision =
      SpdMatrix(llt.solve(Matrix::Identity(sigma0.dim(), sigma0.dim())));
  return post;
}

/// One conjugate update: precision gains a a^T / sigma^2 and the mean follows
/// the accumulated information vector.
inline GaussianPosterior posterior_update(const GaussianPosterior& post,
                                          const Vector& action, double reward,
                                          double sigma) {
  if (!(sigma > 0.0)) throw PreconditionViolated("posterior_update: sigma > 0");
  if (action.size() != post.mean.size())
    throw DimensionMismatch("posterior_update: dimension mismatch");
  const double s2 = sigma * sigma;
  GaussianPosterior next;
  next.t = post.t + 1;
  next.precision =
      SpdMatrix(post.precision.mat() + (action * action.transpose()) / s2);
  const Vector w = post.covariance.mat() * action;
  const double denom = s2 + action.dot(w);
  next.covariance = SpdMatrix(post.covariance.mat() - (w * w.transpose()) / denom);
  const Vector info = post.precision.mat() * post.mean + action * (reward / s2);
  next.mean = next.covariance.mat() * info;
  return next;
}

/// Direct batch evaluation from the stacked history; the verification oracle
/// for the incremental path.
inline GaussianPosterior posterior_batch(const Vector& mu0, const SpdMatrix& sigma0,
                                         const std::vector<Vector>& actions,
                                         const std::vector<double>& rewards,
                                         double sigma) {
  if (actions.size() != rewards.size())
    throw DimensionMismatch("posterior_batch: history length mismatch");
  if (!(sigma > 0.0)) throw PreconditionViolated("posterior_batch: sigma > 0");
  GaussianPosterior prior = make_prior_posterior(mu0, sigma0);
  if (actions.empty()) return prior;
  const int d = sigma0.dim();
  const double s2 = sigma * sigma;
  Matrix v = prior.precision.mat();
  Vector info = prior.precision.mat() * mu0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].size() != d)
      throw DimensionMismatch("posterior_batch: action dimension mismatch");
    v.noalias() += (actions[i] * actions[i].transpose()) / s2;
    info.noalias() += actions[i] * (rewards[i] / s2);
  }
  Eigen::LLT<Matrix> llt(v);
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("posterior_batch: precision not PD");
  GaussianPosterior out;
  out.t = static_cast<int>(actions.size());
  out.precision = SpdMatrix(v);
  out.covariance = SpdMatrix(llt.solve(Matrix::Identity(d, d)));
  out.mean = llt.solve(info);
  return out;
}

struct ThompsonStepResult {
  Vector action;
  double reward = 0.0;
  Vector theta_hat;
  GaussianPosterior next;
};

/// Draw theta_hat from the posterior, act greedily on it, observe, update.
inline ThompsonStepResult thompson_step(const BanditInstance& instance,
                                        const GaussianPosterior& post,
                                        RngStream& rng) {
  ThompsonStepResult out;
  out.theta_hat = gaussian_sample(post.mean, post.covariance, rng);
  out.action = optimal_action(out.theta_hat, instance.r);
  out.reward = step(instance, out.action, rng);
  out.next = posterior_update(post, out.action, out.reward, instance.sigma);
  return out;
}

/// Incremental posterior engine for episode loops: exact precision and
/// information-vector accumulation, Sherman-Morrison covariance updates,
/// and a full re-factorization every 64 steps to bound drift.
class PosteriorState {
 public:
  PosteriorState(const Vector& mu0, const SpdMatrix& sigma0, double sigma)
      : sigma_sq_(sigma * sigma), mean_(mu0), cov_(sigma0.mat()) {
    if (!(sigma > 0.0)) throw PreconditionViolated("PosteriorState: sigma > 0");
    if (mu0.size() != sigma0.dim())
      throw DimensionMismatch("PosteriorState: dimension mismatch");
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success)
      throw SingularMatrix("PosteriorState: prior covariance not PD");
    precision_ = llt_.solve(Matrix::Identity(dim(), dim()));
    info_ = precision_ * mu0;
    chol_cov_ = llt_.matrixL();
  }

  int dim() const { return static_cast<int>(mean_.size()); }
  int t() const { return t_; }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return cov_; }
  const Matrix& precision() const { return precision_; }

  void update(const Vector& action, double reward) {
    precision_.noalias() += (action * action.transpose()) / sigma_sq_;
    info_.noalias() += action * (reward / sigma_sq_);
    const Vector w = cov_ * action;
    const double denom = sigma_sq_ + action.dot(w);
    cov_.noalias() -= (w * w.transpose()) / denom;
    ++t_;
    if (++since_refresh_ >= 64) {
      refresh();
    } else {
      mean_.noalias() = cov_ * info_;
      llt_.compute(cov_);
      if (llt_.info() != Eigen::Success) refresh();
      chol_cov_ = llt_.matrixL();
    }
  }

  /// Posterior draw mean + L z; consumes dim() normals from the stream.
  Vector sample(RngStream& rng) const {
    Vector z(dim());
    for (int i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return mean_ + chol_cov_ * z;
  }

  GaussianPosterior snapshot() const {
    GaussianPosterior post;
    post.t = t_;
    post.mean = mean_;
    post.precision = SpdMatrix(precision_);
    post.covariance = SpdMatrix(cov_);
    return post;
  }

 private:
  void refresh() {
    Eigen::LLT<Matrix> prec_llt(precision_);
    if (prec_llt.info() != Eigen::Success)
      throw SingularMatrix("PosteriorState: precision not PD");
    cov_ = prec_llt.solve(Matrix::Identity(dim(), dim()));
    mean_ = prec_llt.solve(info_);
    since_refresh_ = 0;
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success)
      throw SingularMatrix("PosteriorState: covariance not PD");
    chol_cov_ = llt_.matrixL();
  }

  double sigma_sq_;
  int t_ = 0;
  int since_refresh_ = 0;
  Vector mean_, info_;
  Matrix cov_, precision_, chol_cov_;
  Eigen::LLT<Matrix> llt_;
};

/// Episode configuration; beta defaults to the concentration radius for the
/// requested horizon when left unset (NaN).
struct EpisodeSetup {
  int d = 1;
  double r = 1.0;
  double sigma = 1.0;
  Vector mu0;
  SpdMatrix sigma0 = SpdMatrix::identity(1);
  double beta = std::numeric_limits<double>::quiet_NaN();
};

inline EpisodeSetup make_episode_setup(int d, double r, double sigma, Vector mu0,
                                       SpdMatrix sigma0,
                                       double beta = std::numeric_limits<double>::quiet_NaN()) {
  if (d < 1) throw PreconditionViolated("make_episode_setup: d >= 1 required");
  if (!(r > 0.0)) throw PreconditionViolated("make_episode_setup: r > 0 required");
  if (!(sigma > 0.0))
    throw PreconditionViolated("make_episode_setup: sigma > 0 required");
  if (mu0.size() == 0) mu0 = Vector::Zero(d);
  if (mu0.size() != d || sigma0.dim() != d)
    throw DimensionMismatch("make_episode_setup: dimension mismatch");
  return EpisodeSetup{d, r, sigma, std::move(mu0), std::move(sigma0), beta};
}

/// Per-step view passed to episode observers.
struct StepRecord {
  int t = 0;
  const Vector& theta_hat;
  const Vector& action;
  double reward = 0.0;
  double pseudo_regret = 0.0;
  double half_maha_sq = 0.0;  // (1/2) ||theta_hat - theta*||^2_{V_t}
  bool event_ok = true;       // ||theta_hat - theta*||_{V_t} <= beta
  double potential = 0.0;     // ||A_t||_{V_t^{-1}}
  const PosteriorState& posterior;
};

/// Full episode record.
struct Trajectory {
  int horizon = 0;
  double beta = 0.0;
  Vector theta_star;
  std::vector<Vector> actions;
  std::vector<Vector> theta_hats;
  Vector rewards;
  Vector pseudo_regrets;
  Vector potentials;
  std::vector<std::uint8_t> event_ok;

  double total_pseudo_regret() const {
    return horizon == 0 ? 0.0 : pseudo_regrets.sum();
  }
};

/// Runs one Thompson-sampling episode, invoking obs(record) at every step
/// before the posterior update. theta* is drawn fresh from the prior.
template <class Observer>
void run_episode_observe(const EpisodeSetup& setup, int horizon, std::uint64_t seed,
                         std::uint64_t replicate, Observer&& obs) {
  if (horizon < 0) throw InvalidHorizon("run_episode: horizon >= 0 required");
  RngStream theta_rng(seed, replicate, stream_role::kThetaStar);
  RngStream draw_rng(seed, replicate, stream_role::kPosteriorDraw);
  RngStream noise_rng(seed, replicate, stream_role::kRewardNoise);

  const Vector theta_star = gaussian_sample(setup.mu0, setup.sigma0, theta_rng);
  const double beta =
      std::isnan(setup.beta)
          ? concentration_radius(setup.d, std::max(horizon, 1))
          : setup.beta;
  const double beta_sq = beta * beta;
  const double best_value = setup.r * theta_star.norm();

  PosteriorState state(setup.mu0, setup.sigma0, setup.sigma);
  for (int t = 0; t < horizon; ++t) {
    const Vector theta_hat = state.sample(draw_rng);
    const Vector action = optimal_action(theta_hat, setup.r);
    const double reward =
        theta_star.dot(action) + setup.sigma * noise_rng.normal();
    const Vector diff = theta_hat - theta_star;
    const double maha_sq = std::max(0.0, diff.dot(state.precision() * diff));
    const double pot_sq = std::max(0.0, action.dot(state.covariance() * action));
    StepRecord record{t,
                      theta_hat,
                      action,
                      reward,
                      best_value - theta_star.dot(action),
                      0.5 * maha_sq,
                      maha_sq <= beta_sq,
                      std::sqrt(pot_sq),
                      state};
    obs(record, theta_star);
    state.update(action, reward);
  }
}

inline Trajectory run_episode(const EpisodeSetup& setup, int horizon,
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
  run_episode_observe(setup, horizon, seed, replicate,
                      [&](const StepRecord& rec, const Vector& theta_star) {
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

/// Uniform-random control policy: actions uniform on the radius-r sphere.
/// Returns per-step pseudo-regret.
inline Vector run_uniform_policy_episode(const EpisodeSetup& setup, int horizon,
                                         std::uint64_t seed, std::uint64_t replicate = 0) {
  if (horizon < 0) throw InvalidHorizon("run_uniform_policy_episode: horizon >= 0");
  RngStream theta_rng(seed, replicate, stream_role::kThetaStar);
  RngStream action_rng(seed, replicate, stream_role::kAux);
  const Vector theta_star = gaussian_sample(setup.mu0, setup.sigma0, theta_rng);
  const double best_value = setup.r * theta_star.norm();
  Vector regrets(horizon);
  for (int t = 0; t < horizon; ++t) {
    Vector dir(setup.d);
    double norm = 0.0;
    do {
      for (int i = 0; i < setup.d; ++i) dir(i) = action_rng.normal();
      norm = dir.norm();
    } while (norm < 1e-12);
    regrets(t) = best_value - theta_star.dot(dir) * setup.r / norm;
  }
  return regrets;
}

}  // namespace tslab
