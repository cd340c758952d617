#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include "tslab/errors.hpp"
#include "tslab/linalg.hpp"
#include "tslab/stats.hpp"

namespace tslab {

/// Default multiplier for the log-concave regret bound; a calibration
/// constant, not a derived value, and callers may override it.
inline constexpr double kDefaultLogConcaveC = 3.0;

/// Default constant for the scaled-identity lower-bound corollary, taken
/// from the exact lower-bound sum: sum_{i=2}^m (i-1) = m(m-1)/2 and the
/// 1/pi prefactor give c -> 1/(2 pi) for large m.
inline constexpr double kDefaultIdentityLowerC = 0.15915494309189535;  // 1/(2 pi)

/// C1(d, T) = sqrt(1 + max{24 log T / d, sqrt(24 log T / d)}).
inline double c1_factor(int d, double horizon) {
  if (d < 1) throw PreconditionViolated("c1_factor: d >= 1 required");
  if (!(horizon >= 1.0)) throw InvalidHorizon("c1_factor: horizon >= 1 required");
  const double u = 24.0 * std::log(horizon) / d;
  return std::sqrt(1.0 + std::max(u, std::sqrt(u)));
}

/// C2 = C1 * sqrt(2 log(1 + r^2 ||Sigma0|| T / (d sigma^2))).
inline double c2_factor(int d, double horizon, double sigma, double r,
                        const SpdMatrix& sigma0) {
  if (!(sigma > 0.0)) throw PreconditionViolated("c2_factor: sigma > 0 required");
  const double opnorm = spectral_decomposition(sigma0).eigenvalues(0);
  const double inner = r * r * opnorm * horizon / (d * sigma * sigma);
  return c1_factor(d, horizon) * std::sqrt(2.0 * std::log1p(inner));
}

/// Closed-form Bayesian-regret upper bound for Thompson sampling
/// (bound T1 in reports):
///   d sigma sqrt(T) C2 + 3 r sqrt(d) tr(Sigma0^{1/2}) C1 + sqrt(2 r^2 tr(Sigma0)).
inline double ts_upper_bound(int d, double horizon, double sigma, double r,
                             const SpdMatrix& sigma0) {
  const double c1 = c1_factor(d, horizon);
  const double c2 = c2_factor(d, horizon, sigma, r, sigma0);
  const double root_trace = fractional_power(sigma0, 0.5).trace();
  return d * sigma * std::sqrt(horizon) * c2 +
         3.0 * r * std::sqrt(static_cast<double>(d)) * root_trace * c1 +
         std::sqrt(2.0 * r * r * sigma0.trace());
}

/// Sub-exponential tail bound P[chi^2_d - d >= s] <= max{e^{-s^2/(8d)}, e^{-s/8}}.
inline double chi_square_tail_bound(int d, double s) {
  if (d < 1) throw PreconditionViolated("chi_square_tail_bound: d >= 1 required");
  if (!(s >= 0.0)) throw PreconditionViolated("chi_square_tail_bound: s >= 0 required");
  return std::max(std::exp(-s * s / (8.0 * d)), std::exp(-s / 8.0));
}

/// Radius beta = sqrt(d + max{24 log T, sqrt(24 d log T)}) for the
/// posterior-sample concentration events; calibrated so each per-step
/// event fails with probability at most 1/T^3.
inline double concentration_radius(int d, double horizon) {
  if (d < 1) throw PreconditionViolated("concentration_radius: d >= 1 required");
  if (!(horizon >= 1.0))
    throw InvalidHorizon("concentration_radius: horizon >= 1 required");
  const double logt = std::log(horizon);
  const double s = std::max(24.0 * logt, std::sqrt(24.0 * d * logt));
  return std::sqrt(d + s);
}

enum class LowerBoundVariant {
  kStatement,  // sum runs to min{T, d}
  kAppendix,   // sum runs to min{T, d-1}
};

/// Prior-dependent lower bound on the Bayesian regret of any policy
/// (bound T2 in reports): (r / (pi ||tau||_2)) sum_{i=2}^{m} (i-1) tau_i^2
/// with tau^2 the descending eigenvalues of Sigma0.
inline double minimax_lower_bound(double r, const Vector& tau_sq, std::int64_t horizon,
                                  LowerBoundVariant variant = LowerBoundVariant::kStatement) {
  const int d = static_cast<int>(tau_sq.size());
  if (d == 0) throw PreconditionViolated("minimax_lower_bound: empty spectrum");
  double norm_sq = 0.0;
  for (int i = 0; i < d; ++i) {
    if (!(tau_sq(i) >= 0.0))
      throw PreconditionViolated("minimax_lower_bound: tau^2 must be nonnegative");
    if (i > 0 && tau_sq(i) > tau_sq(i - 1) * (1.0 + 1e-12))
      throw PreconditionViolated("minimax_lower_bound: tau^2 must be descending");
    norm_sq += tau_sq(i);
  }
  if (!(norm_sq > 0.0))
    throw PreconditionViolated("minimax_lower_bound: tau must be nonzero");
  const std::int64_t cap = variant == LowerBoundVariant::kStatement
                               ? std::min<std::int64_t>(horizon, d)
                               : std::min<std::int64_t>(horizon, d - 1);
  double sum = 0.0;
  for (std::int64_t i = 2; i <= cap; ++i)
    sum += static_cast<double>(i - 1) * tau_sq(static_cast<int>(i - 1));
  return r / (std::numbers::pi * std::sqrt(norm_sq)) * sum;
}

/// Scaled-identity corollary of the lower bound: c S r d^{-1/2} min{T, d}^2.
inline double identity_prior_lower_bound(double scale, double r, int d,
                                         std::int64_t horizon,
                                         double c = kDefaultIdentityLowerC) {
  if (d < 1) throw PreconditionViolated("identity_prior_lower_bound: d >= 1");
  const double m = static_cast<double>(std::min<std::int64_t>(horizon, d));
  return c * scale * r * m * m / std::sqrt(static_cast<double>(d));
}

/// Zero-noise burn-in lower bound for the prior N(0, (S^2/d) Sigma) with the
/// Sigma-ellipsoid action set: (S / sqrt(d)) sum_{t=1}^T (E||Z|| - sqrt(t-1))_+.
inline double zhang_bound(double scale, int d, std::int64_t horizon) {
  if (!(scale >= 0.0)) throw PreconditionViolated("zhang_bound: S >= 0 required");
  if (d < 1) throw PreconditionViolated("zhang_bound: d >= 1 required");
  const double gaussian_norm = expected_gaussian_norm(d);
  double sum = 0.0;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const double term = gaussian_norm - std::sqrt(static_cast<double>(t - 1));
    if (term <= 0.0) break;  // terms only shrink as t grows
    sum += term;
  }
  return scale / std::sqrt(static_cast<double>(d)) * sum;
}

/// Log factors of the strongly-log-concave regret bound.
inline double logconcave_c1_factor(int d, double horizon) {
  if (d < 1) throw PreconditionViolated("logconcave_c1_factor: d >= 1 required");
  if (!(horizon >= 1.0))
    throw InvalidHorizon("logconcave_c1_factor: horizon >= 1 required");
  return std::sqrt(1.0 + std::log(horizon) / d);
}

inline double logconcave_c2_factor(int d, double horizon, double sigma, double r,
                                   const SpdMatrix& sigma0) {
  if (!(sigma > 0.0))
    throw PreconditionViolated("logconcave_c2_factor: sigma > 0 required");
  const double opnorm = spectral_decomposition(sigma0).eigenvalues(0);
  const double inner = horizon * r * r * opnorm / (d * sigma * sigma);
  return logconcave_c1_factor(d, horizon) * std::sqrt(std::log1p(inner));
}

/// The three bracketed terms of the log-concave regret bound (bound T3):
/// d sigma sqrt(T) C2', r sqrt(d) tr(Sigma0^{1/2}) C1', sqrt(tr(Sigma0)) r.
inline std::array<double, 3> logconcave_bound_terms(int d, double horizon,
                                                    double sigma, double r,
                                                    const SpdMatrix& sigma0) {
  const double c1 = logconcave_c1_factor(d, horizon);
  const double c2 = logconcave_c2_factor(d, horizon, sigma, r, sigma0);
  return {d * sigma * std::sqrt(horizon) * c2,
          r * std::sqrt(static_cast<double>(d)) *
              fractional_power(sigma0, 0.5).trace() * c1,
          std::sqrt(sigma0.trace()) * r};
}

/// C * (sum of the three terms above); C is a caller-supplied calibration.
inline double logconcave_upper_bound(int d, double horizon, double sigma, double r,
                                     const SpdMatrix& sigma0,
                                     double c = kDefaultLogConcaveC) {
  if (!(c > 0.0)) throw PreconditionViolated("logconcave_upper_bound: C > 0 required");
  const auto terms = logconcave_bound_terms(d, horizon, sigma, r, sigma0);
  return c * (terms[0] + terms[1] + terms[2]);
}

/// Evaluated closed-form bounds for one configuration.
struct BoundReport {
  int d = 0;
  double r = 0.0;
  double sigma = 0.0;
  double tr_sigma0 = 0.0;
  std::int64_t horizon = 0;
  double c1 = 0.0;
  double c2 = 0.0;
  double beta = 0.0;
  double upper_theorem1 = 0.0;
  double lower_theorem2 = 0.0;
  double lower_theorem2_appendix = 0.0;
  std::optional<double> lower_zhang;  // only for identity-proportional priors
  double theorem3_c = kDefaultLogConcaveC;
  std::array<double, 3> theorem3_terms{};
  double theorem3_value = 0.0;
};

inline BoundReport make_bound_report(int d, double r, double sigma,
                                     const SpdMatrix& sigma0, std::int64_t horizon,
                                     double logconcave_c = kDefaultLogConcaveC) {
  BoundReport rep;
  rep.d = d;
  rep.r = r;
  rep.sigma = sigma;
  rep.tr_sigma0 = sigma0.trace();
  rep.horizon = horizon;
  const double t = static_cast<double>(std::max<std::int64_t>(horizon, 1));
  rep.c1 = c1_factor(d, t);
  rep.c2 = c2_factor(d, t, sigma, r, sigma0);
  rep.beta = concentration_radius(d, t);
  rep.upper_theorem1 = ts_upper_bound(d, t, sigma, r, sigma0);
  const Vector tau_sq = spectral_decomposition(sigma0).eigenvalues;
  rep.lower_theorem2 =
      minimax_lower_bound(r, tau_sq, horizon, LowerBoundVariant::kStatement);
  rep.lower_theorem2_appendix =
      minimax_lower_bound(r, tau_sq, horizon, LowerBoundVariant::kAppendix);
  const double lmax = tau_sq(0);
  const double lmin = tau_sq(d - 1);
  if (lmax - lmin <= 1e-12 * lmax)
    rep.lower_zhang = zhang_bound(std::sqrt(sigma0.trace()), d, horizon);
  rep.theorem3_c = logconcave_c;
  rep.theorem3_terms = logconcave_bound_terms(d, t, sigma, r, sigma0);
  rep.theorem3_value = logconcave_upper_bound(d, t, sigma, r, sigma0, logconcave_c);
  return rep;
}

}  // namespace tslab
