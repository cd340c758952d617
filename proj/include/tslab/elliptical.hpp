#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "tslab/errors.hpp"
#include "tslab/linalg.hpp"
#include "tslab/parallel.hpp"
#include "tslab/rng.hpp"

namespace tslab {

/// Rank-one potential chain: V_{t+1} = V_t + u_t u_t^T with ||u_t|| <= 1.
struct PotentialSequence {
  SpdMatrix v0;
  std::vector<Vector> updates;

  int dim() const { return v0.dim(); }
  int length() const { return static_cast<int>(updates.size()); }
};

inline PotentialSequence make_potential_sequence(SpdMatrix v0,
                                                 std::vector<Vector> updates) {
  for (const auto& u : updates) {
    if (u.size() != v0.dim())
      throw DimensionMismatch("make_potential_sequence: update dimension mismatch");
    if (u.norm() > 1.0 + 1e-12)
      throw PreconditionViolated("make_potential_sequence: ||u|| <= 1 required");
  }
  return PotentialSequence{std::move(v0), std::move(updates)};
}

namespace detail {

inline Matrix inverse_of(const Matrix& v, const char* who) {
  Eigen::LLT<Matrix> llt(v);
  if (llt.info() != Eigen::Success) throw SingularMatrix(std::string(who) + ": singular matrix");
  return llt.solve(Matrix::Identity(v.rows(), v.cols()));
}

inline void check_exponent(double p, const char* who) {
  if (!(p >= 0.0 && p <= 1.0))
    throw PreconditionViolated(std::string(who) + ": p must lie in [0, 1]");
}

// log det(V_T)/det(V_0) through the determinant-lemma telescope
// sum_t log(1 + u_t^T V_t^{-1} u_t). Algebraically identical to the log-det
// difference but immune to the catastrophic cancellation that a difference
// of two O(1) log-determinants suffers when the updates are tiny; the
// fractional powers applied downstream amplify any such error. Uses fresh
// factorizations per step, independent of the Sherman-Morrison chain that
// evaluates the left-hand side.
inline double telescoped_log_det_ratio(const PotentialSequence& seq,
                                       const char* who) {
  Matrix v = seq.v0.mat();
  Eigen::LLT<Matrix> llt(v);
  if (llt.info() != Eigen::Success)
    throw SingularMatrix(std::string(who) + ": singular matrix");
  double sum = 0.0;
  for (const auto& u : seq.updates) {
    const double q = std::max(0.0, u.dot(llt.solve(u)));
    sum += std::log1p(q);
    v.noalias() += u * u.transpose();
    llt.compute(v);
    if (llt.info() != Eigen::Success)
      throw SingularMatrix(std::string(who) + ": singular matrix");
  }
  return sum;
}

}  // namespace detail

/// sum_t ||u_t||_{V_t^{-1}}^{2p}, with V_t^{-1} maintained by Sherman-Morrison
/// and refreshed from a full factorization every 64 steps.
inline double lhs_potential(const PotentialSequence& seq, double p) {
  detail::check_exponent(p, "lhs_potential");
  Matrix vacc = seq.v0.mat();
  Matrix vinv = detail::inverse_of(vacc, "lhs_potential");
  double sum = 0.0;
  int since_refresh = 0;
  for (const auto& u : seq.updates) {
    const Vector w = vinv * u;
    const double q = std::max(0.0, u.dot(w));
    sum += std::pow(q, p);
    vinv.noalias() -= (w * w.transpose()) / (1.0 + q);
    vacc.noalias() += u * u.transpose();
    if (++since_refresh == 64) {
      vinv = detail::inverse_of(vacc, "lhs_potential");
      since_refresh = 0;
    }
  }
  return sum;
}

/// Right-hand side of the generalized potential inequality:
///   2^p T^{1-p} (log det V_T / det V_0)^p + (3 / 2p)(tr V_0^{-p} - tr V_T^{-p}),
/// with the p = 0 convention evaluating to the log-det ratio itself.
inline double rhs_generalized(const PotentialSequence& seq, double p) {
  detail::check_exponent(p, "rhs_generalized");
  const double logdet_ratio = detail::telescoped_log_det_ratio(seq, "rhs_generalized");
  if (p == 0.0) return logdet_ratio;
  Matrix vt = seq.v0.mat();
  for (const auto& u : seq.updates) vt.noalias() += u * u.transpose();
  const SpdMatrix v_end(vt);
  const double t = static_cast<double>(seq.length());
  const double first =
      std::pow(2.0, p) * std::pow(t, 1.0 - p) * std::pow(logdet_ratio, p);
  const double second =
      1.5 / p * (trace_power(seq.v0, -p) - trace_power(v_end, -p));
  return first + second;
}

/// Classic potential bound 2 log det(V_T)/det(V_0); requires V_0 >= I.
inline double rhs_classic(const PotentialSequence& seq) {
  const auto spec = spectral_decomposition(seq.v0);
  if (spec.eigenvalues(seq.dim() - 1) < 1.0 - 1e-12)
    throw HypothesisViolated("rhs_classic: V0 >= I required");
  return 2.0 * detail::telescoped_log_det_ratio(seq, "rhs_classic");
}

/// Per-step two-case inequality behind the generalized bound. For
/// ||u||^2_{V^{-1}} <= 2 the norm is dominated by the log-det increment,
/// otherwise by the trace difference.
struct PerStepCase {
  bool small_norm_branch = true;
  double lhs = 0.0;    // ||u||_{V^{-1}}^{2p}
  double bound = 0.0;  // active branch bound
};

inline PerStepCase per_step_case_check(const SpdMatrix& v, const Vector& u, double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw PreconditionViolated("per_step_case_check: p must lie in (0, 1]");
  if (u.norm() > 1.0 + 1e-12)
    throw PreconditionViolated("per_step_case_check: ||u|| <= 1 required");
  const Matrix vinv = detail::inverse_of(v.mat(), "per_step_case_check");
  const double q = std::max(0.0, u.dot(vinv * u));
  PerStepCase out;
  out.lhs = std::pow(q, p);
  if (q <= 2.0) {
    out.small_norm_branch = true;
    // det(V + uu^T)/det V = 1 + q by the matrix determinant lemma
    out.bound = std::pow(2.0 * std::log1p(q), p);
  } else {
    out.small_norm_branch = false;
    const SpdMatrix updated(v.mat() + u * u.transpose());
    out.bound = 1.5 / p * (trace_power(v, -p) - trace_power(updated, -p));
  }
  return out;
}

/// Interpolation inequality used in the large-norm branch:
///   (2/3) ||u||_{V^{-1}}^{2p} <= ||u||^2_{V^{-1-p}} / (1 + ||u||^2_{V^{-1}}),
/// valid for ||u|| <= 1 and ||u||^2_{V^{-1}} >= 2.
struct HolderCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

inline HolderCheck holder_lemma_check(const SpdMatrix& v, const Vector& u, double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw PreconditionViolated("holder_lemma_check: p must lie in (0, 1]");
  if (u.norm() > 1.0 + 1e-12)
    throw PreconditionViolated("holder_lemma_check: ||u|| <= 1 required");
  const Matrix vinv = detail::inverse_of(v.mat(), "holder_lemma_check");
  const double q = std::max(0.0, u.dot(vinv * u));
  if (q < 2.0 - 1e-12)
    throw PreconditionViolated("holder_lemma_check: ||u||^2_{V^{-1}} >= 2 required");
  HolderCheck out;
  out.lhs = 2.0 / 3.0 * std::pow(q, p);
  out.rhs = power_quadratic_form(v, -1.0 - p, u) / (1.0 + q);
  return out;
}

/// Basis-vector chain u_t = e_t on V_0 = diag(lambda); for this instance the
/// potential sum collapses to tr(V_0^{-p}) exactly.
inline PotentialSequence tightness_instance(const Vector& lams) {
  const int d = static_cast<int>(lams.size());
  if (d == 0) throw InvalidEigenvalue("tightness_instance: empty spectrum");
  for (int i = 0; i < d; ++i)
    if (!(lams(i) > 0.0))
      throw InvalidEigenvalue("tightness_instance: eigenvalues must be positive");
  std::vector<Vector> updates;
  updates.reserve(d);
  for (int t = 0; t < d; ++t) {
    Vector e = Vector::Zero(d);
    e(t) = 1.0;
    updates.push_back(std::move(e));
  }
  return PotentialSequence{SpdMatrix(Matrix(lams.asDiagonal())), std::move(updates)};
}

struct FuzzOptions {
  int max_d = 8;
  int max_t = 200;
  double max_log10_cond = 8.0;
  std::vector<double> p_values = {0.05, 0.1, 0.25, 0.5, 0.75, 1.0};
  double rel_tolerance = 1e-8;
};

struct FuzzReport {
  std::int64_t instances = 0;
  std::int64_t violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::uint64_t worst_instance_seed = 0;
};

/// Deterministic fuzz instance: adversarial update mix including exact unit
/// norms, near-unit norms, zero vectors, and directions aligned with the
/// smallest eigenvector of the running V_t.
inline std::pair<PotentialSequence, double> generate_fuzz_instance(
    std::uint64_t seed, std::uint64_t index, const FuzzOptions& opt = {}) {
  RngStream rng(seed, index, stream_role::kFuzz);
  const int d = 1 + static_cast<int>(rng.below(opt.max_d));
  const int t_len = 1 + static_cast<int>(rng.below(opt.max_t));
  const double p = opt.p_values[rng.below(opt.p_values.size())];
  const double lmax = std::pow(10.0, rng.uniform(-2.0, 2.0));
  const double cond = std::pow(10.0, rng.uniform(0.0, opt.max_log10_cond));
  const SpdMatrix v0 = random_spd(d, lmax, cond, rng);

  Matrix vacc = v0.mat();
  std::vector<Vector> updates;
  updates.reserve(t_len);
  const auto random_direction = [&] {
    Vector dir(d);
    double norm = 0.0;
    do {
      for (int i = 0; i < d; ++i) dir(i) = rng.normal();
      norm = dir.norm();
    } while (norm < 1e-12);
    return Vector(dir / norm);
  };
  for (int t = 0; t < t_len; ++t) {
    const double mode = rng.uniform();
    Vector u;
    if (mode < 0.25) {
      u = random_direction();  // exactly on the unit sphere
    } else if (mode < 0.40) {
      u = random_direction() * (1.0 - std::pow(10.0, -rng.uniform(3.0, 12.0)));
    } else if (mode < 0.50) {
      u = random_direction() * std::pow(10.0, -rng.uniform(0.0, 8.0));
    } else if (mode < 0.55) {
      u = Vector::Zero(d);
    } else if (mode < 0.80) {
      u = random_direction() * rng.uniform();
    } else {
      // align with the softest direction of the running potential
      const auto spec = spectral_decomposition(SpdMatrix(vacc));
      u = spec.eigenvectors.col(d - 1);
    }
    vacc.noalias() += u * u.transpose();
    updates.push_back(std::move(u));
  }
  return {PotentialSequence{v0, std::move(updates)}, p};
}

/// Fuzz campaign for the generalized potential inequality. The margin is
/// (rhs - lhs) / max(1, |rhs|); a violation is a margin below -rel_tolerance.
inline FuzzReport fuzz_generalized_lemma(std::int64_t n_instances, std::uint64_t seed,
                                         const FuzzOptions& opt = {}) {
  FuzzReport report;
  report.instances = n_instances;
  if (n_instances <= 0) return report;
  std::vector<double> margins(static_cast<std::size_t>(n_instances));
  parallel_for(n_instances, [&](std::int64_t i) {
    const auto [seq, p] = generate_fuzz_instance(seed, static_cast<std::uint64_t>(i), opt);
    const double lhs = lhs_potential(seq, p);
    const double rhs = rhs_generalized(seq, p);
    margins[static_cast<std::size_t>(i)] = (rhs - lhs) / std::max(1.0, std::fabs(rhs));
  });
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < n_instances; ++i) {
    const double m = margins[static_cast<std::size_t>(i)];
    if (m < report.worst_margin) {
      report.worst_margin = m;
      report.worst_instance_seed = static_cast<std::uint64_t>(i);
    }
    if (m < -opt.rel_tolerance) ++report.violations;
  }
  return report;
}

}  // namespace tslab
