#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "tslab/errors.hpp"
#include "tslab/rng.hpp"

namespace tslab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric positive (semi)definite matrix. Symmetrized on every
/// construction so the PD invariants stay testable under floating-point
/// drift; immutable afterwards and safe to share across threads.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Matrix& m) {
    if (m.rows() != m.cols())
      throw DimensionMismatch("SpdMatrix: matrix must be square");
    mat_ = 0.5 * (m + m.transpose());
  }

  static SpdMatrix identity(int d) { return SpdMatrix(Matrix::Identity(d, d)); }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Matrix& mat() const { return mat_; }
  double operator()(int i, int j) const { return mat_(i, j); }
  double trace() const { return mat_.trace(); }

  /// Smallest eigenvalue >= -1e-10 * largest eigenvalue.
  bool is_positive_semidefinite() const;

 private:
  Matrix mat_;
};

/// Eigendecomposition with eigenvalues sorted in descending order.
struct SpectralDecomposition {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns match eigenvalue order
};

inline SpectralDecomposition spectral_decomposition(const SpdMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.mat());
  if (solver.info() != Eigen::Success)
    throw SingularMatrix("spectral_decomposition: eigensolver failed");
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

inline bool SpdMatrix::is_positive_semidefinite() const {
  const auto spec = spectral_decomposition(*this);
  const double largest = std::max(spec.eigenvalues(0), 0.0);
  return spec.eigenvalues(dim() - 1) >= -1e-10 * largest;
}

/// Builds Q diag(evals) Q^T. All eigenvalues must be positive and the
/// rotation, when given, orthogonal.
inline SpdMatrix spd_from_eigenvalues(const Vector& evals,
                                      const std::optional<Matrix>& rotation = std::nullopt) {
  const int d = static_cast<int>(evals.size());
  if (d == 0) throw InvalidEigenvalue("spd_from_eigenvalues: empty spectrum");
  for (int i = 0; i < d; ++i)
    if (!(evals(i) > 0.0))
      throw InvalidEigenvalue("spd_from_eigenvalues: eigenvalues must be positive");
  if (!rotation) return SpdMatrix(Matrix(evals.asDiagonal()));
  const Matrix& q = *rotation;
  if (q.rows() != d || q.cols() != d)
    throw InvalidRotation("spd_from_eigenvalues: rotation has wrong shape");
  if (((q.transpose() * q) - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
    throw InvalidRotation("spd_from_eigenvalues: rotation is not orthogonal");
  return SpdMatrix(q * evals.asDiagonal() * q.transpose());
}

namespace detail {

// Spectrum with the clamp rule used for matrix powers: eigenvalues are
// floored at 1e-14 * lambda_max before exponentiation.
inline Vector clamped_spectrum(const SpectralDecomposition& spec) {
  Vector lams = spec.eigenvalues;
  const double floor_value = 1e-14 * std::max(lams(0), 0.0);
  for (int i = 0; i < lams.size(); ++i) lams(i) = std::max(lams(i), floor_value);
  return lams;
}

inline void require_positive_definite(const SpectralDecomposition& spec,
                                      const char* who) {
  const double lmax = spec.eigenvalues(0);
  const double lmin = spec.eigenvalues(spec.eigenvalues.size() - 1);
  if (!(lmax > 0.0) || lmin <= 1e-12 * lmax)
    throw SingularMatrix(std::string(who) + ": matrix is singular or indefinite");
}

}  // namespace detail

/// M^p for p in (0, 1], via the spectral path: Q diag(lambda^p) Q^T.
inline SpdMatrix fractional_power(const SpdMatrix& m, double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw PreconditionViolated("fractional_power: p must lie in (0, 1]");
  const auto spec = spectral_decomposition(m);
  detail::require_positive_definite(spec, "fractional_power");
  Vector lams = detail::clamped_spectrum(spec);
  for (int i = 0; i < lams.size(); ++i) lams(i) = std::pow(lams(i), p);
  return SpdMatrix(spec.eigenvectors * lams.asDiagonal() *
                   spec.eigenvectors.transpose());
}

/// tr(M^p) for arbitrary real p (used with negative exponents for the
/// burn-in traces). Eigenvalues are clamped as in fractional_power.
inline double trace_power(const SpdMatrix& m, double p) {
  const auto spec = spectral_decomposition(m);
  detail::require_positive_definite(spec, "trace_power");
  const Vector lams = detail::clamped_spectrum(spec);
  double sum = 0.0;
  for (int i = 0; i < lams.size(); ++i) sum += std::pow(lams(i), p);
  return sum;
}

/// x^T M^p x for arbitrary real p.
inline double power_quadratic_form(const SpdMatrix& m, double p, const Vector& x) {
  if (x.size() != m.dim())
    throw DimensionMismatch("power_quadratic_form: dimension mismatch");
  const auto spec = spectral_decomposition(m);
  detail::require_positive_definite(spec, "power_quadratic_form");
  const Vector lams = detail::clamped_spectrum(spec);
  const Vector w = spec.eigenvectors.transpose() * x;
  double sum = 0.0;
  for (int i = 0; i < lams.size(); ++i)
    sum += std::pow(lams(i), p) * w(i) * w(i);
  return sum;
}

/// log det M as the sum of log eigenvalues.
inline double log_det(const SpdMatrix& m) {
  const auto spec = spectral_decomposition(m);
  detail::require_positive_definite(spec, "log_det");
  double sum = 0.0;
  for (int i = 0; i < spec.eigenvalues.size(); ++i)
    sum += std::log(spec.eigenvalues(i));
  return sum;
}

/// Squared Mahalanobis norm x^T M x.
inline double mahalanobis_sq(const Vector& x, const SpdMatrix& m) {
  if (x.size() != m.dim())
    throw DimensionMismatch("mahalanobis_sq: dimension mismatch");
  double v = x.dot(m.mat() * x);
  // PSD quadratic forms can land a hair below zero in floating point.
  if (v < 0.0 && v > -1e-12 * std::max(1.0, m.mat().cwiseAbs().maxCoeff()))
    v = 0.0;
  return v;
}

/// Sherman-Morrison step: given Vinv = V^{-1}, returns (V + u u^T)^{-1}.
inline SpdMatrix rank_one_precision_update(const SpdMatrix& vinv, const Vector& u) {
  if (u.size() != vinv.dim())
    throw DimensionMismatch("rank_one_precision_update: dimension mismatch");
  const Vector w = vinv.mat() * u;
  const double denom = 1.0 + u.dot(w);
  return SpdMatrix(vinv.mat() - (w * w.transpose()) / denom);
}

/// Draw from N(mean, cov) as mean + L z with L the Cholesky factor of cov;
/// deterministic given the stream state.
inline Vector gaussian_sample(const Vector& mean, const SpdMatrix& cov,
                              RngStream& rng) {
  if (mean.size() != cov.dim())
    throw DimensionMismatch("gaussian_sample: dimension mismatch");
  Eigen::LLT<Matrix> llt(cov.mat());
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("gaussian_sample: covariance is not positive definite");
  Vector z(mean.size());
  for (int i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + llt.matrixL() * z;
}

/// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the sign
/// convention fixed by the diagonal of R.
inline Matrix random_orthogonal(int d, RngStream& rng) {
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

/// Random SPD matrix with eigenvalues log-uniform over [lmax/cond, lmax].
inline SpdMatrix random_spd(int d, double lmax, double cond, RngStream& rng) {
  if (!(lmax > 0.0) || !(cond >= 1.0))
    throw PreconditionViolated("random_spd: lmax > 0 and cond >= 1 required");
  Vector evals(d);
  evals(0) = lmax;
  for (int i = 1; i < d; ++i)
    evals(i) = lmax * std::pow(cond, -rng.uniform());
  if (d > 1) evals(d - 1) = lmax / cond;  // hit the requested condition number
  std::sort(evals.data(), evals.data() + d, std::greater<double>());
  return spd_from_eigenvalues(evals, random_orthogonal(d, rng));
}

/// Prior spectra with polynomially scaling eigenvalues: (d-1)^{2a} >= ...
/// >= 1^{2a}, with the smallest eigenvalue substituted by 1 to keep the
/// matrix nonsingular.
inline Vector polynomial_prior_eigenvalues(int d, double alpha) {
  if (d < 1) throw PreconditionViolated("polynomial_prior_eigenvalues: d >= 1");
  Vector evals(d);
  for (int j = 0; j < d - 1; ++j)
    evals(j) = std::pow(static_cast<double>(d - 1 - j), 2.0 * alpha);
  evals(d - 1) = 1.0;
  return evals;
}

}  // namespace tslab
