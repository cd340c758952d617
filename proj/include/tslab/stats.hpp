#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "tslab/errors.hpp"
#include "tslab/rng.hpp"

namespace tslab {

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Regularized lower incomplete gamma P(a, x), series for x < a+1 and a
/// Lentz continued fraction otherwise.
inline double regularized_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw PreconditionViolated("gamma_p: a > 0, x >= 0 required");
  if (x == 0.0) return 0.0;
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(log_prefactor);
  }
  // Continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(log_prefactor) * h;
}

inline double chi_squared_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

/// E ||Z|| for Z ~ N(0, I_d): sqrt(2) Gamma((d+1)/2) / Gamma(d/2).
inline double expected_gaussian_norm(int d) {
  if (d < 1) throw PreconditionViolated("expected_gaussian_norm: d >= 1");
  return std::numbers::sqrt2 *
         std::exp(std::lgamma(0.5 * (d + 1)) - std::lgamma(0.5 * d));
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
inline double ks_statistic(std::vector<double> values,
                           const std::function<double(double)>& cdf) {
  if (values.empty()) throw PreconditionViolated("ks_statistic: empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = cdf(values[i]);
    dmax = std::max(dmax, f - static_cast<double>(i) / n);
    dmax = std::max(dmax, static_cast<double>(i + 1) / n - f);
  }
  return dmax;
}

/// Asymptotic KS critical value at the 1% level.
inline double ks_critical_1pct(std::size_t n) {
  return 1.62762 / std::sqrt(static_cast<double>(n));
}

struct WilsonInterval {
  double phat = 0.0;
  double low = 0.0;
  double high = 0.0;
  double half_width = 0.0;
};

/// Wilson score interval for a binomial proportion (default 95%).
inline WilsonInterval wilson_interval(std::int64_t successes, std::int64_t n,
                                      double z = 1.959963984540054) {
  if (n <= 0) throw PreconditionViolated("wilson_interval: n > 0 required");
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  WilsonInterval w;
  w.phat = phat;
  // The interval always contains phat; clamping removes fp residue at k=0, n.
  w.low = std::min(std::max(0.0, center - half), phat);
  w.high = std::max(std::min(1.0, center + half), phat);
  w.half_width = half;
  return w;
}

/// Streaming mean/variance (Welford).
class RunningMoments {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double standard_error() const {
    return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit least_squares_fit(const std::vector<double>& xs,
                                 const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DimensionMismatch("least_squares_fit: size mismatch");
  if (xs.size() < 2) throw PreconditionViolated("least_squares_fit: need >= 2 points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

namespace detail {

// sum_i |x - sorted[i]| via prefix sums; prefix[k] = sum of first k entries.
inline double abs_distance_sum(const std::vector<double>& sorted,
                               const std::vector<double>& prefix, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - sorted.begin());
  const double below = prefix[k];
  const double above = prefix[sorted.size()] - below;
  return (static_cast<double>(k) * x - below) +
         (above - static_cast<double>(sorted.size() - k) * x);
}

inline std::vector<double> prefix_sums(const std::vector<double>& sorted) {
  std::vector<double> p(sorted.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) p[i + 1] = p[i] + sorted[i];
  return p;
}

}  // namespace detail

/// Energy distance statistic between two 1-d samples, O((n+m) log(n+m)).
inline double energy_statistic_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw PreconditionViolated("energy_statistic_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto pa = detail::prefix_sums(a);
  const auto pb = detail::prefix_sums(b);
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  double within_a = 0.0, within_b = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    within_a += (2.0 * static_cast<double>(i) + 1.0 - n) * a[i];
    cross += detail::abs_distance_sum(b, pb, a[i]);
  }
  for (std::size_t j = 0; j < b.size(); ++j)
    within_b += (2.0 * static_cast<double>(j) + 1.0 - m) * b[j];
  return 2.0 * cross / (n * m) - 2.0 * within_a / (n * n) -
         2.0 * within_b / (m * m);
}

/// Energy distance statistic between two multivariate samples (rows), O(n^2 d).
inline double energy_statistic(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw DimensionMismatch("energy_statistic: dim mismatch");
  const auto pair_sum = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < y.rows(); ++j)
        s += (x.row(i) - y.row(j)).norm();
    return s;
  };
  const double n = static_cast<double>(a.rows());
  const double m = static_cast<double>(b.rows());
  double within_a = 0.0, within_b = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.rows(); ++j)
      within_a += (a.row(i) - a.row(j)).norm();
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index j = i + 1; j < b.rows(); ++j)
      within_b += (b.row(i) - b.row(j)).norm();
  return 2.0 * pair_sum(a, b) / (n * m) - 2.0 * within_a / (n * n) -
         2.0 * within_b / (m * m);
}

/// Paired-swap permutation p-value for the two-sample energy test. Sample i
/// of `a` is paired with sample i of `b`; under exchangeability, swapping a
/// pair leaves the joint law invariant.
inline double energy_permutation_pvalue_1d(const std::vector<double>& a,
                                           const std::vector<double>& b,
                                           int n_permutations, RngStream& rng) {
  if (a.size() != b.size()) throw DimensionMismatch("paired permutation: size mismatch");
  const double observed = energy_statistic_1d(a, b);
  int at_least = 0;
  std::vector<double> pa(a.size()), pb(b.size());
  for (int rep = 0; rep < n_permutations; ++rep) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool swap = rng.uniform() < 0.5;
      pa[i] = swap ? b[i] : a[i];
      pb[i] = swap ? a[i] : b[i];
    }
    if (energy_statistic_1d(pa, pb) >= observed) ++at_least;
  }
  return (1.0 + at_least) / (1.0 + n_permutations);
}

inline double energy_permutation_pvalue(const Eigen::MatrixXd& a,
                                        const Eigen::MatrixXd& b,
                                        int n_permutations, RngStream& rng) {
  if (a.rows() != b.rows()) throw DimensionMismatch("paired permutation: size mismatch");
  const double observed = energy_statistic(a, b);
  int at_least = 0;
  Eigen::MatrixXd pa = a, pb = b;
  for (int rep = 0; rep < n_permutations; ++rep) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (rng.uniform() < 0.5) {
        pa.row(i) = b.row(i);
        pb.row(i) = a.row(i);
      } else {
        pa.row(i) = a.row(i);
        pb.row(i) = b.row(i);
      }
    }
    if (energy_statistic(pa, pb) >= observed) ++at_least;
  }
  return (1.0 + at_least) / (1.0 + n_permutations);
}

}  // namespace tslab
