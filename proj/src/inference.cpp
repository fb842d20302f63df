#include "sparsepr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "sparsepr/errors.hpp"
#include "sparsepr/quantiles.hpp"

namespace sparsepr {
namespace {

double nonzero_squared_norm(const SignalVector& b, const char* who) {
  const double sq = b.squared_norm();
  if (!(sq > 0.0)) {
    throw SingularModel(std::string(who) + ": Fisher information is singular at the zero signal");
  }
  return sq;
}

void check_coordinate(Index k, Index p, const char* who) {
  if (k < 0 || k >= p) {
    throw InvalidArgument(std::string(who) + ": coordinate " + std::to_string(k) +
                          " out of range [0, " + std::to_string(p) + ")");
  }
}

void check_alpha(double alpha, const char* who) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument(std::string(who) + ": alpha must lie in (0, 1), got " +
                          std::to_string(alpha));
  }
}

double sigma_over_root_n(const DebiasedEstimate& est) {
  if (est.n_half < 1) throw DegenerateEstimate("estimate has no held-out sample size");
  return est.sigma / std::sqrt(static_cast<double>(est.n_half));
}

}  // namespace

double DebiasedEstimate::combined_tau_sq(Index k) const {
  const double t1 = tau1_sq[k];
  const double t2 = tau2_sq[k];
  if (!(t1 > 0.0) || !(t2 > 0.0)) {
    throw DegenerateEstimate("nonpositive tau^2 at coordinate " + std::to_string(k));
  }
  return t1 * t2 / (t1 + t2);
}

Matrix fisher_info(const SignalVector& b) {
  const double sq = nonzero_squared_norm(b, "fisher_info");
  const Vector& v = b.values();
  Matrix info = 2.0 * v * v.transpose();
  info.diagonal().array() += sq;
  return info;
}

CorrectionVector correction_vector(const SignalVector& b, Index k) {
  const double sq = nonzero_squared_norm(b, "correction_vector");
  check_coordinate(k, b.size(), "correction_vector");
  CorrectionVector cv;
  cv.coordinate = k;
  cv.w = (b[k] / (3.0 * sq * sq)) * b.values();
  cv.w[k] -= 1.0 / (2.0 * sq);
  return cv;
}

Vector debias_half(const SignalVector& beta_tilde, const Instance& held_out) {
  const double sq = nonzero_squared_norm(beta_tilde, "debias_half");
  const Vector g = gradient(beta_tilde, held_out);
  const Vector& b = beta_tilde.values();
  return b - g / (2.0 * sq) + (b.dot(g) / (3.0 * sq * sq)) * b;
}

double tau_sq(const SignalVector& b, Index k) {
  const CorrectionVector cv = correction_vector(b, k);
  const double proj = b.values().dot(cv.w);
  return b.squared_norm() * cv.w.squaredNorm() + 2.0 * proj * proj;
}

Vector tau_sq_all(const SignalVector& b) {
  const double sq = nonzero_squared_norm(b, "tau_sq");
  return (1.0 / (4.0 * sq)) - b.values().array().square() / (6.0 * sq * sq);
}

void combine_halves(DebiasedEstimate& est) {
  const Index p = est.beta_hat1.size();
  if (est.beta_hat2.size() != p || est.tau1_sq.size() != p || est.tau2_sq.size() != p) {
    throw InvalidArgument("combine_halves: inconsistent vector lengths");
  }
  if (p > 0 && (!(est.tau1_sq.minCoeff() > 0.0) || !(est.tau2_sq.minCoeff() > 0.0))) {
    throw DegenerateEstimate("combine_halves: nonpositive tau^2");
  }
  est.a = est.tau2_sq.array() / (est.tau1_sq + est.tau2_sq).array();
  est.beta_swap = est.a.array() * est.beta_hat1.array() +
                  (1.0 - est.a.array()) * est.beta_hat2.array();
}

DebiasedEstimate swap_estimate(const Instance& full, const TwfTuning& tuning,
                               std::optional<double> sigma, Rng& rng) {
  full.validate();
  const Index rows = full.n();
  if (rows % 2 != 0) {
    throw InvalidArgument("swap_estimate: need an even number of rows, got " + std::to_string(rows));
  }
  const Index n = rows / 2;
  if (n < 2) throw InvalidArgument("swap_estimate: each half needs at least 2 rows");
  if (sigma && !(*sigma >= 0.0)) throw InvalidArgument("swap_estimate: sigma must be nonnegative");

  std::vector<Index> perm(static_cast<std::size_t>(rows));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = rows - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<Index> first(perm.begin(), perm.begin() + n);
  std::vector<Index> second(perm.begin() + n, perm.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  const Instance half1 = full.subset(first);
  const Instance half2 = full.subset(second);

  const SignalEstimate round1 = run_twf(half1, tuning);
  const SignalEstimate round2 = run_twf(half2, tuning);
  if (round1.beta_tilde.is_zero() || round2.beta_tilde.is_zero()) {
    throw DegenerateEstimate("swap_estimate: TWF returned the zero vector on " +
                             std::string(round1.beta_tilde.is_zero() ? "the first" : "the second") +
                             " half");
  }

  DebiasedEstimate est;
  est.n_half = n;
  est.beta_tilde1 = round1.beta_tilde;
  est.beta_tilde2 = align_sign(round1.beta_tilde, round2.beta_tilde);
  est.iterations1 = round1.iterations;
  est.iterations2 = round2.iterations;

  est.beta_hat1 = debias_half(est.beta_tilde1, half2);
  est.beta_hat2 = debias_half(est.beta_tilde2, half1);
  est.tau1_sq = tau_sq_all(est.beta_tilde1);
  est.tau2_sq = tau_sq_all(est.beta_tilde2);
  combine_halves(est);

  std::set<Index> joint;
  for (Index k : est.beta_tilde1.support()) joint.insert(k);
  for (Index k : est.beta_tilde2.support()) joint.insert(k);
  est.s_hat = static_cast<Index>(joint.size());

  if (sigma) {
    est.sigma = *sigma;
  } else {
    est.sigma = estimate_noise(full.y).sigma_hat;
    est.sigma_estimated = true;
  }
  return est;
}

Interval coordinate_ci(const DebiasedEstimate& est, Index k, double alpha) {
  check_alpha(alpha, "coordinate_ci");
  check_coordinate(k, est.p(), "coordinate_ci");
  const double z = normal_quantile(1.0 - 0.5 * alpha);
  const double h = sigma_over_root_n(est) * z * std::sqrt(est.combined_tau_sq(k));
  return {est.beta_swap[k] - h, est.beta_swap[k] + h, 1.0 - alpha};
}

double simultaneous_max_ci(const DebiasedEstimate& est, double alpha) {
  check_alpha(alpha, "simultaneous_max_ci");
  if (est.s_hat < 1) throw DegenerateEstimate("simultaneous_max_ci: estimated support is empty");
  const double z = normal_quantile(1.0 - 0.5 * alpha);
  return std::sqrt(3.0 / (8.0 * static_cast<double>(est.s_hat))) * sigma_over_root_n(est) * z;
}

Matrix covariance_matrix(const DebiasedEstimate& est, const SignalVector& beta_tilde1,
                         const SignalVector& beta_tilde2) {
  const double sq1 = nonzero_squared_norm(beta_tilde1, "covariance_matrix");
  const double sq2 = nonzero_squared_norm(beta_tilde2, "covariance_matrix");
  const Index p = est.p();
  if (beta_tilde1.size() != p || beta_tilde2.size() != p || est.a.size() != p) {
    throw InvalidArgument("covariance_matrix: estimate and TWF outputs disagree on dimension");
  }
  // Per half, B W^T W + 2 (W b)(W b)^T collapses to I/(4B) - b b^T/(6B^2).
  const Vector& a = est.a;
  const Vector u1 = a.cwiseProduct(beta_tilde1.values());
  const Vector u2 = (1.0 - a.array()).matrix().cwiseProduct(beta_tilde2.values());
  Matrix V = -(u1 * u1.transpose()) / (6.0 * sq1 * sq1) - (u2 * u2.transpose()) / (6.0 * sq2 * sq2);
  V.diagonal().array() +=
      a.array().square() / (4.0 * sq1) + (1.0 - a.array()).square() / (4.0 * sq2);
  return V;
}

Interval scheffe_ci(const DebiasedEstimate& est, const Matrix& V, const Vector& h, double alpha) {
  check_alpha(alpha, "scheffe_ci");
  const Index p = est.p();
  if (V.rows() != p || V.cols() != p || h.size() != p) {
    throw InvalidArgument("scheffe_ci: dimension mismatch");
  }
  if (h.isZero(0.0)) throw InvalidArgument("scheffe_ci: direction h must be nonzero");
  double quad = h.dot(V * h);
  if (quad < -1e-10) {
    throw NumericalError("scheffe_ci: h^T V h = " + std::to_string(quad) + " is negative");
  }
  quad = std::max(quad, 0.0);
  const double chi = chi_sq_quantile(1.0 - alpha, static_cast<int>(p));
  const double sn = sigma_over_root_n(est);
  const double half = std::sqrt(sn * sn * chi * quad);
  const double center = h.dot(est.beta_swap);
  return {center - half, center + half, 1.0 - alpha};
}

}  // namespace sparsepr
