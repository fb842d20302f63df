#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sparsepr/rng.hpp"

namespace sparsepr {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A real signal in R^p. The support is always derived from the values, never
/// stored separately, so it cannot go stale.
class SignalVector {
 public:
  SignalVector() = default;
  explicit SignalVector(Vector values) : values_(std::move(values)) {}
  static SignalVector zeros(Index p) { return SignalVector(Vector::Zero(p)); }

  const Vector& values() const noexcept { return values_; }
  Vector& values() noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  double operator[](Index k) const { return values_[k]; }

  /// Indices of the nonzero entries, ascending.
  std::vector<Index> support() const;
  Index sparsity() const;
  double squared_norm() const { return values_.squaredNorm(); }
  bool is_zero() const { return sparsity() == 0; }

  SignalVector operator-() const { return SignalVector(-values_); }

 private:
  Vector values_;
};

/// Measurements y_j = (x_j^T beta)^2 + eps_j with rows x_j of X.
struct Instance {
  Matrix X;                          // n x p
  Vector y;                          // n
  std::optional<double> sigma;       // noise standard deviation, when known
  std::optional<SignalVector> truth;

  Index n() const noexcept { return X.rows(); }
  Index p() const noexcept { return X.cols(); }

  /// Rows `rows` of this instance, in the given order. Truth and sigma carry over.
  Instance subset(const std::vector<Index>& rows) const;
  /// Throws InvalidArgument when y does not match the row count of X.
  void validate() const;
};

struct NoiseEstimate {
  double phi_sq = 0.0;     // estimate of ||beta||_2^2
  double sigma_hat = 0.0;
  bool clamped = false;    // radicand mean(y^2) - 3 phi^4 was negative
};

/// X b, touching only the support columns when b is sparse. Every X b product
/// in the library goes through here so noiseless residuals vanish exactly.
Vector design_product(const Matrix& X, const Vector& b);

SignalVector generate_signal(Index p, Index s, Rng& rng);

/// Draws X with i.i.d. N(0,1) entries (row by row), then the noise.
Instance generate_instance(const SignalVector& beta, Index n, double sigma, Rng& rng);

/// Noise level for a noise-to-signal ratio, sigma = nsr * ||beta||_2^2.
double nsr_to_sigma(double nsr, const SignalVector& beta);

/// Whichever of {reference, -reference} is closer to candidate; ties go to +reference.
SignalVector align_sign(const SignalVector& candidate, const SignalVector& reference);

NoiseEstimate estimate_noise(const Vector& y);

}  // namespace sparsepr
