#pragma once

#include <optional>

#include "sparsepr/model.hpp"
#include "sparsepr/twf.hpp"

namespace sparsepr {

/// Least-favorable correction direction for coordinate k at b:
/// w = -(1/2) I(b)^{-1} e_k with I(b) = ||b||^2 I + 2 b b^T.
struct CorrectionVector {
  Vector w;
  Index coordinate = 0;
};

struct DebiasedEstimate {
  Vector beta_hat1;   // debiased with beta_tilde1 and the second half
  Vector beta_hat2;   // debiased with beta_tilde2 and the first half
  Vector tau1_sq;
  Vector tau2_sq;
  Vector a;           // swap weights tau2^2 / (tau1^2 + tau2^2)
  Vector beta_swap;
  Index s_hat = 0;    // |supp(beta_tilde1) U supp(beta_tilde2)|
  Index n_half = 0;
  double sigma = 0.0;
  bool sigma_estimated = false;

  // TWF outputs of the two rounds; beta_tilde2 already sign-aligned to beta_tilde1.
  SignalVector beta_tilde1;
  SignalVector beta_tilde2;
  int iterations1 = 0;
  int iterations2 = 0;

  Index p() const noexcept { return beta_swap.size(); }
  /// tau1^2 tau2^2 / (tau1^2 + tau2^2), the variance proxy of beta_swap[k] in units of sigma^2/n.
  double combined_tau_sq(Index k) const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.0;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  double half_width() const noexcept { return 0.5 * (hi - lo); }
};

/// ||b||^2 I + 2 b b^T, materialized. Only for tests and small p.
Matrix fisher_info(const SignalVector& b);

CorrectionVector correction_vector(const SignalVector& b, Index k);

/// beta_tilde + W^T grad f(beta_tilde) on the held-out instance, in O(np).
Vector debias_half(const SignalVector& beta_tilde, const Instance& held_out);

/// ||b||^2 ||w_k||^2 + 2 (b^T w_k)^2.
double tau_sq(const SignalVector& b, Index k);

/// tau_sq for every coordinate, via 1/(4B) - b_k^2/(6B^2) with B = ||b||^2.
Vector tau_sq_all(const SignalVector& b);

/// Fills a and beta_swap from beta_hat1/2 and tau1/2_sq.
void combine_halves(DebiasedEstimate& est);

/// Split the 2n rows at random, run TWF on each half, debias each with the
/// other half and combine with variance-optimal weights. sigma falls back to
/// the moment estimate over all rows when not given.
DebiasedEstimate swap_estimate(const Instance& full, const TwfTuning& tuning,
                               std::optional<double> sigma, Rng& rng);

/// Two-sided level 1-alpha interval for beta*_k around beta_swap[k].
Interval coordinate_ci(const DebiasedEstimate& est, Index k, double alpha);

/// Common half-width sqrt(3/(8 s_hat)) sigma z_{1-alpha/2} / sqrt(n) bounding all coordinates at once.
double simultaneous_max_ci(const DebiasedEstimate& est, double alpha);

/// Asymptotic covariance V of sqrt(n)(beta_swap - beta*) in units of sigma^2. O(p^2) memory.
Matrix covariance_matrix(const DebiasedEstimate& est, const SignalVector& beta_tilde1,
                         const SignalVector& beta_tilde2);

/// Scheffe interval for h^T beta*, valid simultaneously over all directions h.
Interval scheffe_ci(const DebiasedEstimate& est, const Matrix& V, const Vector& h, double alpha);

}  // namespace sparsepr
