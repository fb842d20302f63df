#pragma once

#include <vector>

#include "sparsepr/model.hpp"

namespace sparsepr {

/// Constants of the thresholded Wirtinger flow. The step applied to the
/// gradient is mu / phi^2, so mu is dimensionless.
struct TwfTuning {
  double mu = 0.1;
  double alpha_init = 1.0;   // support-selection margin
  double init_trim = 9.0;    // rows with y_j > init_trim * mean(y) are left out of the spectral matrix; 0 keeps all
  double c_thr = 1.0;        // iterate threshold constant
  int max_iter = 500;
  double tol = 1e-7;         // relative l2 change
  double power_iter_tol = 1e-9;
  int power_iter_max = 1000;
  bool track_descent = false;  // count objective increases of the raw gradient step

  /// Throws InvalidArgument on out-of-range constants.
  void validate() const;
};

struct SignalEstimate {
  SignalVector beta_tilde;
  int iterations = 0;
  std::vector<Index> init_support;
  NoiseEstimate noise;
  bool converged = false;
  bool power_converged = true;
  int descent_violations = 0;  // only populated with TwfTuning::track_descent
};

/// f(b) = (1/4n) sum_j ((x_j^T b)^2 - y_j)^2.
double objective(const SignalVector& b, const Instance& inst);

/// (1/n) sum_j ((x_j^T b)^2 - y_j) (x_j^T b) x_j.
Vector gradient(const SignalVector& b, const Instance& inst);

/// Elementwise sign(v) * max(|v| - rho, 0).
Vector soft_threshold(const Vector& v, double rho);

/// Support selection on the diagonal statistic plus power iteration on the
/// selected block; the result has norm phi and is zero off the selected set.
SignalEstimate spectral_init(const Instance& inst, const TwfTuning& tuning);

/// Spectral initialization followed by soft-thresholded gradient descent.
SignalEstimate run_twf(const Instance& inst, const TwfTuning& tuning);

/// Thresholded gradient descent from a given starting point.
SignalEstimate refine_twf(const Instance& inst, const TwfTuning& tuning, SignalEstimate start);

}  // namespace sparsepr
