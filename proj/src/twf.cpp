#include "sparsepr/twf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "sparsepr/errors.hpp"

namespace sparsepr {
namespace {

constexpr double kTiny = 1e-12;

void check_dims(const SignalVector& b, const Instance& inst, const char* who) {
  if (b.size() != inst.p() || inst.y.size() != inst.n()) {
    throw InvalidArgument(std::string(who) + ": dimension mismatch (b has " +
                          std::to_string(b.size()) + " entries, X is " + std::to_string(inst.n()) +
                          "x" + std::to_string(inst.p()) + ", y has " +
                          std::to_string(inst.y.size()) + ")");
  }
}

// Per-row weights u_j = ((x_j^T b)^2 - y_j)(x_j^T b); gradient = X^T u / n.
struct Residuals {
  Vector proj;
  Vector resid;
  Vector weights;
};

Residuals residuals(const Vector& b, const Instance& inst) {
  Residuals r;
  r.proj = design_product(inst.X, b);
  r.resid = r.proj.array().square() - inst.y.array();
  r.weights = r.resid.array() * r.proj.array();
  return r;
}

void orient(Vector& v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
}

}  // namespace

void TwfTuning::validate() const {
  std::ostringstream why;
  if (!(mu > 0.0 && mu <= 1.0)) why << "mu must lie in (0, 1], got " << mu << "; ";
  if (!(alpha_init > 0.0)) why << "alpha_init must be positive; ";
  if (!(init_trim >= 0.0)) why << "init_trim must be nonnegative; ";
  if (!(c_thr >= 0.0)) why << "c_thr must be nonnegative; ";
  if (max_iter < 1) why << "max_iter must be positive; ";
  if (!(tol > 0.0)) why << "tol must be positive; ";
  if (!(power_iter_tol > 0.0)) why << "power_iter_tol must be positive; ";
  if (power_iter_max < 1) why << "power_iter_max must be positive; ";
  const auto msg = why.str();
  if (!msg.empty()) throw InvalidArgument("twf tuning: " + msg.substr(0, msg.size() - 2));
}

double objective(const SignalVector& b, const Instance& inst) {
  check_dims(b, inst, "objective");
  const Vector proj = design_product(inst.X, b.values());
  const double sum = (proj.array().square() - inst.y.array()).square().sum();
  return sum / (4.0 * static_cast<double>(inst.n()));
}

Vector gradient(const SignalVector& b, const Instance& inst) {
  check_dims(b, inst, "gradient");
  const Residuals r = residuals(b.values(), inst);
  Vector g = inst.X.transpose() * r.weights;
  return g / static_cast<double>(inst.n());
}

Vector soft_threshold(const Vector& v, double rho) {
  if (rho <= 0.0) return v;
  Vector out(v.size());
  for (Index k = 0; k < v.size(); ++k) {
    const double mag = std::abs(v[k]) - rho;
    out[k] = mag > 0.0 ? std::copysign(mag, v[k]) : 0.0;
  }
  return out;
}

SignalEstimate spectral_init(const Instance& inst, const TwfTuning& tuning) {
  tuning.validate();
  inst.validate();
  const Index n = inst.n();
  const Index p = inst.p();
  if (n < 2) throw InvalidArgument("spectral_init: need at least 2 measurements");
  const auto nd = static_cast<double>(n);

  SignalEstimate est;
  est.noise = estimate_noise(inst.y);
  const double phi_sq = est.noise.phi_sq;

  // Diagonal statistic (1/n) sum_j y_j X_jk^2 has mean ||beta||^2 + 2 beta_k^2.
  Vector stat(p);
  for (Index k = 0; k < p; ++k) {
    stat[k] = (inst.X.col(k).array().square() * inst.y.array()).sum() / nd;
  }
  const double cut =
      phi_sq * (1.0 + tuning.alpha_init * std::sqrt(std::log(nd * static_cast<double>(p)) / nd));
  for (Index k = 0; k < p; ++k) {
    if (stat[k] > cut) est.init_support.push_back(k);
  }
  Index top = 0;
  stat.maxCoeff(&top);
  if (est.init_support.empty()) est.init_support.push_back(top);

  const auto m = static_cast<Index>(est.init_support.size());
  Matrix block(n, m);
  Index start = 0;
  for (Index i = 0; i < m; ++i) {
    block.col(i) = inst.X.col(est.init_support[static_cast<std::size_t>(i)]);
    if (est.init_support[static_cast<std::size_t>(i)] == top) start = i;
  }

  // A single huge y_j can otherwise pull the top eigenvector onto its own row.
  Vector weights = inst.y;
  if (tuning.init_trim > 0.0) {
    const double cap = tuning.init_trim * phi_sq;
    for (Index j = 0; j < n; ++j) {
      if (weights[j] > cap) weights[j] = 0.0;
    }
  }

  // Power iteration on (1/n) B^T diag(w) B without forming it, started at the
  // coordinate with the largest statistic.
  Vector v = Vector::Unit(m, start);
  est.power_converged = false;
  for (int it = 0; it < tuning.power_iter_max; ++it) {
    Vector next = block.transpose() * (weights.array() * (block * v).array()).matrix();
    const double norm = next.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    next /= norm;
    const double change = std::min((next - v).norm(), (next + v).norm());
    v = std::move(next);
    if (change < tuning.power_iter_tol) {
      est.power_converged = true;
      break;
    }
  }
  orient(v);

  const double phi = std::sqrt(std::max(phi_sq, 0.0));
  Vector beta0 = Vector::Zero(p);
  for (Index i = 0; i < m; ++i) beta0[est.init_support[static_cast<std::size_t>(i)]] = phi * v[i];
  est.beta_tilde = SignalVector(std::move(beta0));
  return est;
}

SignalEstimate refine_twf(const Instance& inst, const TwfTuning& tuning, SignalEstimate start) {
  tuning.validate();
  inst.validate();
  check_dims(start.beta_tilde, inst, "run_twf");
  const Index n = inst.n();
  if (n < 2) throw InvalidArgument("run_twf: need at least 2 measurements");
  const auto nd = static_cast<double>(n);

  SignalEstimate est = std::move(start);
  const double scale = std::max(est.noise.phi_sq, kTiny);
  const double step = tuning.mu / scale;
  const double rate = std::sqrt(std::log(nd * static_cast<double>(inst.p())) / nd);

  Vector b = est.beta_tilde.values();
  est.iterations = 0;
  est.converged = false;
  est.descent_violations = 0;
  for (int it = 0; it < tuning.max_iter; ++it) {
    const Residuals r = residuals(b, inst);
    const Vector g = (inst.X.transpose() * r.weights) / nd;
    // Threshold tracks the empirical sd of the per-row gradient weights, which
    // is about sigma * ||beta|| near the truth and vanishes without noise.
    const double spread = std::sqrt(r.weights.squaredNorm() / nd);
    const double rho = tuning.c_thr * step * spread * rate;

    Vector moved = b - step * g;
    if (tuning.track_descent) {
      const double before = r.resid.squaredNorm() / (4.0 * nd);
      const Vector proj = inst.X * moved;
      const double after = (proj.array().square() - inst.y.array()).square().sum() / (4.0 * nd);
      if (after > before) ++est.descent_violations;
    }
    ++est.iterations;
    // Checked before thresholding, which would quietly map NaN to zero.
    if (!moved.allFinite() || !std::isfinite(rho)) {
      std::ostringstream msg;
      msg << "run_twf: iterate diverged at iteration " << est.iterations << " with step size mu="
          << tuning.mu << "; reduce mu";
      throw Diverged(msg.str());
    }
    Vector next = soft_threshold(moved, rho);
    const double change = (next - b).norm() / std::max(b.norm(), kTiny);
    b = std::move(next);
    if (change < tuning.tol) {
      est.converged = true;
      break;
    }
  }
  est.beta_tilde = SignalVector(std::move(b));
  return est;
}

SignalEstimate run_twf(const Instance& inst, const TwfTuning& tuning) {
  return refine_twf(inst, tuning, spectral_init(inst, tuning));
}

}  // namespace sparsepr
