#include "sparsepr/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sparsepr/errors.hpp"

namespace sparsepr {

std::vector<Index> SignalVector::support() const {
  std::vector<Index> idx;
  for (Index k = 0; k < values_.size(); ++k) {
    if (values_[k] != 0.0) idx.push_back(k);
  }
  return idx;
}

Index SignalVector::sparsity() const {
  return static_cast<Index>((values_.array() != 0.0).count());
}

Instance Instance::subset(const std::vector<Index>& rows) const {
  Instance out;
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Index>(i)) = X.row(rows[i]);
    out.y[static_cast<Index>(i)] = y[rows[i]];
  }
  out.sigma = sigma;
  out.truth = truth;
  return out;
}

void Instance::validate() const {
  if (y.size() != X.rows()) {
    throw InvalidArgument("instance: y has length " + std::to_string(y.size()) + " but X has " +
                          std::to_string(X.rows()) + " rows");
  }
  if (truth && truth->size() != X.cols()) {
    throw InvalidArgument("instance: truth has length " + std::to_string(truth->size()) +
                          " but X has " + std::to_string(X.cols()) + " columns");
  }
  if (sigma && !(*sigma >= 0.0)) throw InvalidArgument("instance: sigma must be nonnegative");
}

Vector design_product(const Matrix& X, const Vector& b) {
  const auto nnz = (b.array() != 0.0).count();
  if (4 * nnz > b.size()) return X * b;
  Vector out = Vector::Zero(X.rows());
  for (Index k = 0; k < b.size(); ++k) {
    if (b[k] != 0.0) out.noalias() += b[k] * X.col(k);
  }
  return out;
}

SignalVector generate_signal(Index p, Index s, Rng& rng) {
  if (p < 1 || s < 1 || s > p) {
    throw InvalidArgument("generate_signal: need 1 <= s <= p, got s=" + std::to_string(s) +
                          ", p=" + std::to_string(p));
  }
  // Partial Fisher-Yates: the first s slots end up a uniform random s-subset.
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < s; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  Vector v = Vector::Zero(p);
  for (Index i = 0; i < s; ++i) {
    double z = 0.0;
    while (z == 0.0) z = rng.normal();
    v[idx[static_cast<std::size_t>(i)]] = z;
  }
  return SignalVector(std::move(v));
}

Instance generate_instance(const SignalVector& beta, Index n, double sigma, Rng& rng) {
  if (n < 1) throw InvalidArgument("generate_instance: n must be positive");
  if (!(sigma >= 0.0)) throw InvalidArgument("generate_instance: sigma must be nonnegative");
  const Index p = beta.size();
  if (p < 1) throw InvalidArgument("generate_instance: empty signal");

  Instance inst;
  inst.X.resize(n, p);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < p; ++k) inst.X(j, k) = rng.normal();
  }
  const Vector proj = design_product(inst.X, beta.values());
  inst.y = proj.array().square();
  // Noise is drawn even when sigma = 0 so (X, eps) streams line up across sigma values.
  for (Index j = 0; j < n; ++j) {
    const double eps = rng.normal();
    if (sigma > 0.0) inst.y[j] += sigma * eps;
  }
  inst.sigma = sigma;
  inst.truth = beta;
  return inst;
}

double nsr_to_sigma(double nsr, const SignalVector& beta) {
  if (!(nsr >= 0.0)) throw InvalidArgument("nsr_to_sigma: nsr must be nonnegative");
  const double sq = beta.squared_norm();
  if (!(sq > 0.0)) throw InvalidArgument("nsr_to_sigma: zero signal has no noise-to-signal ratio");
  return nsr * sq;
}

SignalVector align_sign(const SignalVector& candidate, const SignalVector& reference) {
  if (candidate.size() != reference.size()) {
    throw InvalidArgument("align_sign: length mismatch (" + std::to_string(candidate.size()) +
                          " vs " + std::to_string(reference.size()) + ")");
  }
  const double keep = (reference.values() - candidate.values()).squaredNorm();
  const double flip = (reference.values() + candidate.values()).squaredNorm();
  return keep <= flip ? reference : -reference;
}

NoiseEstimate estimate_noise(const Vector& y) {
  if (y.size() == 0) throw InvalidArgument("estimate_noise: empty measurement vector");
  NoiseEstimate est;
  est.phi_sq = y.mean();
  const double radicand = y.squaredNorm() / static_cast<double>(y.size()) - 3.0 * est.phi_sq * est.phi_sq;
  est.clamped = radicand < 0.0;
  est.sigma_hat = std::sqrt(std::max(0.0, radicand));
  return est;
}

}  // namespace sparsepr
