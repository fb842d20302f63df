#include "sparsepr/quantiles.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sparsepr/errors.hpp"

namespace sparsepr {
namespace {

void require_open_unit(double q, const char* who) {
  if (!(q > 0.0 && q < 1.0)) {
    throw InvalidArgument(std::string(who) + ": probability must lie in (0, 1), got " +
                          std::to_string(q));
  }
}

// Acklam's rational approximation, relative error about 1.15e-9.
double acklam(double q) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;
  if (q < low) {
    const double t = std::sqrt(-2.0 * std::log(q));
    return (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
           ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  }
  if (q > 1.0 - low) {
    const double t = std::sqrt(-2.0 * std::log1p(-q));
    return -(((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
           ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  }
  const double t = q - 0.5;
  const double r = t * t;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Series for P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int i = 1; i < 10000; ++i) {
    term *= x / (a + i);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double q) {
  require_open_unit(q, "normal_quantile");
  double x = acklam(q);
  // One Halley step on the exact CDF; the upper half works with 1 - q, which is exact there.
  const double e = q < 0.5 ? normal_cdf(x) - q : (1.0 - q) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw InvalidArgument("gamma_p: need a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw InvalidArgument("gamma_q: need a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_sq_quantile(double q, int df) {
  require_open_unit(q, "chi_sq_quantile");
  if (df < 1) throw InvalidArgument("chi_sq_quantile: degrees of freedom must be positive");
  const double a = 0.5 * df;
  const bool upper = q > 0.5;
  const double target = upper ? 1.0 - q : q;
  // Residual in whichever tail is better conditioned; increasing in x either way.
  auto residual = [&](double x) {
    return upper ? target - gamma_q(a, 0.5 * x) : gamma_p(a, 0.5 * x) - target;
  };
  auto density = [&](double x) {
    return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::numbers::ln2 - std::lgamma(a));
  };

  // Wilson-Hilferty start, with the small-x asymptote P ~ (x/2)^a / Gamma(a+1) as fallback.
  const double h = 2.0 / (9.0 * df);
  double x = df * std::pow(1.0 - h + normal_quantile(q) * std::sqrt(h), 3);
  if (!(x > 0.0)) x = 2.0 * std::exp((std::log(q) + std::lgamma(a + 1.0)) / a);

  double lo = 0.0;
  double hi = std::max(2.0 * x, 1.0);
  while (residual(hi) < 0.0) hi *= 2.0;
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);

  for (int it = 0; it < 500; ++it) {
    const double r = residual(x);
    if (r == 0.0) return x;
    if (r < 0.0) lo = x; else hi = x;
    double next = x - r / density(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * x || hi - lo <= 1e-15 * hi) return next;
    x = next;
  }
  return x;
}

}  // namespace sparsepr
