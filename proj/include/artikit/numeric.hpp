#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace artikit::num {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Regularized lower incomplete gamma function P(a, x).
/// Series expansion for x < a+1, Lentz continued fraction otherwise.
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: a > 0, x >= 0 required");
  if (x == 0.0) return 0.0;
  const double log_gamma = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma);
  }
  // Continued fraction evaluates Q(a, x); return 1 - Q.
  double b = x + 1.0 - a;
  double c = 1.0 / 1e-300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - log_gamma) * h;
}

/// Quantile of the chi-square distribution with `df` degrees of freedom.
inline double chi2_quantile(double p, int df) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("chi2_quantile: p in (0,1) required");
  if (df <= 0) throw std::invalid_argument("chi2_quantile: df > 0 required");
  const double a = 0.5 * df;
  double hi = 1.0;
  while (gamma_p(a, 0.5 * hi) < p) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 128; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(a, 0.5 * mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace artikit::num
