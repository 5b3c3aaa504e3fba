#include "addrhop/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace addrhop {
namespace {

// Regularized lower gamma P(a, x) by its power series; valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int i = 1; i < 10000; ++i) {
    term *= x / (a + i);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper gamma Q(a, x) by Lentz's continued fraction; valid for x >= a + 1.
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
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double chi_square_upper_tail(double chi2, double dof) {
  if (dof <= 0) throw std::invalid_argument("chi_square_upper_tail: dof must be positive");
  if (chi2 <= 0) return 1.0;
  const double a = dof / 2.0;
  const double x = chi2 / 2.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

std::vector<double> sample_autocorrelation(std::span<const double> xs, unsigned max_lag) {
  const std::size_t n = xs.size();
  if (n < 2 || max_lag >= n) throw std::invalid_argument("sample_autocorrelation: need more samples than lags");
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = xs[i] - mean;

  std::vector<double> r(max_lag + 1, 0.0);
  double c0 = 0.0;
  for (double v : centered) c0 += v * v;
  if (c0 == 0.0) throw std::domain_error("sample_autocorrelation: constant sequence");
  r[0] = 1.0;
  for (unsigned k = 1; k <= max_lag; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) ck += centered[i] * centered[i + k];
    r[k] = ck / c0;
  }
  return r;
}

}  // namespace addrhop
