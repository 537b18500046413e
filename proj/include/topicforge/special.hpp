#ifndef TOPICFORGE_SPECIAL_HPP
#define TOPICFORGE_SPECIAL_HPP

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "topicforge/error.hpp"

namespace topicforge {

/// Digamma for x > 0: upward recurrence to x >= 10, then the asymptotic
/// Bernoulli series. Absolute error is below 1e-15 on that range.
inline double digamma(double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Horner form of 1/12 - 1/(120 x^2) + 1/(252 x^4) - 1/(240 x^6)
  //               + 1/(132 x^8) - 691/(32760 x^10) + 1/(12 x^12)
  const double series =
      inv2 *
      (1.0 / 12.0 -
       inv2 * (1.0 / 120.0 -
               inv2 * (1.0 / 252.0 -
                       inv2 * (1.0 / 240.0 -
                               inv2 * (1.0 / 132.0 -
                                       inv2 * (691.0 / 32760.0 -
                                               inv2 / 12.0))))));
  return std::log(x) - 0.5 * inv - series - shift;
}

/// E[log theta_k] for theta ~ Dirichlet(param).
inline std::vector<double> dirichlet_expectation(std::span<const double> param) {
  double total = 0.0;
  for (double p : param) {
    if (!(p > 0.0))
      throw DataError("dirichlet_expectation: parameters must be positive");
    total += p;
  }
  const double psi_total = digamma(total);
  std::vector<double> out(param.size());
  for (std::size_t k = 0; k < param.size(); ++k)
    out[k] = digamma(param[k]) - psi_total;
  return out;
}

namespace detail {

// Series for the lower regularized gamma P(a, x); converges fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for the upper regularized gamma Q(a, x).
inline double gamma_q_fraction(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
inline double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || std::isnan(x))
    return std::numeric_limits<double>::quiet_NaN();
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_fraction(a, x);
}

/// Survival function of the chi-squared distribution.
inline double chi2_survival(double statistic, int degrees_of_freedom) {
  if (statistic <= 0.0) return 1.0;
  const double q = regularized_gamma_q(0.5 * degrees_of_freedom, 0.5 * statistic);
  return q < 0.0 ? 0.0 : (q > 1.0 ? 1.0 : q);
}

}  // namespace topicforge

#endif  // TOPICFORGE_SPECIAL_HPP
