#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace zipmix {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow.
inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> xs) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  if (hi == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - hi);
  return hi + std::log(sum);
}

inline double log_sum_exp(const std::vector<double>& xs) {
  return log_sum_exp(std::span<const double>(xs));
}

// log(1 - exp(x)) for x < 0, stable near both ends.
inline double log1m_exp(double x) {
  return x > -M_LN2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

// 1/(1 + exp(-x)).
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log P[X = k] for X ~ Poisson(mean); mean = 0 is the point mass at 0.
inline double poisson_logpmf(std::int64_t k, double mean) {
  if (mean == 0.0) return k == 0 ? 0.0 : kNegInf;
  const double kd = static_cast<double>(k);
  return kd * std::log(mean) - mean - std::lgamma(kd + 1.0);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

// Upper z such that P[Z > z] = p for Z ~ N(0,1).
inline double normal_upper_quantile(double p) {
  boost::math::normal_distribution<double> nd;
  return boost::math::quantile(boost::math::complement(nd, p));
}

// z_{alpha/2} for a two-sided interval at the given confidence level.
inline double z_for_level(double level) {
  return normal_upper_quantile((1.0 - level) / 2.0);
}

// Adaptive Gauss-Kronrod integral of f over [a, b] (b may be infinite).
template <typename F>
double integrate(F&& f, double a, double b, double tol = 1e-12) {
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), a, b, 12, tol);
}

}  // namespace zipmix
