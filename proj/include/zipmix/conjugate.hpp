#pragma once

#include <cmath>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "zipmix/errors.hpp"
#include "zipmix/model.hpp"
#include "zipmix/numeric.hpp"

namespace zipmix {

struct IntervalEstimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;
};

// Member of the conjugate family phi_{a,b; S, r} on theta:
//
//   phi(theta) = c * theta^(a-1) / (A theta + B)^(a+b),
//   A = S r,  B = S (1 - r) + 1,  c = A^a B^b / Beta(a, b).
//
// Note the +1 in B: it is forced by the +1 in the integrated likelihood's
// denominator, and conjugacy (posterior indices a + m_S, b + m_T + delta)
// holds only with it.  The family is a scaled beta-prime: A theta / B is
// BetaPrime(a, b), which gives closed-form CDF, quantiles, and moments via
// the regularized incomplete beta function.
struct PosteriorPhi {
  double a = 1.0;        // shape on the theta^(a-1) side
  double b = 1.0;        // shape on the denominator side
  double scale = 1.0;    // S: K tbar (or its t z analogue)
  double r = 0.5;        // split fraction in (0, 1)

  PosteriorPhi() = default;
  PosteriorPhi(double a_, double b_, double scale_, double r_)
      : a(a_), b(b_), scale(scale_), r(r_) {
    if (!(a > 0.0)) throw DomainError("phi: require a > 0, got " + std::to_string(a));
    if (!(b > 0.0)) throw DomainError("phi: require b > 0, got " + std::to_string(b));
    if (!(scale > 0.0)) throw DomainError("phi: require scale > 0");
    if (!(r > 0.0 && r < 1.0)) throw DomainError("phi: require 0 < r < 1");
  }

  double A() const { return scale * r; }
  double B() const { return scale * (1.0 - r) + 1.0; }

  double logdensity(double theta) const {
    if (!(theta > 0.0)) return kNegInf;
    const double log_c = a * std::log(A()) + b * std::log(B()) +
                         std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    return log_c + (a - 1.0) * std::log(theta) -
           (a + b) * std::log(A() * theta + B());
  }

  double cdf(double theta) const {
    if (theta <= 0.0) return 0.0;
    const double at = A() * theta;
    return boost::math::ibeta(a, b, at / (at + B()));
  }

  double quantile(double p) const {
    const double x = boost::math::ibeta_inv(a, b, p);
    return B() * x / (A() * (1.0 - x));
  }

  bool mean_defined() const { return b > 1.0; }

  double mean() const {
    if (!mean_defined())
      throw MeanUndefined("phi mean needs b > 1, got b = " + std::to_string(b));
    return B() * a / (A() * (b - 1.0));
  }

  double median() const { return quantile(0.5); }
};

// Equal-tailed credible interval; the point is the mean when defined,
// otherwise the median.
inline IntervalEstimate phi_credible_interval(const PosteriorPhi& p, double level) {
  if (!(level >= 0.0 && level < 1.0))
    throw DomainError("level: require 0 <= level < 1");
  IntervalEstimate out;
  out.level = level;
  out.lower = p.quantile((1.0 - level) / 2.0);
  out.upper = p.quantile((1.0 + level) / 2.0);
  out.point = p.mean_defined() ? p.mean() : p.median();
  out.point = std::min(std::max(out.point, out.lower), out.upper);
  return out;
}

inline double phi_logdensity(double theta, const PosteriorPhi& p) {
  return p.logdensity(theta);
}

}  // namespace zipmix
