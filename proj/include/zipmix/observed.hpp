#pragma once

#include <cmath>
#include <cstdint>

#include "zipmix/conjugate.hpp"
#include "zipmix/model.hpp"

namespace zipmix {

// Sufficient statistics of the Y-observed regime: the split fraction r,
// the count totals over the y = 1 and y = 0 site groups, and K tbar.
struct ObservedSplit {
  double r = 0.0;
  std::int64_t m_S = 0;
  std::int64_t m_T = 0;
  double K_tbar = 0.0;

  std::int64_t m_total() const { return m_S + m_T; }
};

inline ObservedSplit split_from_data(const DataSet& d, const ExposureGrid& g) {
  if (!d.y) throw DimensionMismatch("split_from_data needs y");
  const CountMatrix& m = d.mixture_counts();
  if (m.rows != g.I || m.cols != g.J || static_cast<int>(d.y->size()) != g.J)
    throw DimensionMismatch("dataset does not match grid");
  ObservedSplit s;
  s.K_tbar = g.K() * g.tbar();
  const auto mj = m.col_sums();
  int ones = 0;
  for (int j = 0; j < g.J; ++j) {
    if ((*d.y)[j]) {
      ++ones;
      s.m_S += mj[j];
    } else {
      s.m_T += mj[j];
    }
  }
  s.r = static_cast<double>(ones) / g.J;
  return s;
}

struct ObservedMle {
  double mu_hat;
  double nu_hat;
  double theta_hat;
};

inline ObservedMle mle_observed(const ObservedSplit& s) {
  if (s.r <= 0.0 || s.r >= 1.0)
    throw DegenerateSplit("MLEs need 0 < r < 1, got r = " + std::to_string(s.r));
  if (s.m_T == 0) throw ZeroDenominator("theta MLE needs m_T > 0");
  ObservedMle o;
  o.mu_hat = static_cast<double>(s.m_S) / (s.K_tbar * s.r);
  o.nu_hat = static_cast<double>(s.m_T) / (s.K_tbar * (1.0 - s.r));
  o.theta_hat = (1.0 - s.r) * static_cast<double>(s.m_S) /
                (s.r * static_cast<double>(s.m_T));
  return o;
}

// Propagation-of-error interval on the log scale:
// theta_hat * exp(+/- sqrt(Q / K) z), Q = (1/tbar)[1/(r mu) + 1/((1-r) nu)].
// Since mu_hat = m_S / (K tbar r), Q / K reduces to 1/m_S + 1/m_T.
inline IntervalEstimate ci_theta_lognormal(const ObservedSplit& s, double level) {
  if (s.r <= 0.0 || s.r >= 1.0) throw DegenerateSplit("interval needs 0 < r < 1");
  if (s.m_S == 0 || s.m_T == 0)
    throw EmptyCell("lognormal interval needs m_S > 0 and m_T > 0");
  const ObservedMle o = mle_observed(s);
  const double q_over_k =
      (1.0 / (s.r * o.mu_hat) + 1.0 / ((1.0 - s.r) * o.nu_hat)) / s.K_tbar;
  const double half = std::sqrt(q_over_k) * z_for_level(level);
  IntervalEstimate out;
  out.level = level;
  out.point = o.theta_hat;
  out.lower = o.theta_hat * std::exp(-half);
  out.upper = o.theta_hat * std::exp(half);
  return out;
}

// Conditional interval from the arcsine variance-stabilizing transform of
// eta_hat = m_S / (m_S + m_T), mapped to theta through
// theta = ((1-r)/r) * eta/(1-eta).  Transformed endpoints are clipped to
// [0, pi/2] before squaring; eta = 1 maps to +infinity.
inline IntervalEstimate ci_theta_arcsine(const ObservedSplit& s, double level) {
  if (s.r <= 0.0 || s.r >= 1.0) throw DegenerateSplit("interval needs 0 < r < 1");
  if (s.m_total() == 0) throw EmptyCell("arcsine interval needs m_S + m_T > 0");
  const double m = static_cast<double>(s.m_total());
  const double eta_hat = static_cast<double>(s.m_S) / m;
  const double phi_hat = std::asin(std::sqrt(eta_hat));
  const double half = z_for_level(level) / (2.0 * std::sqrt(m));
  const double ratio = (1.0 - s.r) / s.r;
  auto to_theta = [ratio](double phi) {
    const double eta = std::pow(std::sin(phi), 2);
    if (eta >= 1.0) return std::numeric_limits<double>::infinity();
    return ratio * eta / (1.0 - eta);
  };
  IntervalEstimate out;
  out.level = level;
  out.point = to_theta(phi_hat);
  out.lower = to_theta(std::max(0.0, phi_hat - half));
  out.upper = to_theta(std::min(M_PI / 2.0, phi_hat + half));
  return out;
}

// log of the lambda-integrated pmf of (M_S, M_T) given y, as a function of
// theta.  Both algebraic routes are kept: the direct gamma-integral form
// and the generalized bivariate negative-binomial form.
inline double integrated_pmf_split(const ObservedSplit& s, double delta, double theta) {
  if (!(theta > 0.0)) return kNegInf;
  if (!(delta > 0.0)) throw DomainError("delta: require delta > 0");
  const double mS = static_cast<double>(s.m_S);
  const double mT = static_cast<double>(s.m_T);
  const double m = mS + mT;
  const double pref = std::lgamma(m + delta) - std::lgamma(delta) -
                      std::lgamma(mS + 1.0) - std::lgamma(mT + 1.0);
  const double denom = s.K_tbar * (s.r * theta + (1.0 - s.r)) + 1.0;
  return pref + m * std::log(s.K_tbar) + mS * std::log(s.r) +
         mT * std::log1p(-s.r) + mS * std::log(theta) -
         (m + delta) * std::log(denom);
}

inline double integrated_pmf_split_negbin(const ObservedSplit& s, double delta,
                                          double theta) {
  if (!(theta > 0.0)) return kNegInf;
  if (!(delta > 0.0)) throw DomainError("delta: require delta > 0");
  const double mS = static_cast<double>(s.m_S);
  const double mT = static_cast<double>(s.m_T);
  const double denom = s.K_tbar * s.r * theta + s.K_tbar * (1.0 - s.r) + 1.0;
  const double a = s.K_tbar * s.r * theta / denom;
  const double b = s.K_tbar * (1.0 - s.r) / denom;
  return std::lgamma(mS + mT + delta) - std::lgamma(delta) -
         std::lgamma(mS + 1.0) - std::lgamma(mT + 1.0) + mS * std::log(a) +
         mT * std::log(b) + delta * std::log1p(-a - b);
}

// Posterior of theta under the conjugate prior phi_{alpha,beta}: the family
// closes with indices (m_S + alpha, m_T + beta + delta).
inline PosteriorPhi conjugate_posterior_observed(const ObservedSplit& s,
                                                 const PriorSpec& prior) {
  if (s.r <= 0.0 || s.r >= 1.0) throw DegenerateSplit("posterior needs 0 < r < 1");
  prior.validate();
  return PosteriorPhi(static_cast<double>(s.m_S) + prior.alpha,
                      static_cast<double>(s.m_T) + prior.beta + prior.delta,
                      s.K_tbar, s.r);
}

// Maximum integrated likelihood estimator and its information-number
// interval.  The inverse expected conditional information at theta is
// (theta/delta) [theta / (K tbar (1-r) + 1) + 1 / (K tbar r)].
inline IntervalEstimate mile(const ObservedSplit& s, double delta, double level) {
  if (s.r <= 0.0 || s.r >= 1.0) throw DegenerateSplit("MILE needs 0 < r < 1");
  if (!(delta > 0.0)) throw DomainError("delta: require delta > 0");
  const double A = s.K_tbar * s.r;
  const double B = s.K_tbar * (1.0 - s.r) + 1.0;
  const double point = B * static_cast<double>(s.m_S) /
                       (A * (static_cast<double>(s.m_T) + delta));
  const double inv_info = (point / delta) * (point / B + 1.0 / A);
  const double half = std::sqrt(inv_info) * z_for_level(level);
  IntervalEstimate out;
  out.level = level;
  out.point = point;
  out.lower = point - half;
  out.upper = point + half;
  return out;
}

// Expected conditional information number at theta (the inverse of the
// variance used by the MILE interval).
inline double mile_information(const ObservedSplit& s, double delta, double theta) {
  const double A = s.K_tbar * s.r;
  const double B = s.K_tbar * (1.0 - s.r) + 1.0;
  return delta * A * B / (theta * (A * theta + B));
}

inline double mile_inverse_information(const ObservedSplit& s, double delta,
                                       double theta) {
  const double A = s.K_tbar * s.r;
  const double B = s.K_tbar * (1.0 - s.r) + 1.0;
  return (theta / delta) * (theta / B + 1.0 / A);
}

}  // namespace zipmix
