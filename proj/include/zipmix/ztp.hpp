#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "zipmix/model.hpp"
#include "zipmix/numeric.hpp"

namespace zipmix {

// log of the zero-truncated Poisson pmf lambda^x / ((e^lambda - 1) x!).
inline double ztp_logpmf(std::int64_t x, double lambda) {
  if (x < 1) throw DomainError("ZTP support is x >= 1");
  if (!(lambda > 0.0)) throw DomainError("lambda: require lambda > 0");
  // log(e^lambda - 1), stable for both small and large lambda.
  const double log_em1 = lambda > 33.0 ? lambda + std::log1p(-std::exp(-lambda))
                                       : std::log(std::expm1(lambda));
  const double xd = static_cast<double>(x);
  return xd * std::log(lambda) - log_em1 - std::lgamma(xd + 1.0);
}

// log P[N = x | N != 0] for the zero-inflated mixture cell: the mixture pmf
// at x over 1 - P[M = 0]; the inflation weight eps cancels.
inline double conditional_zipm_logpmf(std::int64_t x, const ModelParams& p, double t) {
  if (x < 1) throw DomainError("conditional pmf needs x >= 1");
  validate_params(p);
  const double log_num = mixture_cell_logpmf(x, t, p);
  const double log_p0 = log_sum_exp(std::log(p.pi) - t * p.mu,
                                    std::log1p(-p.pi) - t * p.nu);
  return log_num - log1m_exp(log_p0);
}

// log of the pi-mixture of two ZTP pmfs with parameters t mu and t nu.
inline double ztp_mixture_logpmf(std::int64_t x, const ModelParams& p, double t) {
  if (x < 1) throw DomainError("ZTP mixture needs x >= 1");
  validate_params(p);
  return log_sum_exp(std::log(p.pi) + ztp_logpmf(x, t * p.mu),
                     std::log1p(-p.pi) + ztp_logpmf(x, t * p.nu));
}

struct ZtpComparisonRow {
  std::int64_t x;
  double conditional_pmf;
  double ztp_mixture_pmf;
  double abs_diff;
};

struct ZtpDiscrepancyReport {
  std::vector<ZtpComparisonRow> rows;
  double max_abs_diff = 0.0;
  std::int64_t argmax_x = 1;
  // The reduced identity (mu/nu)^x = (e^{t mu} - 1)/(e^{t nu} - 1) in logs:
  // x log(mu/nu) - log ratio.  Strictly monotone in x when mu != nu, so it
  // has at most one root.
  std::vector<double> identity_gap;
  int identity_sign_changes = 0;
};

// Tabulates both conditional pmfs on x = 1..x_max.  The two distributions
// coincide exactly when mu = nu and must differ somewhere otherwise.
inline ZtpDiscrepancyReport ztp_discrepancy_report(const ModelParams& p, double t,
                                                   std::int64_t x_max) {
  if (x_max < 2) throw DomainError("x_max: require >= 2");
  validate_params(p);
  ZtpDiscrepancyReport rep;
  const double log_ratio_rhs =
      (t * p.mu > 33.0 ? t * p.mu + std::log1p(-std::exp(-t * p.mu))
                       : std::log(std::expm1(t * p.mu))) -
      (t * p.nu > 33.0 ? t * p.nu + std::log1p(-std::exp(-t * p.nu))
                       : std::log(std::expm1(t * p.nu)));
  double prev_gap = 0.0;
  for (std::int64_t x = 1; x <= x_max; ++x) {
    ZtpComparisonRow row;
    row.x = x;
    row.conditional_pmf = std::exp(conditional_zipm_logpmf(x, p, t));
    row.ztp_mixture_pmf = std::exp(ztp_mixture_logpmf(x, p, t));
    row.abs_diff = std::abs(row.conditional_pmf - row.ztp_mixture_pmf);
    if (row.abs_diff > rep.max_abs_diff) {
      rep.max_abs_diff = row.abs_diff;
      rep.argmax_x = x;
    }
    rep.rows.push_back(row);
    const double gap =
        static_cast<double>(x) * (std::log(p.mu) - std::log(p.nu)) - log_ratio_rhs;
    rep.identity_gap.push_back(gap);
    if (x > 1 && ((gap > 0.0 && prev_gap < 0.0) || (gap < 0.0 && prev_gap > 0.0)))
      ++rep.identity_sign_changes;
    prev_gap = gap;
  }
  return rep;
}

}  // namespace zipmix
