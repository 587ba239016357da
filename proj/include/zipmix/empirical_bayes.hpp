#pragma once

#include "zipmix/conjugate.hpp"
#include "zipmix/em_mixture.hpp"
#include "zipmix/em_zipm.hpp"

namespace zipmix {

struct EmpiricalBayesResult {
  PosteriorPhi posterior;
  double estimate = 0.0;
};

// Feeds the EM-imputed split statistics (ybar-hat, K my-hat, K m(1-y)-hat)
// into the conjugate posterior in place of the unobserved split.  With
// improper = true the alpha = beta = 0 forms are used, which are proper
// only when K my-hat > 0.
inline EmpiricalBayesResult empirical_bayes_mixture(const CountMatrix& m,
                                                    const ExposureGrid& g,
                                                    const MixtureFit& fit,
                                                    const PriorSpec& prior,
                                                    bool improper = false) {
  if (!fit.converged) throw DomainError("empirical Bayes needs a converged fit");
  prior.validate(improper);
  const double alpha = improper ? 0.0 : prior.alpha;
  const double beta = improper ? 0.0 : prior.beta;

  const auto mj = m.col_sums();
  double ybar = 0.0, k_my = 0.0, total = 0.0;
  for (int j = 0; j < g.J; ++j) {
    ybar += fit.yhat[j];
    k_my += static_cast<double>(mj[j]) * fit.yhat[j];
    total += static_cast<double>(mj[j]);
  }
  ybar /= static_cast<double>(g.J);
  const double k_m1y = total - k_my;

  if (improper && k_my <= 0.0)
    throw ImproperPosterior("alpha = 0 posterior needs K my-hat > 0");
  const double b = k_m1y + beta + prior.delta;
  if (!(b > 1.0))
    throw MeanUndefined("empirical Bayes estimate needs K m(1-y)-hat + beta + delta > 1");
  if (!(ybar > 0.0 && ybar < 1.0))
    throw DegenerateSplit("imputed ybar is degenerate");

  EmpiricalBayesResult out{
      PosteriorPhi(k_my + alpha, b, static_cast<double>(g.K()) * g.tbar(), ybar), 0.0};
  out.estimate = out.posterior.mean();
  return out;
}

// Zero-inflated analogue: the imputed statistics are K ny-hat,
// K n(1-y)-hat = n - K ny-hat, K tz-hat, K tyz-hat and
// rbar-hat = tyz-hat / tz-hat; the posterior scale slot is K tz-hat.
inline EmpiricalBayesResult empirical_bayes_zipm(const CountMatrix& n,
                                                 const ExposureGrid& g,
                                                 const ZipmFit& fit,
                                                 const ZipmResponsibilities& resp,
                                                 const PriorSpec& prior,
                                                 bool improper = false) {
  if (!fit.converged) throw DomainError("empirical Bayes needs a converged fit");
  prior.validate(improper);
  const double alpha = improper ? 0.0 : prior.alpha;
  const double beta = improper ? 0.0 : prior.beta;

  const auto nj = n.col_sums();
  double k_ny = 0.0;
  for (int j = 0; j < g.J; ++j)
    k_ny += static_cast<double>(nj[j]) * resp.yhat[j];
  const double k_n1y = static_cast<double>(n.total()) - k_ny;

  double k_tz = 0.0, k_tyz = 0.0;
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j) {
      k_tz += g.t[i] * resp.zhat(i, j);
      k_tyz += g.t[i] * resp.yzhat(i, j);
    }
  if (k_tz <= 0.0) throw DegenerateRatio("imputed K tz-hat is zero");
  const double rbar = k_tyz / k_tz;

  if (improper && k_ny <= 0.0)
    throw ImproperPosterior("alpha = 0 posterior needs K ny-hat > 0");
  const double b = k_n1y + beta + prior.delta;
  if (!(b > 1.0))
    throw MeanUndefined("empirical Bayes estimate needs K n(1-y)-hat + beta + delta > 1");
  if (!(rbar > 0.0 && rbar < 1.0))
    throw DegenerateSplit("imputed rbar is degenerate");

  EmpiricalBayesResult out{PosteriorPhi(k_ny + alpha, b, k_tz, rbar), 0.0};
  out.estimate = out.posterior.mean();
  return out;
}

}  // namespace zipmix
