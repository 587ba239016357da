#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "zipmix/conjugate.hpp"
#include "zipmix/linalg.hpp"
#include "zipmix/model.hpp"

namespace zipmix {

struct MixtureParams {
  double pi = 0.25;
  double mu = 1.0;
  double nu = 1.0;

  double theta() const { return mu / nu; }
};

// E-step: posterior probability that column j belongs to the rare
// component, from the closed form
//   yhat_j = pi / (pi + (1-pi) exp(-I tbar (nu - mu)) (nu/mu)^{m_j}),
// evaluated as a sigmoid of the log odds.
inline std::vector<double> estep_mixture(const CountMatrix& m, const ExposureGrid& g,
                                         const MixtureParams& cur) {
  if (m.rows != g.I || m.cols != g.J)
    throw DimensionMismatch("count matrix does not match grid");
  if (!(cur.pi > 0.0 && cur.pi < 1.0 && cur.mu > 0.0 && cur.nu > 0.0))
    throw DomainError("E-step needs interior parameters");
  const double logit_pi = std::log(cur.pi) - std::log1p(-cur.pi);
  const double it = static_cast<double>(g.I) * g.tbar();
  const double log_ratio = std::log(cur.mu) - std::log(cur.nu);
  const auto mj = m.col_sums();
  std::vector<double> yhat(g.J);
  for (int j = 0; j < g.J; ++j)
    yhat[j] = sigmoid(logit_pi + it * (cur.nu - cur.mu) +
                      static_cast<double>(mj[j]) * log_ratio);
  return yhat;
}

struct MixtureMStep {
  MixtureParams params;
  bool pi_clamped = false;
};

// M-step: complete-data MLEs with the imputed y, then the pi <= 1/2 clamp.
inline MixtureMStep mstep_mixture(const CountMatrix& m, const ExposureGrid& g,
                                  const std::vector<double>& yhat) {
  if (static_cast<int>(yhat.size()) != g.J)
    throw DimensionMismatch("responsibilities do not match grid");
  const auto mj = m.col_sums();
  double sum_y = 0.0, sum_my = 0.0, total = 0.0;
  for (int j = 0; j < g.J; ++j) {
    sum_y += yhat[j];
    sum_my += static_cast<double>(mj[j]) * yhat[j];
    total += static_cast<double>(mj[j]);
  }
  const double sum_1y = static_cast<double>(g.J) - sum_y;
  if (sum_y == 0.0) throw EmptyComponent("rare component has zero responsibility");
  if (sum_1y == 0.0) throw EmptyComponent("common component has zero responsibility");

  MixtureMStep out;
  const double pi_raw = sum_y / static_cast<double>(g.J);
  out.pi_clamped = pi_raw > 0.5;
  out.params.pi = out.pi_clamped ? 0.5 : pi_raw;
  const double it = g.tbar() * static_cast<double>(g.I);
  out.params.mu = sum_my / (it * sum_y);
  out.params.nu = (total - sum_my) / (it * sum_1y);
  return out;
}

struct MixtureFit {
  MixtureParams params;
  std::vector<double> loglik_trace;     // loglik after each M-step
  std::vector<double> yhat;             // responsibilities at convergence
  int iterations = 0;
  bool converged = false;
  bool pi_clamped = false;              // clamp active at the final iterate
  double theta_update = 0.0;            // the t-free update formula value
  int J = 0;
  int K = 0;

  double theta() const { return params.theta(); }
  double loglik() const { return loglik_trace.empty() ? kNegInf : loglik_trace.back(); }
};

// Deterministic stand-in for the eyeball histogram split: 1-d 2-means on
// the per-exposure rates m_ij / t_i, rare component = smaller cluster
// (ties toward the lower mean).
inline MixtureParams init_histogram_mixture(const CountMatrix& m, const ExposureGrid& g) {
  std::vector<double> rate;
  rate.reserve(m.v.size());
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j)
      rate.push_back(static_cast<double>(m(i, j)) / g.t[i]);
  const auto [lo_it, hi_it] = std::minmax_element(rate.begin(), rate.end());
  if (*lo_it == *hi_it) throw DegenerateData("all per-exposure counts identical");

  double c0 = *lo_it, c1 = *hi_it;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double s0 = 0.0, s1 = 0.0;
    int k0 = 0, k1 = 0;
    for (double x : rate) {
      if (std::abs(x - c0) <= std::abs(x - c1)) {
        s0 += x;
        ++k0;
      } else {
        s1 += x;
        ++k1;
      }
    }
    if (k0 == 0 || k1 == 0) break;
    const double n0 = s0 / k0, n1 = s1 / k1;
    if (n0 == c0 && n1 == c1) break;
    c0 = n0;
    c1 = n1;
  }
  double w0 = 0.0;
  for (double x : rate)
    if (std::abs(x - c0) <= std::abs(x - c1)) w0 += 1.0;
  w0 /= static_cast<double>(rate.size());

  // Rare component: smaller weight; on a tie the lower-mean cluster.
  const bool rare_is_0 = w0 < 0.5 || (w0 == 0.5 && c0 <= c1);
  MixtureParams init;
  init.pi = std::min(rare_is_0 ? w0 : 1.0 - w0, 0.5);
  init.pi = std::max(init.pi, 1e-3);
  init.mu = std::max(rare_is_0 ? c0 : c1, 1e-8);
  init.nu = std::max(rare_is_0 ? c1 : c0, 1e-8);
  return init;
}

struct EmOptions {
  double tol = 1e-8;             // loglik change threshold
  double param_tol = 1e-7;       // max parameter change threshold
  int max_iter = 2000;
};

inline MixtureFit fit_em_mixture(const CountMatrix& m, const ExposureGrid& g,
                                 std::optional<MixtureParams> init = std::nullopt,
                                 const EmOptions& opt = {}) {
  MixtureParams cur = init ? *init : init_histogram_mixture(m, g);
  MixtureFit fit;
  fit.J = g.J;
  fit.K = g.K();

  DataSet d;
  d.m = m;
  double prev_ll = kNegInf;
  for (int it = 0; it < opt.max_iter; ++it) {
    fit.yhat = estep_mixture(m, g, cur);
    const MixtureMStep step = mstep_mixture(m, g, fit.yhat);
    const double dpi = std::abs(step.params.pi - cur.pi);
    const double dmu = std::abs(step.params.mu - cur.mu);
    const double dnu = std::abs(step.params.nu - cur.nu);
    cur = step.params;
    fit.pi_clamped = step.pi_clamped;
    const double ll = observed_loglik(
        d, g, ModelParams{cur.pi, 1.0, cur.mu, cur.nu}, false);
    fit.loglik_trace.push_back(ll);
    fit.iterations = it + 1;
    if (std::abs(ll - prev_ll) < opt.tol &&
        std::max({dpi, dmu, dnu}) < opt.param_tol) {
      fit.converged = true;
      break;
    }
    prev_ll = ll;
  }
  fit.params = cur;

  // The t-free ratio update evaluated at the final responsibilities; it
  // coincides with mu/nu by construction.
  const auto mj = m.col_sums();
  double ybar = 0.0, my = 0.0, mbar = 0.0;
  for (int j = 0; j < g.J; ++j) {
    ybar += fit.yhat[j];
    my += static_cast<double>(mj[j]) * fit.yhat[j];
    mbar += static_cast<double>(mj[j]);
  }
  ybar /= g.J;
  my /= g.K();
  mbar /= g.K();
  fit.theta_update = (1.0 / ybar - 1.0) / (mbar / my - 1.0);
  return fit;
}

// Responsibilities, mixture denominators, and score-difference vectors
// entering the rank-one corrections of the observed information matrix.
struct MixtureInfoIntermediates {
  std::vector<double> p;                        // p_j
  std::vector<double> log_gamma;                // log gamma_j
  std::vector<std::array<double, 3>> delta_vecs;  // delta_j
};

inline MixtureInfoIntermediates mixture_info_intermediates(const CountMatrix& m,
                                                           const ExposureGrid& g,
                                                           const MixtureParams& at) {
  MixtureInfoIntermediates w;
  const auto mj = m.col_sums();
  const double tbar = g.tbar();
  const double I = static_cast<double>(g.I);
  const double sroot = std::sqrt(at.pi * (1.0 - at.pi));
  w.p = estep_mixture(m, g, at);
  w.log_gamma.resize(g.J);
  w.delta_vecs.resize(g.J);
  for (int j = 0; j < g.J; ++j) {
    const double mbar_j = static_cast<double>(mj[j]) / I;
    const double log_a = I * (-tbar * at.mu + mbar_j * std::log(at.mu));
    const double log_b = I * (-tbar * at.nu + mbar_j * std::log(at.nu));
    w.log_gamma[j] = log_sum_exp(std::log(at.pi) + log_a,
                                 std::log1p(-at.pi) + log_b);
    w.delta_vecs[j] = {1.0 / sroot, I * sroot * (mbar_j / at.mu - tbar),
                       -I * sroot * (mbar_j / at.nu - tbar)};
  }
  return w;
}

// Observed information matrix of the mixture log-likelihood, parameter
// order (pi, mu, nu): the conditional-expected complete-data diagonal
// minus the missing-information rank-one sum.  The weight
// exp(-I tbar (mu+nu)) (mu nu)^{m_j} / gamma_j^2 collapses to
// p_j (1 - p_j) / (pi (1 - pi)), which is how it is evaluated here; the
// shared log-space scaling happens inside the p_j computation.
inline Mat3 observed_info_mixture(const CountMatrix& m, const ExposureGrid& g,
                                  const MixtureParams& at) {
  if (!(at.pi > 0.0 && at.pi < 1.0))
    throw BoundaryParams("information matrix needs pi in (0, 1)");
  if (!(at.mu > 0.0 && at.nu > 0.0))
    throw BoundaryParams("information matrix needs mu, nu > 0");

  const auto w = mixture_info_intermediates(m, g, at);
  const auto mj = m.col_sums();
  const double Jd = static_cast<double>(g.J);
  const double Kd = static_cast<double>(g.K());
  const double pi = at.pi;

  double pbar = 0.0, mp = 0.0, m1p = 0.0;
  for (int j = 0; j < g.J; ++j) {
    pbar += w.p[j];
    mp += static_cast<double>(mj[j]) * w.p[j];
    m1p += static_cast<double>(mj[j]) * (1.0 - w.p[j]);
  }
  pbar /= Jd;
  mp /= Kd;
  m1p /= Kd;

  Mat3 info;
  info(0, 0) = Jd * ((1.0 - 2.0 * pi) * pbar + pi * pi) /
               (pi * pi * (1.0 - pi) * (1.0 - pi));
  info(1, 1) = Kd * mp / (at.mu * at.mu);
  info(2, 2) = Kd * m1p / (at.nu * at.nu);

  const double pscale = pi * (1.0 - pi);
  for (int j = 0; j < g.J; ++j)
    info.add_outer(w.delta_vecs[j], -w.p[j] * (1.0 - w.p[j]) / pscale);
  return info;
}

// Delta-method interval for theta = mu/nu from the (pi | mu, nu) Schur
// complement; only a 2x2 inversion is needed.
inline IntervalEstimate ci_theta_mixture(const MixtureFit& fit, const Mat3& info,
                                         double level) {
  if (fit.pi_clamped)
    throw BoundaryFit("pi clamped at 1/2: information interval not available");
  const Mat2 schur = schur_complement<1>(info);
  if (!(schur(0, 0) > 0.0) ||
      !(schur(0, 0) * schur(1, 1) - schur(0, 1) * schur(1, 0) > 0.0))
    throw SingularInfo("Schur complement not positive definite");
  const Mat2 sinv = inverse(schur);
  const double mu = fit.params.mu, nu = fit.params.nu;
  const std::array<double, 2> grad{1.0 / nu, -mu / (nu * nu)};
  const double var_over_k = quad_form(sinv, grad);
  if (!(var_over_k > 0.0)) throw SingularInfo("nonpositive variance estimate");
  const double half = std::sqrt(var_over_k) * z_for_level(level);
  IntervalEstimate out;
  out.level = level;
  out.point = fit.theta();
  out.lower = out.point - half;
  out.upper = out.point + half;
  return out;
}

}  // namespace zipmix
