#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "zipmix/conjugate.hpp"
#include "zipmix/em_mixture.hpp"
#include "zipmix/linalg.hpp"
#include "zipmix/model.hpp"

namespace zipmix {

// Imputed latent indicators given N = n: per-column yhat_j = E[Y_j | n],
// per-cell zhat_ij = E[Z_ij | n] and yzhat_ij = E[Y_j Z_ij | n].
struct ZipmResponsibilities {
  std::vector<double> yhat;       // J
  RealMatrix zhat;                // I x J; exactly 1 where n_ij > 0
  RealMatrix yzhat;               // I x J
  RealMatrix one_minus_yzhat;     // (1-y) z responsibilities; zhat - yzhat
};

namespace detail {

// eps e^{-t mu} / (eps e^{-t mu} + 1 - eps), the posterior that an observed
// zero cell is un-inflated given its column label.
inline double zero_cell_z_prob(double eps, double t_rate) {
  if (eps >= 1.0) return 1.0;
  return sigmoid(std::log(eps) - t_rate - std::log1p(-eps));
}

}  // namespace detail

// E-step.  yhat_j follows the closed form with the zero-pattern statistics
// (t-neq_j, n_j and the per-zero-cell factors); given the column posterior
// q_j, the cell imputations are conditional mixtures of the two labels:
//   zhat_ij  = 1                                  if n_ij > 0,
//            = q_j r(t_i;1,0) + (1-q_j) r(t_i;0,0) otherwise,
//   yzhat_ij = q_j * (n_ij > 0 ? 1 : r(t_i;1,0)),
// with r(t;y,0) the zero-cell posterior of Z under label y.
inline ZipmResponsibilities estep_zipm(const CountMatrix& n, const ExposureGrid& g,
                                       const ModelParams& cur) {
  if (n.rows != g.I || n.cols != g.J)
    throw DimensionMismatch("count matrix does not match grid");
  if (!(cur.pi > 0.0 && cur.pi < 1.0 && cur.eps > 0.0 && cur.eps <= 1.0 &&
        cur.mu > 0.0 && cur.nu > 0.0))
    throw DomainError("E-step needs interior parameters");

  const ZeroPattern zp(n, g);
  const auto nj = n.col_sums();
  const double logit_pi = std::log(cur.pi) - std::log1p(-cur.pi);
  const double log_ratio = std::log(cur.mu) - std::log(cur.nu);

  std::vector<double> r1(g.I), r0(g.I), log_cmu(g.I), log_cnu(g.I);
  for (int i = 0; i < g.I; ++i) {
    r1[i] = detail::zero_cell_z_prob(cur.eps, g.t[i] * cur.mu);
    r0[i] = detail::zero_cell_z_prob(cur.eps, g.t[i] * cur.nu);
    // log(eps e^{-t mu} + 1 - eps)
    log_cmu[i] = cur.eps >= 1.0
                     ? -g.t[i] * cur.mu
                     : log_sum_exp(std::log(cur.eps) - g.t[i] * cur.mu,
                                   std::log1p(-cur.eps));
    log_cnu[i] = cur.eps >= 1.0
                     ? -g.t[i] * cur.nu
                     : log_sum_exp(std::log(cur.eps) - g.t[i] * cur.nu,
                                   std::log1p(-cur.eps));
  }

  ZipmResponsibilities resp;
  resp.yhat.resize(g.J);
  resp.zhat = RealMatrix(g.I, g.J);
  resp.yzhat = RealMatrix(g.I, g.J);
  resp.one_minus_yzhat = RealMatrix(g.I, g.J);

  for (int j = 0; j < g.J; ++j) {
    double log_odds = logit_pi + zp.t_ne_j[j] * (cur.nu - cur.mu) +
                      static_cast<double>(nj[j]) * log_ratio;
    for (int i = 0; i < g.I; ++i)
      if (!zp.nonzero(i, j)) log_odds += log_cmu[i] - log_cnu[i];
    const double q = sigmoid(log_odds);
    resp.yhat[j] = q;
    for (int i = 0; i < g.I; ++i) {
      const bool ne = zp.nonzero(i, j) != 0;
      const double yz = q * (ne ? 1.0 : r1[i]);
      const double oyz = (1.0 - q) * (ne ? 1.0 : r0[i]);
      resp.yzhat(i, j) = yz;
      resp.one_minus_yzhat(i, j) = oyz;
      resp.zhat(i, j) = ne ? 1.0 : yz + oyz;
    }
  }
  return resp;
}

struct ZipmMStep {
  ModelParams params;
  bool pi_clamped = false;
  bool eps_clamped = false;
};

// M-step: complete-data MLEs with imputed sufficient statistics.  pi is
// clamped at 1/2; the analogous eps clamp is available behind a switch and
// off by default (eps > 1/2 is ordinary mild inflation, and only pi drives
// the labeling identifiability).
inline ZipmMStep mstep_zipm(const CountMatrix& n, const ExposureGrid& g,
                            const ZipmResponsibilities& resp,
                            bool clamp_eps = false) {
  if (static_cast<int>(resp.yhat.size()) != g.J || resp.zhat.rows != g.I ||
      resp.zhat.cols != g.J)
    throw DimensionMismatch("responsibilities do not match grid");
  const auto nj = n.col_sums();

  double sum_y = 0.0, sum_ny = 0.0, sum_n1y = 0.0;
  for (int j = 0; j < g.J; ++j) {
    sum_y += resp.yhat[j];
    sum_ny += static_cast<double>(nj[j]) * resp.yhat[j];
    sum_n1y += static_cast<double>(nj[j]) * (1.0 - resp.yhat[j]);
  }
  double sum_z = 0.0, sum_tyz = 0.0, sum_t1yz = 0.0;
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j) {
      sum_z += resp.zhat(i, j);
      sum_tyz += g.t[i] * resp.yzhat(i, j);
      sum_t1yz += g.t[i] * resp.one_minus_yzhat(i, j);
    }

  if (sum_y == 0.0 || sum_tyz == 0.0)
    throw EmptyComponent("rare component has zero responsibility mass");
  if (sum_y == static_cast<double>(g.J) || sum_t1yz == 0.0)
    throw EmptyComponent("common component has zero responsibility mass");

  ZipmMStep out;
  const double pi_raw = sum_y / static_cast<double>(g.J);
  const double eps_raw = sum_z / static_cast<double>(g.K());
  out.pi_clamped = pi_raw > 0.5;
  out.eps_clamped = clamp_eps && eps_raw > 0.5;
  out.params.pi = out.pi_clamped ? 0.5 : pi_raw;
  out.params.eps = out.eps_clamped ? 0.5 : eps_raw;
  out.params.mu = sum_ny / sum_tyz;
  out.params.nu = sum_n1y / sum_t1yz;
  return out;
}

struct ZipmFit {
  ModelParams params;
  std::vector<double> loglik_trace;
  ZipmResponsibilities resp;
  int iterations = 0;
  bool converged = false;
  bool pi_clamped = false;
  bool eps_clamped = false;
  bool eps_at_one = false;   // no-zeros data drives eps to the boundary
  int J = 0;
  int K = 0;

  double theta() const { return params.theta(); }
  double loglik() const { return loglik_trace.empty() ? kNegInf : loglik_trace.back(); }
  bool boundary() const { return pi_clamped || eps_clamped || eps_at_one; }
};

// Histogram-style starting point: the spike at zero in excess of what the
// fitted nonzero rate would produce gives 1 - eps0; a 2-means split of the
// nonzero per-exposure rates gives (pi0, mu0, nu0).
inline ModelParams init_histogram_zipm(const CountMatrix& n, const ExposureGrid& g) {
  if (n.total() == 0) throw AllZeros("no nonzero counts");
  std::vector<double> nonzero_rates;
  double zero_frac = 0.0;
  double rate_sum = 0.0;
  for (int i = 0; i < n.rows; ++i)
    for (int j = 0; j < n.cols; ++j) {
      if (n(i, j) == 0) {
        zero_frac += 1.0;
      } else {
        nonzero_rates.push_back(static_cast<double>(n(i, j)) / g.t[i]);
        rate_sum += static_cast<double>(n(i, j)) / g.t[i];
      }
    }
  const double K = static_cast<double>(g.K());
  zero_frac /= K;
  const double lam = rate_sum / static_cast<double>(nonzero_rates.size());
  double pois_zero_mass = 0.0;
  for (int i = 0; i < g.I; ++i) pois_zero_mass += std::exp(-g.t[i] * lam);
  pois_zero_mass *= static_cast<double>(g.J) / K;

  ModelParams init;
  init.eps = std::clamp(1.0 - std::max(0.0, zero_frac - pois_zero_mass), 0.01, 0.99);

  const auto [lo_it, hi_it] = std::minmax_element(nonzero_rates.begin(), nonzero_rates.end());
  if (*lo_it == *hi_it) {
    init.pi = 0.25;
    init.mu = std::max(*lo_it * 0.5, 1e-8);
    init.nu = std::max(*lo_it, 1e-8);
    return init;
  }
  double c0 = *lo_it, c1 = *hi_it;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double s0 = 0.0, s1 = 0.0;
    int k0 = 0, k1 = 0;
    for (double x : nonzero_rates) {
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
  for (double x : nonzero_rates)
    if (std::abs(x - c0) <= std::abs(x - c1)) w0 += 1.0;
  w0 /= static_cast<double>(nonzero_rates.size());
  const bool rare_is_0 = w0 < 0.5 || (w0 == 0.5 && c0 <= c1);
  init.pi = std::clamp(rare_is_0 ? w0 : 1.0 - w0, 1e-3, 0.5);
  init.mu = std::max(rare_is_0 ? c0 : c1, 1e-8);
  init.nu = std::max(rare_is_0 ? c1 : c0, 1e-8);
  return init;
}

struct ZipmEmOptions {
  double tol = 1e-8;
  double param_tol = 1e-7;
  int max_iter = 2000;
  bool clamp_eps = false;
};

inline ZipmFit fit_em_zipm(const CountMatrix& n, const ExposureGrid& g,
                           std::optional<ModelParams> init = std::nullopt,
                           const ZipmEmOptions& opt = {}) {
  if (n.total() == 0) throw AllZeros("cannot fit: n is identically zero");
  ModelParams cur = init ? *init : init_histogram_zipm(n, g);
  ZipmFit fit;
  fit.J = g.J;
  fit.K = g.K();

  DataSet d;
  d.n = n;
  double prev_ll = kNegInf;
  for (int it = 0; it < opt.max_iter; ++it) {
    fit.resp = estep_zipm(n, g, cur);
    const ZipmMStep step = mstep_zipm(n, g, fit.resp, opt.clamp_eps);
    const double dmax = std::max(
        {std::abs(step.params.pi - cur.pi), std::abs(step.params.eps - cur.eps),
         std::abs(step.params.mu - cur.mu), std::abs(step.params.nu - cur.nu)});
    cur = step.params;
    fit.pi_clamped = step.pi_clamped;
    fit.eps_clamped = step.eps_clamped;
    const double ll = observed_loglik(d, g, cur, true);
    fit.loglik_trace.push_back(ll);
    fit.iterations = it + 1;
    if (std::abs(ll - prev_ll) < opt.tol && dmax < opt.param_tol) {
      fit.converged = true;
      break;
    }
    prev_ll = ll;
  }
  fit.params = cur;
  fit.eps_at_one = cur.eps >= 1.0 - 1e-12;
  return fit;
}

// Per-column posteriors q_j, the zero-cell aggregate rho = E[Zbar | n], the
// column mixture denominators psi_j (logs), and the vectors entering the
// rank-one information corrections.
struct ZipmInfoIntermediates {
  std::vector<double> q;                          // J
  double rho = 0.0;
  std::vector<double> log_psi;                    // J
  std::vector<std::array<double, 4>> phi_vecs;    // J
  std::vector<std::array<double, 4>> chi1;        // I
  std::vector<std::array<double, 4>> chi0;        // I
};

inline ZipmInfoIntermediates zipm_info_intermediates(const CountMatrix& n,
                                                     const ExposureGrid& g,
                                                     const ModelParams& at) {
  const ZeroPattern zp(n, g);
  const auto nj = n.col_sums();
  const double eps = at.eps;

  ZipmInfoIntermediates w;
  w.q = estep_zipm(n, g, at).yhat;

  // Per-day pieces for zero cells; c = eps e^{-t r} + 1 - eps.
  std::vector<double> log_cmu(g.I), log_cnu(g.I), emu(g.I), enu(g.I);
  for (int i = 0; i < g.I; ++i) {
    emu[i] = std::exp(-g.t[i] * at.mu);
    enu[i] = std::exp(-g.t[i] * at.nu);
    log_cmu[i] = log_sum_exp(std::log(eps) - g.t[i] * at.mu, std::log1p(-eps));
    log_cnu[i] = log_sum_exp(std::log(eps) - g.t[i] * at.nu, std::log1p(-eps));
    w.chi1.push_back({0.0, 1.0 / (eps * (1.0 - eps)), -g.t[i], 0.0});
    w.chi0.push_back({0.0, 1.0 / (eps * (1.0 - eps)), 0.0, -g.t[i]});
  }

  w.log_psi.resize(g.J);
  w.phi_vecs.resize(g.J);
  double rho_sum = 0.0;
  for (int j = 0; j < g.J; ++j) {
    double log_a = std::log(at.pi) - zp.t_ne_j[j] * at.mu +
                   static_cast<double>(nj[j]) * std::log(at.mu);
    double log_b = std::log1p(-at.pi) - zp.t_ne_j[j] * at.nu +
                   static_cast<double>(nj[j]) * std::log(at.nu);
    double s = 0.0, gmu = 0.0, gnu = 0.0;
    for (int i = 0; i < g.I; ++i) {
      if (zp.nonzero(i, j)) continue;
      log_a += log_cmu[i];
      log_b += log_cnu[i];
      const double cmu = std::exp(log_cmu[i]);
      const double cnu = std::exp(log_cnu[i]);
      s += (emu[i] - enu[i]) / (cmu * cnu);
      gmu += g.t[i] * emu[i] / cmu;
      gnu += g.t[i] * enu[i] / cnu;
      rho_sum += w.q[j] / (eps + (1.0 - eps) / emu[i]) +
                 (1.0 - w.q[j]) / (eps + (1.0 - eps) / enu[i]);
    }
    w.log_psi[j] = log_sum_exp(log_a, log_b);
    const double njd = static_cast<double>(nj[j]);
    w.phi_vecs[j] = {1.0 / (at.pi * (1.0 - at.pi)), s,
                     njd / at.mu - zp.t_ne_j[j] - eps * gmu,
                     -(njd / at.nu - zp.t_ne_j[j] - eps * gnu)};
  }
  w.rho = (static_cast<double>(zp.nonzero_total) + eps * rho_sum) /
          static_cast<double>(g.K());
  return w;
}

// Observed information matrix of the zero-inflated model, parameter order
// (pi, eps, mu, nu): conditional-expected complete-data diagonal minus the
// missing-information terms, one rank-one block per column plus two per
// zero cell.  The column weight psi_j^{-2}-style product collapses to
// q_j (1 - q_j) / (pi (1 - pi)), evaluated through the log-space q_j.
inline Mat4 observed_info_zipm(const CountMatrix& n, const ExposureGrid& g,
                               const ModelParams& at) {
  if (!(at.pi > 0.0 && at.pi < 1.0) || !(at.eps > 0.0 && at.eps < 1.0))
    throw BoundaryParams("information matrix needs pi, eps in (0, 1)");
  if (!(at.mu > 0.0 && at.nu > 0.0))
    throw BoundaryParams("information matrix needs mu, nu > 0");

  const ZeroPattern zp(n, g);
  const auto w = zipm_info_intermediates(n, g, at);
  const auto nj = n.col_sums();
  const double Jd = static_cast<double>(g.J);
  const double Kd = static_cast<double>(g.K());
  const double pi = at.pi, eps = at.eps;

  double qbar = 0.0, nq = 0.0, n1q = 0.0;
  for (int j = 0; j < g.J; ++j) {
    qbar += w.q[j];
    nq += static_cast<double>(nj[j]) * w.q[j];
    n1q += static_cast<double>(nj[j]) * (1.0 - w.q[j]);
  }
  qbar /= Jd;

  Mat4 info;
  info(0, 0) = Jd * ((1.0 - 2.0 * pi) * qbar + pi * pi) /
               (pi * pi * (1.0 - pi) * (1.0 - pi));
  info(1, 1) = Kd * ((1.0 - 2.0 * eps) * w.rho + eps * eps) /
               (eps * eps * (1.0 - eps) * (1.0 - eps));
  info(2, 2) = nq / (at.mu * at.mu);
  info(3, 3) = n1q / (at.nu * at.nu);

  for (int j = 0; j < g.J; ++j)
    info.add_outer(w.phi_vecs[j], -w.q[j] * (1.0 - w.q[j]) / (pi * (1.0 - pi)));

  for (int i = 0; i < g.I; ++i) {
    const double cmu = eps * std::exp(-g.t[i] * at.mu) + 1.0 - eps;
    const double cnu = eps * std::exp(-g.t[i] * at.nu) + 1.0 - eps;
    const double wmu = std::exp(-g.t[i] * at.mu) / (cmu * cmu);
    const double wnu = std::exp(-g.t[i] * at.nu) / (cnu * cnu);
    for (int j = 0; j < g.J; ++j) {
      if (zp.nonzero(i, j)) continue;
      info.add_outer(w.chi1[i], -eps * (1.0 - eps) * wmu * w.q[j]);
      info.add_outer(w.chi0[i], -eps * (1.0 - eps) * wnu * (1.0 - w.q[j]));
    }
  }
  return info;
}

// Delta-method interval for theta from the 2x2-block Schur complement of
// the 4x4 information matrix.
inline IntervalEstimate ci_theta_zipm(const ZipmFit& fit, const Mat4& info,
                                      double level) {
  if (fit.boundary())
    throw BoundaryFit("boundary fit: information interval not available");
  const Mat2 schur = schur_complement<2>(info);
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
