#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "zipmix/elem_symm.hpp"
#include "zipmix/model.hpp"
#include "zipmix/numeric.hpp"
#include "zipmix/simulate.hpp"

namespace zipmix {

// ---------------------------------------------------------------------------
// Prior moment weights.

// log g(j) = log INT_0^{1/2} pi^j (1-pi)^{J-j} theta_prior(pi) dpi for
// j = 0..J.  The integrand is scaled by its maximum before quadrature so
// large-J moments do not underflow.
inline std::vector<double> log_g_weights(const PriorSpec& prior, int J) {
  std::vector<double> out(J + 1);
  for (int j = 0; j <= J; ++j) {
    auto logf = [&](double p) {
      if (p <= 0.0 || p > 0.5) return kNegInf;
      return j * std::log(p) + (J - j) * std::log1p(-p) + std::log(prior.pi_density(p));
    };
    double peak = kNegInf;
    for (int k = 1; k <= 512; ++k)
      peak = std::max(peak, logf(0.5 * k / 512.0));
    const double integral = integrate(
        [&](double p) { return std::exp(logf(p) - peak); }, 0.0, 0.5, 1e-12);
    out[j] = peak + std::log(integral);
  }
  return out;
}

// log h(l) for l = 0..K under the beta(eta, kappa) prior on eps.
inline std::vector<double> log_h_weights(const PriorSpec& prior, int K) {
  std::vector<double> out(K + 1);
  const double base = std::lgamma(prior.eta + prior.kappa) - std::lgamma(prior.eta) -
                      std::lgamma(prior.kappa) - std::lgamma(prior.eta + prior.kappa + K);
  for (int l = 0; l <= K; ++l)
    out[l] = base + std::lgamma(prior.eta + l) + std::lgamma(prior.kappa + K - l);
  return out;
}

namespace detail {

// log of Gamma(n + delta) prod t_i^{n_i} / (Gamma(delta) n!).
inline double count_prefactor(const CountMatrix& c, const ExposureGrid& g, double delta) {
  const auto ni = c.row_sums();
  double pref = std::lgamma(static_cast<double>(c.total()) + delta) - std::lgamma(delta);
  for (int i = 0; i < g.I; ++i)
    pref += static_cast<double>(ni[i]) * std::log(g.t[i]);
  for (auto x : c.v) pref -= std::lgamma(static_cast<double>(x) + 1.0);
  return pref;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Integrated likelihoods.

// log f_delta(m | y; theta): the lambda-integrated pmf of the full array
// given the site labels.
inline double integrated_loglik_given_y(const CountMatrix& m, const ExposureGrid& g,
                                        const std::vector<std::uint8_t>& y,
                                        double delta, double theta) {
  if (m.rows != g.I || m.cols != g.J || static_cast<int>(y.size()) != g.J)
    throw DimensionMismatch("dataset does not match grid");
  if (!(theta > 0.0)) return kNegInf;
  if (!(delta > 0.0)) throw DomainError("delta: require delta > 0");

  const auto mj = m.col_sums();
  std::int64_t m_S = 0;
  int ones = 0;
  for (int j = 0; j < g.J; ++j)
    if (y[j]) {
      m_S += mj[j];
      ++ones;
    }
  const double ktbar = g.K() * g.tbar();
  const double ybar = static_cast<double>(ones) / g.J;
  const double denom = ktbar * ybar * theta + ktbar * (1.0 - ybar) + 1.0;
  const double md = static_cast<double>(m.total());
  return detail::count_prefactor(m, g, delta) +
         static_cast<double>(m_S) * std::log(theta) - (md + delta) * std::log(denom);
}

// log f(m | theta) with (pi, lambda) integrated out: the j-sum of prior
// moment weights times elementary symmetric functions over denominator
// powers.
inline double integrated_loglik_mixture(const CountMatrix& m, const ExposureGrid& g,
                                        const PriorSpec& prior, double theta,
                                        const std::vector<double>* log_g_cache = nullptr) {
  if (m.rows != g.I || m.cols != g.J)
    throw DimensionMismatch("dataset does not match grid");
  if (!(theta > 0.0)) return kNegInf;

  const std::vector<double> log_g_local =
      log_g_cache ? std::vector<double>() : log_g_weights(prior, g.J);
  const std::vector<double>& lg = log_g_cache ? *log_g_cache : log_g_local;

  const ElemSymmTable es = elem_symm_log(m.col_sums(), theta);
  const double ktbar = g.K() * g.tbar();
  const double md = static_cast<double>(m.total());
  const double Jd = static_cast<double>(g.J);

  std::vector<double> terms(g.J + 1);
  for (int j = 0; j <= g.J; ++j) {
    const double frac = static_cast<double>(j) / Jd;
    const double denom = ktbar * frac * theta + ktbar * (1.0 - frac) + 1.0;
    terms[j] = lg[j] + es.log_s(j) - (md + prior.delta) * std::log(denom);
  }
  return detail::count_prefactor(m, g, prior.delta) + log_sum_exp(terms);
}

// log f(z, n | theta) with (pi, eps, lambda) integrated out; the sigma-sum
// over site subsets is enumerated exactly.
inline double integrated_loglik_zn(const CountMatrix& n, const BitMatrix& z,
                                   const ExposureGrid& g, const PriorSpec& prior,
                                   double theta, int j_max = 15,
                                   const std::vector<double>* log_g_cache = nullptr) {
  if (n.rows != g.I || n.cols != g.J || z.rows != g.I || z.cols != g.J)
    throw DimensionMismatch("dataset does not match grid");
  if (g.J > j_max)
    throw SizeLimit("sigma enumeration needs J <= " + std::to_string(j_max));
  if (!(theta > 0.0)) return kNegInf;
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j)
      if (n(i, j) != 0 && !z(i, j))
        throw SupportViolation("n_ij > 0 with z_ij = 0");

  const std::vector<double> log_g_local =
      log_g_cache ? std::vector<double>() : log_g_weights(prior, g.J);
  const std::vector<double>& lg = log_g_cache ? *log_g_cache : log_g_local;

  const auto nj = n.col_sums();
  std::vector<double> tz_j(g.J, 0.0);
  int z_total = 0;
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j)
      if (z(i, j)) {
        tz_j[j] += g.t[i];
        ++z_total;
      }
  double tz = 0.0;
  for (double v : tz_j) tz += v;

  const double nd = static_cast<double>(n.total());
  const std::vector<double> lh = log_h_weights(prior, g.K());
  const std::uint32_t masks = 1u << g.J;
  std::vector<double> terms;
  terms.reserve(masks);
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    std::int64_t n_sigma = 0;
    double tz_sigma = 0.0;
    int pop = 0;
    for (int j = 0; j < g.J; ++j)
      if (mask & (1u << j)) {
        n_sigma += nj[j];
        tz_sigma += tz_j[j];
        ++pop;
      }
    const double denom = tz_sigma * theta + (tz - tz_sigma) + 1.0;
    terms.push_back(lg[pop] + static_cast<double>(n_sigma) * std::log(theta) -
                    (nd + prior.delta) * std::log(denom));
  }
  return detail::count_prefactor(n, g, prior.delta) + lh[z_total] + log_sum_exp(terms);
}

struct IntegratedEstimate {
  double log_value = kNegInf;
  double se_log = 0.0;      // 0 in exact mode
  bool exact = true;
};

struct MonteCarloSpec {
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
};

// log f(n | theta) with all of (pi, eps, lambda) integrated out.  Exact
// mode enumerates site subsets sigma and all z-patterns on the zero cells
// (nonzero cells force z = 1); feasible only at desk scale, so the caps
// J <= 10 and K <= 16 are enforced.  Monte Carlo mode importance-samples
// (y, z) with independent fair Bernoullis on the free coordinates.
inline IntegratedEstimate integrated_loglik_n(const CountMatrix& n, const ExposureGrid& g,
                                              const PriorSpec& prior, double theta,
                                              const MonteCarloSpec* mc = nullptr) {
  if (n.rows != g.I || n.cols != g.J)
    throw DimensionMismatch("dataset does not match grid");
  if (!(theta > 0.0)) return {kNegInf, 0.0, mc == nullptr};

  const auto nj = n.col_sums();
  const double nd = static_cast<double>(n.total());
  const double log_theta = std::log(theta);
  const std::vector<double> lg = log_g_weights(prior, g.J);
  const std::vector<double> lh = log_h_weights(prior, g.K());
  const double pref = detail::count_prefactor(n, g, prior.delta);

  // Cells with n_ij = 0 (free z coordinates) and the forced-z sums.
  std::vector<std::pair<int, int>> zero_cells;
  double t_forced = 0.0;
  std::vector<double> t_forced_j(g.J, 0.0);
  int forced = 0;
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j) {
      if (n(i, j) == 0) {
        zero_cells.emplace_back(i, j);
      } else {
        t_forced += g.t[i];
        t_forced_j[j] += g.t[i];
        ++forced;
      }
    }

  if (mc == nullptr) {
    if (g.J > 10 || g.K() > 16)
      throw SizeLimit("exact mode needs J <= 10 and K <= 16");
    const std::uint32_t smasks = 1u << g.J;
    const std::uint32_t zmasks = 1u << zero_cells.size();

    std::vector<std::int64_t> n_sigma(smasks, 0);
    for (std::uint32_t mask = 1; mask < smasks; ++mask) {
      const int low = std::countr_zero(mask);
      n_sigma[mask] = n_sigma[mask & (mask - 1)] + nj[low];
    }

    double run_max = kNegInf, run_sum = 0.0;
    auto accumulate = [&](double term) {
      if (term == kNegInf) return;
      if (term <= run_max) {
        run_sum += std::exp(term - run_max);
      } else {
        run_sum = run_sum * std::exp(run_max - term) + 1.0;
        run_max = term;
      }
    };

    std::vector<double> t_tau_j(g.J);
    for (std::uint32_t zmask = 0; zmask < zmasks; ++zmask) {
      for (int j = 0; j < g.J; ++j) t_tau_j[j] = t_forced_j[j];
      double t_tau = t_forced;
      int tau_size = forced;
      for (std::size_t c = 0; c < zero_cells.size(); ++c)
        if (zmask & (1u << c)) {
          t_tau_j[zero_cells[c].second] += g.t[zero_cells[c].first];
          t_tau += g.t[zero_cells[c].first];
          ++tau_size;
        }
      // Lowest-bit recursion over sigma for the in-sigma t-sums.
      std::vector<double> t_st(smasks, 0.0);
      for (std::uint32_t mask = 1; mask < smasks; ++mask) {
        const int low = std::countr_zero(mask);
        t_st[mask] = t_st[mask & (mask - 1)] + t_tau_j[low];
      }
      for (std::uint32_t mask = 0; mask < smasks; ++mask) {
        const double denom = t_st[mask] * theta + (t_tau - t_st[mask]) + 1.0;
        accumulate(lg[std::popcount(mask)] + lh[tau_size] +
                   static_cast<double>(n_sigma[mask]) * log_theta -
                   (nd + prior.delta) * std::log(denom));
      }
    }
    return {pref + run_max + std::log(run_sum), 0.0, true};
  }

  // Monte Carlo: uniform proposal over y in {0,1}^J and z on zero cells.
  Rng rng(mc->seed);
  const double log_proposal_mass =
      -(static_cast<double>(g.J) + static_cast<double>(zero_cells.size())) * M_LN2;
  std::vector<double> logf(static_cast<std::size_t>(mc->samples));
  std::vector<std::uint8_t> y(g.J);
  for (std::int64_t s = 0; s < mc->samples; ++s) {
    int ycount = 0;
    for (int j = 0; j < g.J; ++j) {
      y[j] = rng.bernoulli(0.5) ? 1 : 0;
      ycount += y[j];
    }
    double tyz = 0.0, t1yz = 0.0;
    std::int64_t k_ny = 0;
    int tau_size = forced;
    for (int j = 0; j < g.J; ++j) {
      (y[j] ? tyz : t1yz) += t_forced_j[j];
      if (y[j]) k_ny += nj[j];
    }
    for (const auto& [i, j] : zero_cells)
      if (rng.bernoulli(0.5)) {
        (y[j] ? tyz : t1yz) += g.t[i];
        ++tau_size;
      }
    const double denom = tyz * theta + t1yz + 1.0;
    logf[static_cast<std::size_t>(s)] =
        lg[ycount] + lh[tau_size] + static_cast<double>(k_ny) * log_theta -
        (nd + prior.delta) * std::log(denom);
  }
  const double lse = log_sum_exp(logf);
  const double log_mean = lse - std::log(static_cast<double>(mc->samples));
  // Relative standard error of the weight mean.
  double sq = 0.0;
  for (double lf : logf) sq += std::exp(2.0 * (lf - log_mean));
  const double samples_d = static_cast<double>(mc->samples);
  const double var_w = std::max(0.0, sq / samples_d - 1.0);
  const double se_log = std::sqrt(var_w / samples_d);
  return {pref + log_mean - log_proposal_mass, se_log, false};
}

// ---------------------------------------------------------------------------
// Posterior simulation.

struct McmcChain {
  std::vector<double> samples;    // post burn-in theta draws
  double acceptance_rate = 0.0;
  int burn_in = 0;
  std::uint64_t seed = 0;

  double mean() const {
    double s = 0.0;
    for (double x : samples) s += x;
    return s / static_cast<double>(samples.size());
  }
  double quantile(double p) const {
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double idx = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double w = idx - static_cast<double>(lo);
    return sorted[lo] * (1.0 - w) + sorted[hi] * w;
  }
};

struct McmcOptions {
  int n_samples = 5000;
  double proposal_sd = 0.5;
  double burn_in_frac = 0.2;
  double init_theta = 1.0;
  std::uint64_t seed = 1;
};

// Random-walk Metropolis on log theta against target
// loglik(theta) + log_prior(theta); deterministic given the seed.
inline McmcChain mcmc_posterior_theta(const std::function<double(double)>& loglik,
                                      const std::function<double(double)>& log_prior,
                                      const McmcOptions& opt = {}) {
  if (opt.n_samples < 1) throw DomainError("n_samples: require >= 1");
  Rng rng(opt.seed);
  McmcChain chain;
  chain.seed = opt.seed;
  chain.burn_in = static_cast<int>(opt.burn_in_frac * opt.n_samples);

  auto log_target = [&](double x) {
    const double theta = std::exp(x);
    return loglik(theta) + log_prior(theta) + x;  // + x: Jacobian of log map
  };
  double x = std::log(opt.init_theta);
  double lt = log_target(x);
  std::int64_t accepted = 0;
  chain.samples.reserve(static_cast<std::size_t>(opt.n_samples - chain.burn_in));
  for (int s = 0; s < opt.n_samples; ++s) {
    const double prop = x + rng.normal(0.0, opt.proposal_sd);
    const double lt_prop = log_target(prop);
    if (std::log(rng.uniform() + 1e-300) < lt_prop - lt) {
      x = prop;
      lt = lt_prop;
      ++accepted;
    }
    if (s >= chain.burn_in) chain.samples.push_back(std::exp(x));
  }
  chain.acceptance_rate = static_cast<double>(accepted) / opt.n_samples;
  return chain;
}

// ---------------------------------------------------------------------------
// Sufficiency diagnostics.

struct SufficiencyReport {
  std::vector<double> thetas;
  std::vector<double> log_offsets;   // log f_a - log f_b per theta
  double offset_variance = 0.0;
  double max_abs_deviation = 0.0;    // from the mean offset
  bool constant_offset = false;
};

// Compares the integrated likelihood curves of two datasets; they share a
// sufficient statistic exactly when the log-offset is theta-free.
inline SufficiencyReport sufficiency_check(const CountMatrix& a, const CountMatrix& b,
                                           const ExposureGrid& g, const PriorSpec& prior,
                                           const std::vector<double>& thetas,
                                           double tol = 1e-9) {
  if (thetas.empty()) throw DomainError("theta grid is empty");
  SufficiencyReport rep;
  rep.thetas = thetas;
  double mean = 0.0;
  for (double th : thetas) {
    const double la = integrated_loglik_n(a, g, prior, th).log_value;
    const double lb = integrated_loglik_n(b, g, prior, th).log_value;
    rep.log_offsets.push_back(la - lb);
    mean += la - lb;
  }
  mean /= static_cast<double>(thetas.size());
  for (double off : rep.log_offsets) {
    rep.offset_variance += (off - mean) * (off - mean);
    rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(off - mean));
  }
  rep.offset_variance /= static_cast<double>(thetas.size());
  rep.constant_offset = rep.max_abs_deviation < tol;
  return rep;
}

}  // namespace zipmix
