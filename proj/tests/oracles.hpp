// Test-only reference implementations.  Everything here is deliberately
// naive (direct products, exhaustive enumeration, finite differences,
// quadrature) and independent of the library's evaluation paths.
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "zipmix/linalg.hpp"
#include "zipmix/model.hpp"
#include "zipmix/numeric.hpp"

namespace oracle {

// Plain-arithmetic Poisson pmf: e^{-lam} lam^k / k! by running product.
inline double poisson_pmf_naive(std::int64_t k, double lam) {
  double p = std::exp(-lam);
  for (std::int64_t i = 1; i <= k; ++i) p *= lam / static_cast<double>(i);
  return p;
}

// Central finite-difference Hessian of f at x with step h.
template <std::size_t N>
zipmix::Mat<N> fd_hessian(const std::function<double(const std::array<double, N>&)>& f,
                          std::array<double, N> x, double h = 1e-5) {
  zipmix::Mat<N> hess;
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = a; b < N; ++b) {
      double v;
      if (a == b) {
        auto xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        v = (f(xp) - 2.0 * f(x) + f(xm)) / (h * h);
      } else {
        auto xpp = x, xpm = x, xmp = x, xmm = x;
        xpp[a] += h;
        xpp[b] += h;
        xpm[a] += h;
        xpm[b] -= h;
        xmp[a] -= h;
        xmp[b] += h;
        xmm[a] -= h;
        xmm[b] -= h;
        v = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
      }
      hess(a, b) = v;
      hess(b, a) = v;
    }
  }
  return hess;
}

template <std::size_t N>
double max_rel_error(const zipmix::Mat<N>& got, const zipmix::Mat<N>& want) {
  const double scale = std::max(want.max_abs(), 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      const double denom = std::max(std::abs(want(i, j)), 1e-8 * scale);
      worst = std::max(worst, std::abs(got(i, j) - want(i, j)) / denom);
    }
  return worst;
}

// Joint pmf f_omega(y, z, n) evaluated as the literal triple product of
// Bernoulli and Poisson factors (log scale, cell by cell).
inline double zipm_joint_logpmf(const std::vector<std::uint8_t>& y,
                                const zipmix::BitMatrix& z,
                                const zipmix::CountMatrix& n,
                                const zipmix::ExposureGrid& g,
                                const zipmix::ModelParams& p) {
  double ll = 0.0;
  for (int j = 0; j < g.J; ++j)
    ll += y[j] ? std::log(p.pi) : std::log1p(-p.pi);
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j) {
      if (z(i, j)) {
        const double rate = g.t[i] * (y[j] ? p.mu : p.nu);
        ll += std::log(p.eps) + zipmix::poisson_logpmf(n(i, j), rate);
      } else {
        if (n(i, j) != 0) return zipmix::kNegInf;
        ll += std::log1p(-p.eps);
      }
    }
  return ll;
}

// Posterior moments of the latent indicators by exhaustive enumeration of
// (y, z) over Upsilon x Omega_n.
struct ZipmEnumeration {
  std::vector<double> ey;          // E[Y_j | n]
  zipmix::RealMatrix ez;           // E[Z_ij | n]
  zipmix::RealMatrix eyz;          // E[Y_j Z_ij | n]
  double log_marginal;             // log f_omega(n)
};

inline ZipmEnumeration enumerate_zipm_posterior(const zipmix::CountMatrix& n,
                                                const zipmix::ExposureGrid& g,
                                                const zipmix::ModelParams& p) {
  std::vector<std::pair<int, int>> zero_cells;
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j)
      if (n(i, j) == 0) zero_cells.emplace_back(i, j);

  const std::uint32_t ymasks = 1u << g.J;
  const std::uint32_t zmasks = 1u << zero_cells.size();

  std::vector<double> logw;
  std::vector<std::uint32_t> yms, zms;
  for (std::uint32_t ym = 0; ym < ymasks; ++ym) {
    std::vector<std::uint8_t> y(g.J);
    for (int j = 0; j < g.J; ++j) y[j] = (ym >> j) & 1u;
    for (std::uint32_t zm = 0; zm < zmasks; ++zm) {
      zipmix::BitMatrix z(g.I, g.J);
      for (int i = 0; i < g.I; ++i)
        for (int j = 0; j < g.J; ++j) z(i, j) = n(i, j) != 0 ? 1 : 0;
      for (std::size_t c = 0; c < zero_cells.size(); ++c)
        if ((zm >> c) & 1u) z(zero_cells[c].first, zero_cells[c].second) = 1;
      logw.push_back(zipm_joint_logpmf(y, z, n, g, p));
      yms.push_back(ym);
      zms.push_back(zm);
    }
  }
  const double log_marg = zipmix::log_sum_exp(logw);

  ZipmEnumeration out;
  out.log_marginal = log_marg;
  out.ey.assign(g.J, 0.0);
  out.ez = zipmix::RealMatrix(g.I, g.J);
  out.eyz = zipmix::RealMatrix(g.I, g.J);
  for (std::size_t s = 0; s < logw.size(); ++s) {
    const double w = std::exp(logw[s] - log_marg);
    const std::uint32_t ym = yms[s], zm = zms[s];
    for (int j = 0; j < g.J; ++j)
      if ((ym >> j) & 1u) out.ey[j] += w;
    for (int i = 0; i < g.I; ++i)
      for (int j = 0; j < g.J; ++j) {
        bool zij = n(i, j) != 0;
        if (!zij)
          for (std::size_t c = 0; c < zero_cells.size(); ++c)
            if (zero_cells[c].first == i && zero_cells[c].second == j)
              zij = (zm >> c) & 1u;
        if (zij) {
          out.ez(i, j) += w;
          if ((ym >> j) & 1u) out.eyz(i, j) += w;
        }
      }
  }
  return out;
}

// E[Y_j | m] for the two-component mixture via the unsimplified Bayes
// formula with per-cell Poisson pmfs.
inline std::vector<double> mixture_posterior_naive(const zipmix::CountMatrix& m,
                                                   const zipmix::ExposureGrid& g,
                                                   double pi, double mu, double nu) {
  std::vector<double> out(g.J);
  for (int j = 0; j < g.J; ++j) {
    double num = pi, den_b = 1.0 - pi;
    for (int i = 0; i < g.I; ++i) {
      num *= poisson_pmf_naive(m(i, j), g.t[i] * mu);
      den_b *= poisson_pmf_naive(m(i, j), g.t[i] * nu);
    }
    out[j] = num / (num + den_b);
  }
  return out;
}

// Elementary symmetric function by explicit subset enumeration.
inline double elem_symm_bruteforce(const std::vector<std::int64_t>& mjs, double theta,
                                   int j) {
  const int J = static_cast<int>(mjs.size());
  double sum = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << J); ++mask) {
    if (std::popcount(mask) != j) continue;
    double prod = 1.0;
    for (int k = 0; k < J; ++k)
      if (mask & (1u << k)) prod *= std::pow(theta, static_cast<double>(mjs[k]));
    sum += prod;
  }
  return sum;
}

// Simple deterministic pseudo-random count matrices for property tests.
inline zipmix::CountMatrix random_counts(int I, int J, std::int64_t max_count,
                                         std::uint64_t seed) {
  zipmix::CountMatrix m(I, J);
  std::uint64_t s = seed * 6364136223846793005ull + 1442695040888963407ull;
  for (auto& x : m.v) {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    x = static_cast<std::int64_t>((s >> 33) % static_cast<std::uint64_t>(max_count + 1));
  }
  return m;
}

}  // namespace oracle
