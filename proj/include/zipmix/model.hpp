#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zipmix/errors.hpp"
#include "zipmix/numeric.hpp"

namespace zipmix {

// Parameter point omega = (pi, eps, mu, nu).  pi is the weight of the rare
// component (rate mu), eps the probability that a cell is not inflated to
// zero.  The identifiability restriction is pi <= 1/2.
struct ModelParams {
  double pi = 0.25;
  double eps = 1.0;
  double mu = 1.0;
  double nu = 1.0;

  double theta() const { return mu / nu; }
  double lambda() const { return nu; }
};

inline void validate_params(const ModelParams& p) {
  if (!(p.pi > 0.0 && p.pi <= 0.5))
    throw DomainError("pi: require 0 < pi <= 1/2, got " + std::to_string(p.pi));
  if (!(p.eps > 0.0 && p.eps < 1.0) && p.eps != 1.0)
    throw DomainError("eps: require 0 < eps <= 1, got " + std::to_string(p.eps));
  if (!(p.mu > 0.0))
    throw DomainError("mu: require mu > 0, got " + std::to_string(p.mu));
  if (!(p.nu > 0.0))
    throw DomainError("nu: require nu > 0, got " + std::to_string(p.nu));
}

// Known exposures t_1..t_I shared by all J sites.
struct ExposureGrid {
  std::vector<double> t;  // length I, all positive
  int I = 0;
  int J = 0;

  ExposureGrid() = default;
  ExposureGrid(std::vector<double> t_, int J_)
      : t(std::move(t_)), I(static_cast<int>(t.size())), J(J_) {
    if (I < 1 || J < 1) throw DomainError("grid: require I >= 1 and J >= 1");
    for (double ti : t)
      if (!(ti > 0.0)) throw DomainError("t: all exposures must be positive");
  }

  int K() const { return I * J; }
  double tbar() const {
    double s = 0.0;
    for (double ti : t) s += ti;
    return s / static_cast<double>(I);
  }
};

// Row-major I x J matrix of counts.
struct CountMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> v;

  CountMatrix() = default;
  CountMatrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0) {}

  std::int64_t& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  std::int64_t operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (auto x : v) s += x;
    return s;
  }
  // Column sums n_j.
  std::vector<std::int64_t> col_sums() const {
    std::vector<std::int64_t> s(cols, 0);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) s[j] += (*this)(i, j);
    return s;
  }
  // Row sums n_i.
  std::vector<std::int64_t> row_sums() const {
    std::vector<std::int64_t> s(rows, 0);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) s[i] += (*this)(i, j);
    return s;
  }
  bool operator==(const CountMatrix& o) const = default;
};

// Row-major I x J matrix of reals (responsibilities and the like).
struct RealMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  RealMatrix() = default;
  RealMatrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
};

// I x J matrix of 0/1 indicators (stored widened to avoid vector<bool>).
struct BitMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> v;

  BitMatrix() = default;
  BitMatrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0) {}

  std::uint8_t& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  std::uint8_t operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
  bool operator==(const BitMatrix& o) const = default;
};

// Latent/observed arrays of one experiment.  y and z are latent indicators
// (present only when simulated or otherwise known); m the latent complete
// counts; n the zero-inflated observed counts.
struct DataSet {
  std::optional<std::vector<std::uint8_t>> y;  // length J
  std::optional<BitMatrix> z;                  // I x J
  std::optional<CountMatrix> m;                // I x J
  std::optional<CountMatrix> n;                // I x J

  // Counts seen by the section-3 mixture analyses (M-observed regime).
  const CountMatrix& mixture_counts() const {
    if (m) return *m;
    if (n) return *n;
    throw DimensionMismatch("dataset holds neither m nor n");
  }
  // Counts seen by the section-4 analyses (N-observed regime).
  const CountMatrix& zipm_counts() const {
    if (n) return *n;
    throw DimensionMismatch("dataset holds no n matrix");
  }

  // n_ij = z_ij * m_ij whenever all three are present.
  void check_consistent() const {
    if (z && m && n) {
      for (int i = 0; i < n->rows; ++i)
        for (int j = 0; j < n->cols; ++j)
          if ((*n)(i, j) != ((*z)(i, j) ? (*m)(i, j) : 0))
            throw SupportViolation("n != z*m at (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")");
    }
  }
};

// Zero-pattern statistics of a count matrix: per-cell nonzero indicators,
// per-column nonzero counts, and t-weighted sums over nonzero/zero cells.
struct ZeroPattern {
  BitMatrix nonzero;                  // 1 - 0^{n_ij}
  std::vector<int> nonzero_j;         // per-column nonzero cell counts
  std::vector<double> t_ne_j;         // sum_i t_i 1{n_ij != 0}
  std::vector<double> t_eq_j;         // sum_i t_i 1{n_ij == 0}
  int nonzero_total = 0;

  ZeroPattern(const CountMatrix& n, const ExposureGrid& g)
      : nonzero(n.rows, n.cols),
        nonzero_j(n.cols, 0),
        t_ne_j(n.cols, 0.0),
        t_eq_j(n.cols, 0.0) {
    if (n.rows != g.I || n.cols != g.J)
      throw DimensionMismatch("count matrix does not match grid");
    for (int i = 0; i < n.rows; ++i)
      for (int j = 0; j < n.cols; ++j) {
        if (n(i, j) != 0) {
          nonzero(i, j) = 1;
          ++nonzero_j[j];
          ++nonzero_total;
          t_ne_j[j] += g.t[i];
        } else {
          t_eq_j[j] += g.t[i];
        }
      }
  }
};

// Hyper-parameters of the Bayesian machinery: gamma shape delta for the
// nuisance rate, conjugate shapes (alpha, beta) on theta, beta(eta, kappa)
// on eps, and a proper prior density for pi on (0, 1/2].
struct PriorSpec {
  double delta = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double eta = 1.0;
  double kappa = 1.0;
  // Density of pi on (0, 1/2]; default uniform.
  std::function<double(double)> pi_density = [](double) { return 2.0; };

  void validate(bool allow_improper = false) const {
    if (!(delta > 0.0)) throw DomainError("delta: require delta > 0");
    if (!(eta > 0.0)) throw DomainError("eta: require eta > 0");
    if (!(kappa > 0.0)) throw DomainError("kappa: require kappa > 0");
    if (allow_improper) {
      if (alpha < 0.0 || beta < 0.0)
        throw DomainError("alpha/beta: require alpha, beta >= 0");
    } else {
      if (!(alpha > 0.0) || !(beta > 0.0))
        throw DomainError("alpha/beta: require alpha, beta > 0 (improper prior not enabled)");
    }
    const double mass = integrate([&](double p) { return pi_density(p); }, 0.0, 0.5, 1e-10);
    if (std::abs(mass - 1.0) > 1e-8)
      throw DomainError("pi prior does not integrate to 1 on (0, 1/2]");
  }
};

// Builds a normalized, linearly interpolated pi-prior from density samples
// at abscissae on (0, 1/2].
inline std::function<double(double)> tabulated_pi_density(std::vector<double> xs,
                                                          std::vector<double> ds) {
  if (xs.size() != ds.size() || xs.size() < 2)
    throw DomainError("tabulated prior needs >= 2 (x, density) pairs");
  auto raw = [xs, ds](double p) {
    if (p <= xs.front()) return ds.front();
    if (p >= xs.back()) return ds.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), p);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const double w = (p - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return ds[hi - 1] * (1.0 - w) + ds[hi] * w;
  };
  const double mass = integrate(raw, 0.0, 0.5, 1e-12);
  if (!(mass > 0.0)) throw DomainError("tabulated prior has zero mass");
  return [raw, mass](double p) { return raw(p) / mass; };
}

// ---------------------------------------------------------------------------
// Per-cell log-probabilities and full-data log-likelihoods.

// log of the two-component mixture pmf at count mval with exposure t.
inline double mixture_cell_logpmf(std::int64_t mval, double t, const ModelParams& p) {
  validate_params(p);
  return log_sum_exp(std::log(p.pi) + poisson_logpmf(mval, t * p.mu),
                     std::log1p(-p.pi) + poisson_logpmf(mval, t * p.nu));
}

// log of the three-component (zero-inflated) mixture pmf at count nval.
inline double zipm_cell_logpmf(std::int64_t nval, double t, const ModelParams& p) {
  validate_params(p);
  const double mix = std::log(p.eps) + mixture_cell_logpmf(nval, t, p);
  if (nval != 0 || p.eps == 1.0) return mix;
  return log_sum_exp(mix, std::log1p(-p.eps));
}

// Sum of per-cell log pmfs over the whole grid.  With zero_inflated the
// counts are read as n, otherwise as m.
inline double observed_loglik(const DataSet& d, const ExposureGrid& g,
                              const ModelParams& p, bool zero_inflated) {
  const CountMatrix& c = zero_inflated ? d.zipm_counts() : d.mixture_counts();
  if (c.rows != g.I || c.cols != g.J)
    throw DimensionMismatch("count matrix does not match grid");
  validate_params(p);
  double ll = 0.0;
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j)
      ll += zero_inflated ? zipm_cell_logpmf(c(i, j), g.t[i], p)
                          : mixture_cell_logpmf(c(i, j), g.t[i], p);
  return ll;
}

inline double observed_loglik(const CountMatrix& c, const ExposureGrid& g,
                              const ModelParams& p, bool zero_inflated) {
  DataSet d;
  if (zero_inflated)
    d.n = c;
  else
    d.m = c;
  return observed_loglik(d, g, p, zero_inflated);
}

// Complete-data log-likelihood log f(y, z, n) in its exponential-family
// form; requires the support condition n_ij (1 - z_ij) = 0.
inline double complete_loglik_zipm(const DataSet& d, const ExposureGrid& g,
                                   const ModelParams& p) {
  if (!d.y || !d.z || !d.n) throw DimensionMismatch("complete loglik needs y, z, n");
  validate_params(p);
  const auto& y = *d.y;
  const auto& z = *d.z;
  const auto& n = *d.n;
  if (static_cast<int>(y.size()) != g.J || z.rows != g.I || z.cols != g.J ||
      n.rows != g.I || n.cols != g.J)
    throw DimensionMismatch("dataset does not match grid");

  double ybar = 0.0;
  for (auto yj : y) ybar += yj;
  ybar /= g.J;

  const double K = g.K();
  double zbar = 0.0, tyz = 0.0, t1yz = 0.0, ny = 0.0, n1y = 0.0;
  double log_xi = 0.0;
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j) {
      if (n(i, j) != 0 && !z(i, j))
        throw SupportViolation("n_ij > 0 with z_ij = 0 at (" + std::to_string(i) +
                               "," + std::to_string(j) + ")");
      zbar += z(i, j);
      if (z(i, j)) (y[j] ? tyz : t1yz) += g.t[i];
      (y[j] ? ny : n1y) += static_cast<double>(n(i, j));
      log_xi += static_cast<double>(n(i, j)) * std::log(g.t[i]) -
                std::lgamma(static_cast<double>(n(i, j)) + 1.0);
    }
  zbar /= K;
  tyz /= K;
  t1yz /= K;
  ny /= K;
  n1y /= K;

  double ll = g.J * (ybar * std::log(p.pi) + (1.0 - ybar) * std::log1p(-p.pi));
  ll += K * zbar * std::log(p.eps);
  if (zbar < 1.0) ll += K * (1.0 - zbar) * std::log1p(-p.eps);
  ll += K * (ny * std::log(p.mu) - tyz * p.mu + n1y * std::log(p.nu) - t1yz * p.nu);
  return ll + log_xi;
}

}  // namespace zipmix
