#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "zipmix/model.hpp"

namespace zipmix {

namespace detail {

// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Child seed for replicate r: a counter-based split of the master seed, so
// any replicate can be regenerated in isolation and in any order.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t r) {
  return detail::mix64(seed ^ detail::mix64(r + 1));
}

// mt19937_64 engine with hand-rolled variate transforms.  The engine is
// fully specified by the standard; owning the transforms keeps streams
// identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // in [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean = 0.0, double sd = 1.0) {
    // Inverse-CDF transform; u is bounded away from {0, 1}.
    const double u = (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    boost::math::normal_distribution<double> nd;
    return mean + sd * boost::math::quantile(nd, u);
  }

  // Inversion below mean 10, Hormann's PTRS transformed rejection above.
  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) return poisson_inversion(mean);
    return poisson_ptrs(mean);
  }

 private:
  std::int64_t poisson_inversion(double mean) {
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf && k < 2000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }

  std::int64_t poisson_ptrs(double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          kf * loglam - mean - std::lgamma(kf + 1.0))
        return static_cast<std::int64_t>(kf);
    }
  }

  std::mt19937_64 eng_;
};

struct SimConfig {
  ExposureGrid grid;
  ModelParams params;
  std::uint64_t seed = 0;
  int replicates = 1;
};

namespace detail {

// Draws one complete dataset (y, z, m, n) from a raw engine seed.  Drawing
// order is fixed: y by column, then z and m cell-by-cell in row-major
// order, so a given seed always produces the same arrays.
inline DataSet simulate_raw(const ExposureGrid& g, const ModelParams& p,
                            std::uint64_t raw_seed) {
  validate_params(p);
  Rng rng(raw_seed);

  DataSet d;
  d.y = std::vector<std::uint8_t>(g.J);
  d.z = BitMatrix(g.I, g.J);
  d.m = CountMatrix(g.I, g.J);
  d.n = CountMatrix(g.I, g.J);

  for (int j = 0; j < g.J; ++j) (*d.y)[j] = rng.bernoulli(p.pi) ? 1 : 0;
  for (int i = 0; i < g.I; ++i)
    for (int j = 0; j < g.J; ++j) {
      const bool zij = rng.bernoulli(p.eps);
      const double rate = g.t[i] * ((*d.y)[j] ? p.mu : p.nu);
      const std::int64_t mij = rng.poisson(rate);
      (*d.z)(i, j) = zij ? 1 : 0;
      (*d.m)(i, j) = mij;
      (*d.n)(i, j) = zij ? mij : 0;
    }
  return d;
}

}  // namespace detail

// Dataset of replicate r (0-based), reproducible in isolation.
inline DataSet simulate_replicate(const SimConfig& c, int r) {
  if (r < 0) throw DomainError("replicate index must be >= 0");
  return detail::simulate_raw(c.grid, c.params,
                              child_seed(c.seed, static_cast<std::uint64_t>(r)));
}

// First replicate of the configured stream.
inline DataSet simulate_dataset(const SimConfig& c) {
  if (c.replicates < 1) throw DomainError("replicates: require >= 1");
  return simulate_replicate(c, 0);
}

inline std::vector<DataSet> replicate_stream(const SimConfig& c) {
  if (c.replicates < 1) throw DomainError("replicates: require >= 1");
  std::vector<DataSet> out;
  out.reserve(c.replicates);
  for (int r = 0; r < c.replicates; ++r) out.push_back(simulate_replicate(c, r));
  return out;
}

}  // namespace zipmix
