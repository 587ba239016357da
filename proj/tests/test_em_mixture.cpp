#include "zipmix/em_mixture.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "zipmix/simulate.hpp"

using namespace zipmix;

namespace {

ExposureGrid grid34() { return ExposureGrid({0.5, 1.0, 1.5}, 4); }

double mixture_ll(const CountMatrix& m, const ExposureGrid& g, double pi, double mu,
                  double nu) {
  DataSet d;
  d.m = m;
  return observed_loglik(d, g, ModelParams{pi, 1.0, mu, nu}, false);
}

}  // namespace

TEST(EstepMixture, EqualRatesGivePi) {
  const auto g = grid34();
  const CountMatrix m = oracle::random_counts(3, 4, 6, 2);
  const auto yhat = estep_mixture(m, g, {0.3, 2.0, 2.0});
  for (double v : yhat) EXPECT_NEAR(v, 0.3, 1e-14);
}

TEST(EstepMixture, LargeCountsResolveLabel) {
  const ExposureGrid g({1.0}, 1);
  CountMatrix m(1, 1);
  m(0, 0) = 600;  // overwhelming evidence for the larger rate
  const auto yhat = estep_mixture(m, g, {0.3, 2.0, 8.0});
  EXPECT_LT(yhat[0], 1e-200);
}

TEST(EstepMixture, MatchesUnsimplifiedBayesOracle) {
  const auto g = grid34();
  const CountMatrix m = oracle::random_counts(3, 4, 7, 13);
  const double pi = 0.35, mu = 1.1, nu = 3.7;
  const auto yhat = estep_mixture(m, g, {pi, mu, nu});
  const auto want = oracle::mixture_posterior_naive(m, g, pi, mu, nu);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(yhat[j], want[j], 1e-12);
}

TEST(MstepMixture, SymmetricSplitPoolsRates) {
  const ExposureGrid g({1.0, 1.0}, 3);
  CountMatrix m(2, 3);
  for (auto& x : m.v) x = 4;
  const auto step = mstep_mixture(m, g, {0.5, 0.5, 0.5});
  EXPECT_DOUBLE_EQ(step.params.mu, 2.0);  // mbar over tbar per cell
  EXPECT_DOUBLE_EQ(step.params.nu, 2.0);
  EXPECT_DOUBLE_EQ(step.params.pi, 0.5);
}

TEST(MstepMixture, BinaryLabelsReproduceClosedFormMles) {
  const auto g = grid34();
  const CountMatrix m = oracle::random_counts(3, 4, 9, 4);
  const std::vector<double> truth{1.0, 0.0, 1.0, 0.0};
  const auto step = mstep_mixture(m, g, truth);
  const auto mj = m.col_sums();
  const double tI = g.tbar() * 3.0;
  EXPECT_DOUBLE_EQ(step.params.mu,
                   static_cast<double>(mj[0] + mj[2]) / (tI * 2.0));
  EXPECT_DOUBLE_EQ(step.params.nu,
                   static_cast<double>(mj[1] + mj[3]) / (tI * 2.0));
  EXPECT_DOUBLE_EQ(step.params.pi, 0.5);
}

TEST(MstepMixture, ClampsPiAtHalf) {
  const ExposureGrid g({1.0}, 4);
  CountMatrix m(1, 4);
  m.v = {1, 2, 3, 4};
  const auto step = mstep_mixture(m, g, {0.9, 0.8, 0.3, 0.52});  // mean 0.63
  EXPECT_TRUE(step.pi_clamped);
  EXPECT_DOUBLE_EQ(step.params.pi, 0.5);
}

TEST(MstepMixture, EmptyComponentThrows) {
  const ExposureGrid g({1.0}, 2);
  CountMatrix m(1, 2);
  m.v = {1, 2};
  EXPECT_THROW(mstep_mixture(m, g, {0.0, 0.0}), EmptyComponent);
  EXPECT_THROW(mstep_mixture(m, g, {1.0, 1.0}), EmptyComponent);
}

TEST(FitEmMixture, CollapsedMixtureConverges) {
  SimConfig c{ExposureGrid(std::vector<double>(4, 1.0), 60),
              ModelParams{0.5, 1.0, 3.0, 3.0}, 11, 1};
  const DataSet d = simulate_dataset(c);
  const auto fit = fit_em_mixture(*d.m, c.grid, MixtureParams{0.4, 2.5, 3.5});
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.params.mu, fit.params.nu, 0.5);
  EXPECT_NEAR(fit.theta(), 1.0, 0.25);
}

TEST(FitEmMixture, AscentAndFixedPoint) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    SimConfig c{ExposureGrid({0.5, 1.5}, 30), ModelParams{0.3, 1.0, 1.0, 5.0},
                seed, 1};
    const DataSet d = simulate_dataset(c);
    const auto fit = fit_em_mixture(*d.m, c.grid);
    for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k)
      EXPECT_GE(fit.loglik_trace[k], fit.loglik_trace[k - 1] - 1e-9);
    if (!fit.converged) continue;
    // One extra sweep from the optimum moves parameters below tolerance.
    const auto yhat = estep_mixture(*d.m, c.grid, fit.params);
    const auto step = mstep_mixture(*d.m, c.grid, yhat);
    EXPECT_NEAR(step.params.pi, fit.params.pi, 1e-6);
    EXPECT_NEAR(step.params.mu, fit.params.mu, 1e-5);
    EXPECT_NEAR(step.params.nu, fit.params.nu, 1e-5);
  }
}

TEST(FitEmMixture, ThetaUpdateFormulaMatchesRatio) {
  SimConfig c{ExposureGrid({1.0, 2.0}, 25), ModelParams{0.25, 1.0, 1.0, 6.0}, 9, 1};
  const DataSet d = simulate_dataset(c);
  const auto fit = fit_em_mixture(*d.m, c.grid);
  EXPECT_NEAR(fit.theta_update, fit.theta(), 1e-9 * std::abs(fit.theta()));
}

TEST(FitEmMixture, GradientNearZeroAtInteriorOptimum) {
  SimConfig c{ExposureGrid({1.0}, 200), ModelParams{0.3, 1.0, 1.0, 6.0}, 21, 1};
  const DataSet d = simulate_dataset(c);
  const auto fit = fit_em_mixture(*d.m, c.grid, MixtureParams{0.3, 1.0, 6.0});
  ASSERT_TRUE(fit.converged);
  const double h = 1e-6;
  auto f = [&](double pi, double mu, double nu) {
    return mixture_ll(*d.m, c.grid, pi, mu, nu);
  };
  const auto& p = fit.params;
  const double gmu = (f(p.pi, p.mu + h, p.nu) - f(p.pi, p.mu - h, p.nu)) / (2 * h);
  const double gnu = (f(p.pi, p.mu, p.nu + h) - f(p.pi, p.mu, p.nu - h)) / (2 * h);
  EXPECT_LT(std::abs(gmu), 1e-3);
  EXPECT_LT(std::abs(gnu), 1e-3);
  if (!fit.pi_clamped) {
    const double gpi = (f(p.pi + h, p.mu, p.nu) - f(p.pi - h, p.mu, p.nu)) / (2 * h);
    EXPECT_LT(std::abs(gpi), 1e-3);
  }
}

TEST(FitEmMixture, TinyInstanceReachesGridSearchOptimum) {
  const ExposureGrid g({1.0, 1.0}, 3);
  CountMatrix m(2, 3);
  m.v = {0, 1, 4, 1, 0, 3};
  // Multi-start EM against a refined dense grid search over (pi, mu, nu).
  double best_em = -1e300;
  for (double pi0 : {0.15, 0.3, 0.5})
    for (double mu0 : {0.3, 1.0, 2.5})
      for (double nu0 : {0.5, 1.5, 3.0}) {
        try {
          const auto fit = fit_em_mixture(m, g, MixtureParams{pi0, mu0, nu0});
          best_em = std::max(best_em, fit.loglik());
        } catch (const Error&) {
        }
      }
  double best_grid = -1e300;
  for (double pi = 0.02; pi <= 0.5; pi += 0.02)
    for (double mu = 0.05; mu <= 4.0; mu += 0.05)
      for (double nu = 0.05; nu <= 4.0; nu += 0.05)
        best_grid = std::max(best_grid, mixture_ll(m, g, pi, mu, nu));
  EXPECT_GE(best_em, best_grid - 1e-6);
}

TEST(InitHistogramMixture, RecoversSeparatedClusters) {
  const ExposureGrid g({1.0}, 10);
  CountMatrix m(1, 10);
  m.v = {1, 1, 1, 9, 9, 9, 9, 9, 9, 9};
  const auto init = init_histogram_mixture(m, g);
  EXPECT_NEAR(init.pi, 0.3, 1e-12);
  EXPECT_NEAR(init.mu, 1.0, 1e-12);
  EXPECT_NEAR(init.nu, 9.0, 1e-12);
}

TEST(InitHistogramMixture, DegenerateDataThrows) {
  const ExposureGrid g({1.0}, 4);
  CountMatrix m(1, 4);
  m.v = {3, 3, 3, 3};
  EXPECT_THROW(init_histogram_mixture(m, g), DegenerateData);
}

TEST(InitHistogramMixture, SimulatedWeightsLandInRange) {
  SimConfig c{ExposureGrid(std::vector<double>(5, 1.0), 80),
              ModelParams{0.3, 1.0, 2.0, 10.0}, 3141, 1};
  const DataSet d = simulate_dataset(c);
  const auto init = init_histogram_mixture(*d.m, c.grid);
  EXPECT_GT(init.pi, 0.1);
  EXPECT_LE(init.pi, 0.5);
  EXPECT_LT(init.mu, init.nu);
}

TEST(ObservedInfoMixture, MatchesFiniteDifferenceHessian) {
  // The analytic observed information against a central-difference Hessian
  // of the negative log-likelihood, at interior points that are not the
  // MLE.
  const auto g = grid34();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const CountMatrix m = oracle::random_counts(3, 4, 8, seed);
    for (const auto& at :
         {MixtureParams{0.3, 1.2, 3.3}, MixtureParams{0.45, 2.0, 2.4}}) {
      const Mat3 info = observed_info_mixture(m, g, at);
      const auto f = [&](const std::array<double, 3>& x) {
        return -mixture_ll(m, g, x[0], x[1], x[2]);
      };
      const Mat3 fd =
          oracle::fd_hessian<3>(f, {at.pi, at.mu, at.nu}, 1e-5);
      EXPECT_LE(oracle::max_rel_error(info, fd), 1e-4)
          << "seed " << seed << " pi " << at.pi;
    }
  }
}

TEST(ObservedInfoMixture, SymmetricByConstruction) {
  const auto g = grid34();
  const CountMatrix m = oracle::random_counts(3, 4, 8, 6);
  const Mat3 info = observed_info_mixture(m, g, {0.3, 1.0, 2.0});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(info(i, j), info(j, i));
}

TEST(ObservedInfoMixture, FiniteAtEqualRates) {
  const auto g = grid34();
  const CountMatrix m = oracle::random_counts(3, 4, 8, 6);
  const Mat3 info = observed_info_mixture(m, g, {0.3, 2.0, 2.0});
  for (double v : info.a) EXPECT_TRUE(std::isfinite(v));
}

TEST(ObservedInfoMixture, BoundaryParamsThrow) {
  const auto g = grid34();
  const CountMatrix m = oracle::random_counts(3, 4, 8, 6);
  EXPECT_THROW(observed_info_mixture(m, g, {1.0, 1.0, 2.0}), BoundaryParams);
}

TEST(CiThetaMixture, SchurEqualsFullInversion) {
  SimConfig c{ExposureGrid({1.0, 2.0}, 50), ModelParams{0.3, 1.0, 1.0, 5.0}, 8, 1};
  const DataSet d = simulate_dataset(c);
  const auto fit = fit_em_mixture(*d.m, c.grid, MixtureParams{0.3, 1.0, 5.0});
  ASSERT_TRUE(fit.converged);
  ASSERT_FALSE(fit.pi_clamped);
  const Mat3 info = observed_info_mixture(*d.m, c.grid, fit.params);

  const Mat2 sinv = inverse(schur_complement<1>(info));
  const std::array<double, 2> g2{1.0 / fit.params.nu,
                                 -fit.params.mu / (fit.params.nu * fit.params.nu)};
  const Mat3 full = inverse(info);
  const std::array<double, 3> g3{0.0, g2[0], g2[1]};
  EXPECT_NEAR(quad_form(sinv, g2), quad_form(full, g3),
              1e-10 * std::abs(quad_form(full, g3)));
}

TEST(CiThetaMixture, VarianceScalesInverselyWithStackedData) {
  // Duplicating the dataset doubles the information, halving the variance.
  const ExposureGrid g1({1.0, 2.0}, 20);
  SimConfig c{g1, ModelParams{0.3, 1.0, 1.0, 5.0}, 5150, 1};
  const DataSet d = simulate_dataset(c);
  const ExposureGrid g2({1.0, 2.0}, 40);
  CountMatrix stacked(2, 40);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 40; ++j) stacked(i, j) = (*d.m)(i, j % 20);

  const MixtureParams at{0.3, 1.0, 5.0};
  const Mat3 i1 = observed_info_mixture(*d.m, g1, at);
  const Mat3 i2 = observed_info_mixture(stacked, g2, at);
  const std::array<double, 2> grad{1.0 / at.nu, -at.mu / (at.nu * at.nu)};
  const double v1 = quad_form(inverse(schur_complement<1>(i1)), grad);
  const double v2 = quad_form(inverse(schur_complement<1>(i2)), grad);
  EXPECT_NEAR(v2, v1 / 2.0, 1e-9 * v1);
}

TEST(CiThetaMixture, RefusesBoundaryFit) {
  MixtureFit fit;
  fit.pi_clamped = true;
  Mat3 info;
  info(0, 0) = info(1, 1) = info(2, 2) = 1.0;
  EXPECT_THROW(ci_theta_mixture(fit, info, 0.95), BoundaryFit);
}
