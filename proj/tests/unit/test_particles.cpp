#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kuramoto/meanfield.hpp"
#include "kuramoto/particles.hpp"

using namespace kuramoto;
using particles::Ensemble;
using particles::Sampling;

TEST(Sampling, LorentzianQuantilesOfTwo) {
  auto w = particles::sample_frequencies(VelocityDistribution::lorentzian(), 2, Sampling::quantile());
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NEAR(w[0], -1.0, 1e-9);
  EXPECT_NEAR(w[1], 1.0, 1e-9);
}

TEST(Sampling, QuantileMatchesClosedFormCauchyQuantile) {
  auto l = VelocityDistribution::lorentzian(0.5, 2.0);
  for (double p : {1e-4, 0.1, 0.37, 0.9, 0.9999})
    EXPECT_NEAR(particles::quantile(l, p), 0.5 + 2.0 * std::tan(std::numbers::pi * (p - 0.5)),
                1e-9 * std::max(1.0, std::abs(particles::quantile(l, p))));
  EXPECT_THROW(particles::quantile(l, 0.0), domain_error);
  EXPECT_THROW(particles::quantile(l, 1.0), domain_error);
}

TEST(Sampling, OddGaussianQuantileHasZeroMedian) {
  auto w = particles::sample_frequencies(VelocityDistribution::gaussian(), 101, Sampling::quantile());
  EXPECT_NEAR(w[50], 0.0, 1e-10);
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_LT(w[i - 1], w[i]);
}

TEST(Sampling, QuantileMeanNearDistributionMean) {
  auto w = particles::sample_frequencies(VelocityDistribution::gaussian(0.7, 1.3), 10000, Sampling::quantile());
  EXPECT_NEAR(pairwise_sum(w) / w.size(), 0.7, 1e-2);
}

TEST(Sampling, SeededDrawsAreReproducible) {
  auto g = VelocityDistribution::gaussian();
  auto a = particles::sample_frequencies(g, 500, Sampling::seeded(42));
  auto b = particles::sample_frequencies(g, 500, Sampling::seeded(42));
  auto c = particles::sample_frequencies(g, 500, Sampling::seeded(43));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_NEAR(pairwise_sum(a) / a.size(), 0.0, 0.2);
}

TEST(Sampling, RejectsTooFewOscillators) {
  EXPECT_THROW(particles::sample_frequencies(VelocityDistribution::gaussian(), 1, {}), domain_error);
}

TEST(OrderParameter, Examples) {
  EXPECT_NEAR(std::abs(particles::empirical_order_parameter(std::vector<double>(7, 1.3))), 1.0, 1e-15);
  std::vector<double> roots;
  for (int i = 0; i < 12; ++i) roots.push_back(2 * std::numbers::pi * i / 12);
  EXPECT_LT(std::abs(particles::empirical_order_parameter(roots)), 1e-15);
  const cplx two = particles::empirical_order_parameter(std::vector<double>{0.0, std::numbers::pi / 2});
  EXPECT_NEAR(std::abs(two - cplx(0.5, 0.5)), 0.0, 1e-16);
}

TEST(MatchedPhases, FirstHarmonicsApproximateCoefficients) {
  const std::vector<cplx> c{cplx(0.1, -0.05), 0.08};
  auto th = particles::matched_phases(20000, c);
  cplx m1 = 0.0, m2 = 0.0;
  for (double t : th) {
    m1 += std::polar(1.0, t);
    m2 += std::polar(1.0, 2 * t);
  }
  EXPECT_LT(std::abs(m1 / 20000.0 - c[0]), 1e-3);
  EXPECT_LT(std::abs(m2 / 20000.0 - c[1]), 1e-3);
  for (double t : th) {
    EXPECT_GE(t, 0.0);
    EXPECT_LT(t, 2 * std::numbers::pi);
  }
  EXPECT_THROW(particles::matched_phases(10, {0.6}), domain_error);
}

TEST(OdeStep, FreeDriftIsExact) {
  Ensemble e{{0.1, 2.0, 6.0}, {1.0, -3.0, 0.25}, 0.0};
  auto n = particles::ode_step(e, 0.0, 0.1);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(n.theta[i], particles::wrap_phase(e.theta[i] + 0.1 * e.omega[i]), 1e-15);
  EXPECT_DOUBLE_EQ(n.t, 0.1);
}

TEST(OdeStep, AntipodalPairIsEquilibrium) {
  Ensemble e{{0.0, std::numbers::pi}, {0.0, 0.0}, 0.0};
  for (int i = 0; i < 100; ++i) particles::advance(e, 1.0, 0.05);
  EXPECT_NEAR(e.theta[0], 0.0, 1e-14);
  EXPECT_NEAR(e.theta[1], std::numbers::pi, 1e-14);
  EXPECT_THROW(particles::advance(e, 1.0, 0.0), domain_error);
}

TEST(OdeStep, IdenticalOscillatorsSynchronize) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
  Ensemble e;
  for (int i = 0; i < 200; ++i) e.theta.push_back(u(rng));
  e.omega.assign(200, 0.0);
  auto eta = particles::run(e, 1.0, 60.0, 0.05);
  EXPECT_GT(std::abs(eta.values.back()), 1.0 - 1e-6);
  for (const auto& v : eta.values) EXPECT_LE(std::abs(v), 1.0 + 1e-15);
}

TEST(OdeStep, FourthOrderInTimeStep) {
  auto g = VelocityDistribution::gaussian();
  auto final_eta = [&](double dt) {
    auto e = particles::matched_ensemble(g, 200, {0.2});
    return particles::run(e, 2.5, 4.0, dt).values.back();
  };
  const cplx a = final_eta(0.1), b = final_eta(0.05), c = final_eta(0.025);
  const double ratio = std::abs(a - b) / std::abs(b - c);
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(RunParticles, FreeRunMatchesDirectFormula) {
  auto g = VelocityDistribution::gaussian();
  auto e = particles::matched_ensemble(g, 300, {0.1});
  const auto theta0 = e.theta;
  auto eta = particles::run(e, 0.0, 2.0, 0.125);
  for (std::size_t k = 0; k < eta.size(); ++k) {
    std::vector<double> th(theta0.size());
    for (std::size_t i = 0; i < th.size(); ++i) th[i] = theta0[i] + e.omega[i] * eta.time(k);
    EXPECT_NEAR(std::abs(eta.values[k] - particles::empirical_order_parameter(th)), 0.0, 1e-13);
  }
}

TEST(RunParticles, Deterministic) {
  auto g = VelocityDistribution::gaussian();
  auto a = particles::run_particles(g, 500, 2.0, 3.0, 0.05, Sampling::seeded(3), {0.1});
  auto b = particles::run_particles(g, 500, 2.0, 3.0, 0.05, Sampling::seeded(3), {0.1});
  EXPECT_EQ(a.values, b.values);
}

TEST(RunParticles, SupercriticalLorentzianReachesFixedPoint) {
  auto eta = particles::run_particles(VelocityDistribution::lorentzian(), 20000, 3.0, 40.0, 1.0 / 32, {}, {0.1});
  EXPECT_NEAR(std::abs(eta.values.back()), std::sqrt(1.0 / 3.0), 0.02);
}

TEST(RunParticles, SubcriticalGaussianDecaysToNoiseFloor) {
  auto eta = particles::run_particles(VelocityDistribution::gaussian(), 20000, 1.0, 20.0, 1.0 / 16,
                                      Sampling::seeded(11), {0.1});
  EXPECT_LT(std::abs(eta.values.back()), 3.0 / std::sqrt(20000.0));
}

TEST(RunParticles, ConvergesToMeanFieldAsNGrows) {
  auto l = VelocityDistribution::lorentzian();
  const std::vector<cplx> c{0.1};
  auto s = meanfield::init_state(l, c, 1.0 / 64, 30, 64);
  auto mf = meanfield::run(s, 3.0, 20.0);
  auto gap = [&](std::size_t N) {
    auto eta = particles::run_particles(l, N, 3.0, 20.0, 1.0 / 32, {}, c);
    double worst = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i)
      worst = std::max(worst, std::abs(eta.values[i] - mf.eta.values[2 * i]));
    return worst;
  };
  const double e1 = gap(1250), e2 = gap(5000), e3 = gap(20000);
  EXPECT_LT(e2, e1);
  EXPECT_LT(e3, e2);
  EXPECT_LT(e3, 0.02);
}
