#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kuramoto/locked.hpp"
#include "oracles.hpp"

using namespace kuramoto;
using locked::beta_eval;
using locked::LockedState;

TEST(Beta, ClosedFormValues) {
  EXPECT_NEAR(std::abs(beta_eval(0.0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(beta_eval(2.0) - cplx(0.0, 2.0 * (1.0 - std::sqrt(3.0) / 2))), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(beta_eval(-2.0) - cplx(0.0, -2.0 * (1.0 - std::sqrt(3.0) / 2))), 0.0, 1e-15);
  EXPECT_LT(std::abs(beta_eval(cplx(0.0, 1e6))), 1e-6);
  EXPECT_THROW(beta_eval(cplx(0.0, -1e-3)), domain_error);
}

TEST(Beta, MatchesBothFormulasOnTheirRegions) {
  for (double x = -0.99; x < 1.0; x += 0.11) {
    const cplx z(x, 0.0);
    EXPECT_NEAR(std::abs(beta_eval(z) - (cplx(0, 1) * z + std::sqrt(1.0 - z * z))), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(beta_eval(z)), 1.0, 1e-14);
  }
  for (double r : {1.01, 1.5, 3.0, 40.0})
    for (double th : {0.0, 0.3, 1.2, 2.0, std::numbers::pi}) {
      const cplx z = std::polar(r, th);
      const cplx w = cplx(0, 1) * z * (1.0 - std::sqrt(1.0 - 1.0 / (z * z)));
      EXPECT_NEAR(std::abs(beta_eval(z) - w), 0.0, 1e-12 * (1 + std::abs(w))) << z;
    }
}

TEST(Beta, SolvesQuadraticAndIsContinuousAcrossUnitCircle) {
  cplx prev = beta_eval(cplx(0.0, 0.0));
  for (int k = 1; k <= 4000; ++k) {
    // Path from 0 out through |z| = 1 along a ray in the upper half plane.
    const cplx z = std::polar(3.0 * k / 4000, 0.4);
    const cplx b = beta_eval(z);
    EXPECT_LT(std::abs(b * b - 2.0 * cplx(0, 1) * z * b - 1.0), 1e-13);
    EXPECT_LT(std::abs(b - prev), 1e-2);
    prev = b;
  }
}

TEST(Beta, BoundedOnUpperHalfPlaneGrid) {
  int checked = 0;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) {
      const double r = 10.0 * (i + 0.5) / 100, th = std::numbers::pi * j / 99;
      const cplx z = std::polar(r, th);
      const double m = std::abs(beta_eval(cplx(z.real(), std::max(0.0, z.imag()))));
      EXPECT_LE(m, 1.0 + 1e-14);
      if (r >= std::sqrt(2.0)) EXPECT_LE(m, 1.0 / r + 1e-14);
      ++checked;
    }
  EXPECT_EQ(checked, 10000);
}

TEST(Beta, TrappedAndDriftingModuli) {
  for (double s : {-0.9, -0.2, 0.5, 0.999}) EXPECT_NEAR(std::abs(beta_eval(s)), 1.0, 1e-14);
  for (double s : {-5.0, -1.01, 1.01, 3.0}) EXPECT_LT(std::abs(beta_eval(s)), 1.0);
}

TEST(ShiftedNorm, GaussianClosedFormAgreesWithQuadrature) {
  auto g = VelocityDistribution::gaussian(0.0, 1.3);
  const double a = 0.5;
  const double direct = oracle::gauss_legendre(
      [&](double w) { return std::abs(locked::detail::density_shifted(g, w, a)); }, -20.0, 20.0, 80);
  EXPECT_NEAR(locked::shifted_l1_norm(g, a), direct, 1e-12);
  EXPECT_NEAR(locked::shifted_l1_norm(VelocityDistribution::gaussian(), 0.5), std::exp(0.125), 1e-15);
}

TEST(ShiftedNorm, LorentzianClosedFormAgreesWithQuadrature) {
  auto l = VelocityDistribution::lorentzian(0.0, 1.0);
  const double a = 0.4;
  // Substitute w = tan(t) to map the real line onto (-pi/2, pi/2).
  const double direct = oracle::gauss_legendre(
      [&](double t) {
        const double w = std::tan(t), c = std::cos(t);
        return std::abs(locked::detail::density_shifted(l, w, a)) / (c * c);
      },
      -std::numbers::pi / 2, std::numbers::pi / 2, 400);
  EXPECT_NEAR(locked::shifted_l1_norm(l, a), direct, 1e-10);
}

TEST(ShiftedNorm, InadmissibleShiftsAreRejected) {
  EXPECT_THROW(locked::shifted_l1_norm(VelocityDistribution::lorentzian(0, 1), 1.0), domain_error);
  EXPECT_THROW(locked::shifted_l1_norm(VelocityDistribution::gaussian(), 0.0), domain_error);
  auto t = VelocityDistribution::tabulated({-2, -1, 0, 1, 2}, {0, 0.25, 0.5, 0.25, 0});
  EXPECT_THROW(locked::shifted_l1_norm(t, 0.1), domain_error);
}

TEST(SelfConsistency, BelowOnsetIsIncoherentAndNearOnsetFollowsSquareRoot) {
  auto g = VelocityDistribution::gaussian();
  const double kc = 4.0 / std::sqrt(2 * std::numbers::pi);
  EXPECT_EQ(locked::self_consistent_amplitude(g, 1.5), 0.0);
  const double eps = 1e-4;
  EXPECT_NEAR(locked::self_consistent_amplitude(g, kc + eps) / std::sqrt(eps), 1.40311, 0.01);
  // Lorentzian closed form r = sqrt(1 - 2/K).
  EXPECT_NEAR(locked::self_consistent_amplitude(VelocityDistribution::lorentzian(), 3.0), std::sqrt(1.0 / 3.0), 1e-10);
}

TEST(LockedFourier, FirstModeAtZeroIsOrderParameter) {
  auto g = VelocityDistribution::gaussian();
  const double K = 1.7;
  const double r = locked::self_consistent_amplitude(g, K);
  LockedState s{K, r, g};
  EXPECT_NEAR(std::abs(locked::locked_fourier_u(s, 1, 0.0) - r), 0.0, 1e-9);
}

TEST(LockedFourier, PhasePrefactorOptions) {
  auto g = VelocityDistribution::gaussian();
  const double r = 0.3, phi = 0.9;
  LockedState real{1.7, r, g};
  LockedState rot{1.7, std::polar(r, phi), g};
  const cplx base = locked::locked_fourier_u(real, 2, 0.7);
  EXPECT_NEAR(std::abs(locked::locked_fourier_u(rot, 2, 0.7) - base * std::polar(1.0, phi)), 0.0, 1e-13);
  rot.phase_power_l = true;
  EXPECT_NEAR(std::abs(locked::locked_fourier_u(rot, 2, 0.7) - base * std::polar(1.0, 2 * phi)), 0.0, 1e-13);
}

TEST(LockedFourier, DecaysAtShiftedNormRate) {
  auto g = VelocityDistribution::gaussian();
  LockedState s{1.7, 0.4, g};
  const double a = 0.5, na = locked::shifted_l1_norm(g, a);
  for (int l : {1, 2, 3})
    for (double xi : {0.0, 1.0, 3.0, 6.0, 10.0})
      EXPECT_LE(std::abs(locked::locked_fourier_u(s, l, xi)), na * std::exp(-a * xi) * (1 + 1e-9));
}

TEST(LockedFourier, RejectsBadArguments) {
  LockedState s{1.7, 0.4, VelocityDistribution::gaussian()};
  EXPECT_THROW(locked::locked_fourier_u(s, 0, 1.0), domain_error);
  EXPECT_THROW(locked::locked_fourier_u(s, 1, -1.0), domain_error);
  s.eta = 0.0;
  EXPECT_THROW(locked::locked_fourier_u(s, 1, 1.0), domain_error);
}

TEST(NormEstimate, SmallEtaBoundAndMonotonicity) {
  auto g = VelocityDistribution::gaussian();
  const double K = 1.7, a = 0.5;
  double prev = 0.0;
  for (double r : {0.02, 0.06, 0.1, 0.15, 0.2}) {
    LockedState s{K, r, g};
    auto est = locked::za_norm_estimate(s, a, 4, 12.0, 60);
    EXPECT_TRUE(est.small_eta);
    EXPECT_TRUE(est.bound_satisfied) << r << " " << est.za_norm << " " << est.bound_proof;
    EXPECT_GE(est.za_norm, prev);
    EXPECT_GE(est.za_norm, r - 1e-12);  // u(1, 0) = eta
    EXPECT_LT(est.tail_uncertainty, 1e-6);
    prev = est.za_norm;
  }
}

TEST(NormEstimate, TendsToZeroWithEta) {
  LockedState s{1.7, 1e-4, VelocityDistribution::gaussian()};
  EXPECT_LT(locked::za_norm_estimate(s, 0.5, 3, 8.0, 40).za_norm, 1e-3);
}

TEST(NormEstimate, InadmissibleWidthIsRejected) {
  LockedState s{3.0, 0.5, VelocityDistribution::lorentzian()};
  EXPECT_THROW(locked::za_norm_estimate(s, 1.2, 2, 5.0, 10), domain_error);
}
