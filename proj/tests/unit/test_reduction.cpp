#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kuramoto/reduction.hpp"
#include "kuramoto/volterra.hpp"
#include "oracles.hpp"

using namespace kuramoto;
using std::numbers::pi;

namespace {
const double kGaussKc = 4.0 / std::sqrt(2.0 * pi);
}

TEST(Projection, GaussianIsTwoOverKc) {
  EXPECT_NEAR(reduction::projection_coefficient(VelocityDistribution::gaussian(), kGaussKc), std::sqrt(2 * pi) / 2,
              1e-10);
}

TEST(Projection, LorentzianIsOne) {
  EXPECT_NEAR(reduction::projection_coefficient(VelocityDistribution::lorentzian(), 2.0), 1.0, 1e-10);
}

TEST(Projection, ScaleFamilyKeepsProductOne) {
  for (double s : {0.5, 2.0, 3.0}) {
    auto g = VelocityDistribution::gaussian(0.0, s);
    const double kc = 2 * s * std::sqrt(2 / pi);
    const double alpha = 0.5 * kc / (s * s);  // (K_c/2) int_0^inf xi e^{-s^2 xi^2/2}
    EXPECT_NEAR(reduction::projection_coefficient(g, kc) * alpha, 1.0, 1e-10);
  }
}

TEST(QuadraticTerm, LorentzianClosedForm) {
  auto l = VelocityDistribution::lorentzian();
  for (double xi : {0.0, 0.4, 2.5, 10.0})
    EXPECT_NEAR(std::abs(reduction::quadratic_manifold_term(l, 2.0, xi) - 2.0 * std::exp(-xi)), 0.0, 1e-10);
  EXPECT_THROW(reduction::quadratic_manifold_term(l, 2.0, -1.0), domain_error);
}

TEST(QuadraticTerm, GaussianIntegralAndTail) {
  auto g = VelocityDistribution::gaussian();
  // int_0^inf B = (K_c^2/4) int zeta^2 ghat = K_c^2 sqrt(2 pi)/8 for unit amplitude.
  const cplx total = oracle::gauss_legendre(
      [&](double xi) { return reduction::quadratic_manifold_term(g, kGaussKc, xi); }, 0.0, 14.0, 28);
  EXPECT_NEAR(std::abs(total - kGaussKc * kGaussKc * std::sqrt(2 * pi) / 8), 0.0, 1e-9);
  EXPECT_LT(std::abs(reduction::quadratic_manifold_term(g, kGaussKc, 12.0)), 1e-25);
}

TEST(AmplitudeEquation, GaussianCoefficients) {
  auto eq = reduction::amplitude_equation(VelocityDistribution::gaussian(), kGaussKc);
  EXPECT_NEAR(eq.linear_per_eps.real(), std::sqrt(2 * pi) / 4, 1e-10);
  EXPECT_NEAR(eq.cubic.real(), -1 / pi, 1e-10);
  EXPECT_NEAR(eq.normalization.real(), kGaussKc / 2, 1e-10);
  EXPECT_LT(std::abs(eq.linear_per_eps.imag()) + std::abs(eq.cubic.imag()) + std::abs(eq.normalization.imag()), 1e-8);
}

TEST(AmplitudeEquation, LorentzianMatchesReducedOde) {
  // On the geometric manifold rho' = (K/2 - 1) rho - (K/2) rho^3, so at
  // K = 2 + eps: rho' = (eps/2) rho - rho^3 + O(eps rho^3).
  auto eq = reduction::amplitude_equation(VelocityDistribution::lorentzian(), 2.0);
  EXPECT_NEAR(std::abs(eq.linear_per_eps / eq.normalization - 0.5), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(eq.cubic / eq.normalization + 1.0), 0.0, 1e-10);
}

TEST(AmplitudeEquation, GaussianWidthScaling) {
  // Substituting xi -> xi/s: linear sqrt(pi/2)/(2s), cubic -1/pi, normalization sqrt(2/pi)/s.
  const double s = 2.0;
  const double kc = 2 * s * std::sqrt(2 / pi);
  auto eq = reduction::amplitude_equation(VelocityDistribution::gaussian(0.0, s), kc);
  EXPECT_NEAR(eq.linear_per_eps.real(), std::sqrt(pi / 2) / (2 * s), 1e-10);
  EXPECT_NEAR(eq.cubic.real(), -1 / pi, 1e-10);
  EXPECT_NEAR(eq.normalization.real(), std::sqrt(2 / pi) / s, 1e-10);
}

TEST(AmplitudeEquation, LinearCoefficientIsHalfLaplaceAtZero) {
  auto g = VelocityDistribution::gaussian(0.0, 0.7);
  const double kc = 2.0 / g.laplace(0.0).real();
  auto eq = reduction::amplitude_equation(g, kc);
  EXPECT_NEAR(std::abs(eq.linear_per_eps - 0.5 * g.laplace(0.0)), 0.0, 1e-12);
}

TEST(AmplitudeEquation, RejectsNonCriticalCoupling) {
  EXPECT_THROW(reduction::amplitude_equation(VelocityDistribution::gaussian(), 1.5), domain_error);
}

TEST(AmplitudeEquation, ShiftedMeanReducesInRotatingFrame) {
  auto r = reduction::reduce(VelocityDistribution::gaussian(0.8, 1.0));
  ASSERT_TRUE(r.equation);
  EXPECT_NEAR(r.equation->critical_frequency, 0.8, 1e-9);
  EXPECT_NEAR(r.equation->critical_coupling, kGaussKc, 1e-9);
  EXPECT_NEAR(std::abs(r.equation->cubic + 1 / pi), 0.0, 1e-9);
}

TEST(AmplitudeEquation, MatchesEigenvalueDerivative) {
  // d(Re lambda)/dK at K_c times normalization equals the linear coefficient.
  auto g = VelocityDistribution::gaussian();
  auto eq = reduction::amplitude_equation(g, kGaussKc);
  const double d = 1e-4;
  const volterra::Box box{-0.2, 0.5, -0.5, 0.5};
  auto up = volterra::locate_roots(g, kGaussKc + d, 0.5, box);
  auto dn = volterra::locate_roots(g, kGaussKc - d, 0.5, box);
  ASSERT_EQ(up.roots.size(), 1u);
  ASSERT_EQ(dn.roots.size(), 1u);
  const double slope = (up.roots[0].lambda.real() - dn.roots[0].lambda.real()) / (2 * d);
  EXPECT_NEAR(slope * eq.normalization.real(), eq.linear_per_eps.real(), 1e-6);
}

TEST(Reduce, GaussianPipeline) {
  auto r = reduction::reduce(VelocityDistribution::gaussian());
  ASSERT_TRUE(r.equation);
  EXPECT_EQ(r.status, "reduced");
  ASSERT_EQ(r.eigenvalues.size(), 1u);
  EXPECT_LT(std::abs(r.eigenvalues[0]), 1e-9);
  EXPECT_NEAR(r.equation->critical_coupling, kGaussKc, 1e-9);
}

TEST(Reduce, BimodalReportsRootPair) {
  auto r = reduction::reduce(VelocityDistribution::bimodal(1.5, 1.0));
  EXPECT_FALSE(r.equation);
  EXPECT_EQ(r.status, "not reduced: root pair");
  ASSERT_EQ(r.eigenvalues.size(), 2u);
  EXPECT_NEAR(r.eigenvalues[0].imag(), -r.eigenvalues[1].imag(), 1e-8);
  EXPECT_GT(std::abs(r.eigenvalues[0].imag()), 0.1);
}

TEST(Equilibrium, GaussianValuesAndScaling) {
  auto eq = reduction::amplitude_equation(VelocityDistribution::gaussian(), kGaussKc);
  const double c = std::sqrt(pi / 4 * std::sqrt(2 * pi));
  EXPECT_NEAR(reduction::equilibrium_amplitude(eq, 0.05).value, c * std::sqrt(0.05), 1e-9);
  EXPECT_NEAR(reduction::equilibrium_amplitude(eq, 0.05).value, 0.3137, 1e-4);
  for (double e : {1e-6, 1e-3, 0.02, 0.1})
    EXPECT_NEAR(reduction::equilibrium_amplitude(eq, e).value / std::sqrt(e), c, 1e-12);
  auto formal = reduction::equilibrium_amplitude(eq, 1.0);
  EXPECT_NEAR(formal.value, 1.4031, 1e-4);
  EXPECT_FALSE(formal.valid);
  EXPECT_TRUE(reduction::equilibrium_amplitude(eq, 0.1).valid);
}

TEST(Equilibrium, RejectsSubcriticalAndNonPositiveEps) {
  reduction::AmplitudeEquation eq;
  eq.linear_per_eps = 1.0;
  eq.cubic = 0.5;
  eq.critical_coupling = 2.0;
  EXPECT_THROW(reduction::equilibrium_amplitude(eq, 0.1), domain_error);
  eq.cubic = -0.5;
  EXPECT_THROW(reduction::equilibrium_amplitude(eq, 0.0), domain_error);
  eq.linear_per_eps = -1.0;
  EXPECT_THROW(reduction::equilibrium_amplitude(eq, 0.1), domain_error);
}

TEST(Equivariance, NoNonEquivariantMonomials) {
  auto eq = reduction::amplitude_equation(VelocityDistribution::gaussian(), kGaussKc);
  EXPECT_LT(reduction::equivariance_defect(eq, 0.05), 1e-8);
}
