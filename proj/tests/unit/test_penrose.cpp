#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "kuramoto/penrose.hpp"
#include "oracles.hpp"

using namespace kuramoto;
using namespace kuramoto::penrose;

namespace {

// Shifted gamma(3) shape: g(w) = (w+3)^2 e^{-(w+3)}/2, |ghat(xi)| = (1+xi^2)^{-3/2}.
VelocityDistribution gamma3_table(double dw = 0.005) {
  std::vector<double> w, g;
  for (double u = 0.0; u <= 40.0 + 1e-12; u += dw) {
    w.push_back(u - 3.0);
    g.push_back(0.5 * u * u * std::exp(-u));
  }
  return VelocityDistribution::tabulated(w, g);
}

}  // namespace

TEST(BoundaryCurve, GaussianCrossesAtPiG0) {
  auto d = VelocityDistribution::gaussian();
  auto c = boundary_curve(d, 8.0, 512);
  bool found = false;
  for (const auto& s : c.samples)
    if (s.x == 0.0) {
      found = true;
      EXPECT_NEAR(s.w.real(), 1.2533141, 1e-7);
      EXPECT_LT(std::abs(s.w.imag()), 1e-6);
    }
  EXPECT_TRUE(found);
  EXPECT_LT(std::abs(c.samples.front().w), 1e-4);
  EXPECT_LT(std::abs(c.samples.back().w), 1e-4);
  EXPECT_LT(c.endpoint_magnitude, c.closure_tolerance);
}

TEST(BoundaryCurve, LorentzianIsCircle) {
  auto d = VelocityDistribution::lorentzian();
  auto c = boundary_curve(d, 8.0, 256);
  for (const auto& s : c.samples) {
    EXPECT_NEAR(std::abs(s.w - 1.0 / cplx(1.0, s.x)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(s.w - 0.5), 0.5, 1e-12);
  }
}

TEST(BoundaryCurve, RejectsBadArguments) {
  auto d = VelocityDistribution::gaussian();
  EXPECT_THROW(boundary_curve(d, -1.0, 128), kuramoto::domain_error);
  EXPECT_THROW(boundary_curve(d, 8.0, 10), kuramoto::domain_error);
}

TEST(BoundaryCurve, ReportsUnreachedClosure) {
  CurveOptions o;
  o.max_extent_scales = 64;
  try {
    boundary_curve(VelocityDistribution::gaussian(), 8.0, 128, o);
    FAIL() << "expected closure failure";
  } catch (const numeric_error& e) {
    EXPECT_GT(e.achieved(), 1e-4);
  }
}

TEST(Winding, ReferenceCounts) {
  auto g = VelocityDistribution::gaussian();
  auto c = boundary_curve(g, 8.0, 1024);
  EXPECT_EQ(winding_count(c, 1.0), 0);
  EXPECT_EQ(winding_count(c, 2.0), 1);
  auto l = boundary_curve(VelocityDistribution::lorentzian(), 8.0, 256);
  // Root of 1 - (K/2)/(z+1) is z = K/2 - 1.
  EXPECT_EQ(winding_count(l, 1.9), 0);
  EXPECT_EQ(winding_count(l, 2.1), 1);
  EXPECT_EQ(winding_count(l, 50.0), 1);
}

TEST(Winding, BimodalPairAppearsTogether) {
  auto d = VelocityDistribution::bimodal(1.5, 1.0);
  const auto kc = critical_coupling(d);
  ASSERT_TRUE(kc.value.has_value());
  auto c = boundary_curve(d, 8.0, 2048);
  EXPECT_EQ(winding_count(c, *kc.value * (1 - 1e-4)), 0);
  EXPECT_EQ(winding_count(c, *kc.value * (1 + 1e-4)), 2);
}

TEST(Winding, StableUnderGridDoubling) {
  for (const auto& d : {VelocityDistribution::gaussian(0.4, 1.3), VelocityDistribution::bimodal(1.5, 1.0),
                        VelocityDistribution::lorentzian(0.0, 0.7)}) {
    const double kc = *critical_coupling(d).value;
    auto c1 = boundary_curve(d, 8.0 * d.scale(), 256);
    auto c2 = boundary_curve(d, 8.0 * d.scale(), 512);
    for (double K : {0.3 * kc, kc - 1e-3, kc + 1e-3, 1.5 * kc, 4.0 * kc})
      EXPECT_EQ(winding_count(c1, K), winding_count(c2, K)) << d.name() << " K=" << K;
  }
}

TEST(Winding, BelowSufficientBoundIsStable) {
  for (const auto& d : {VelocityDistribution::gaussian(), VelocityDistribution::bimodal(1.5, 1.0),
                        VelocityDistribution::lorentzian(0.2, 2.0), gamma3_table(0.02)}) {
    const double bound = 2.0 / (std::numbers::pi * d.sup_density());
    auto c = boundary_curve(d, 8.0 * d.scale(), 1024);
    for (double f : {0.1, 0.5, 0.9, 0.999}) EXPECT_EQ(winding_count(c, f * bound), 0) << d.name();
  }
}

TEST(Winding, DegenerateCouplingRejected) {
  auto c = boundary_curve(VelocityDistribution::lorentzian(), 8.0, 256);
  EXPECT_THROW(winding_count(c, 2.0), degenerate_error);
}

TEST(Critical, GaussianMatchesDensityFormula) {
  auto g = VelocityDistribution::gaussian();
  const double expected = 2.0 / (std::numbers::pi * g.density(0.0));
  EXPECT_NEAR(expected, 1.5957691, 1e-7);
  EXPECT_NEAR(*critical_coupling(g).value, expected, 1e-10);
}

TEST(Critical, LorentzianIsTwo) {
  EXPECT_NEAR(*critical_coupling(VelocityDistribution::lorentzian()).value, 2.0, 1e-12);
}

TEST(Critical, TranslationInvariantAndLinearInScale) {
  const double base = *critical_coupling(VelocityDistribution::gaussian()).value;
  EXPECT_NEAR(*critical_coupling(VelocityDistribution::gaussian(0.7, 1.0)).value, base, 1e-8);
  EXPECT_NEAR(*critical_coupling(VelocityDistribution::gaussian(-2.5, 1.0)).value, base, 1e-8);
  for (double s : {0.5, 2.0, 3.0})
    EXPECT_NEAR(*critical_coupling(VelocityDistribution::gaussian(0.0, s)).value, s * base, 1e-8 * s);
}

TEST(Energy, ReferenceValues) {
  EXPECT_NEAR(energy_critical_coupling(VelocityDistribution::gaussian()), 1.5957691, 1e-7);
  EXPECT_NEAR(energy_critical_coupling(VelocityDistribution::lorentzian()), 2.0, 1e-10);
  auto b = VelocityDistribution::bimodal(1.5, 1.0);
  EXPECT_LT(energy_critical_coupling(b), *critical_coupling(b).value);
}

TEST(Energy, NeverAboveCritical) {
  for (const auto& d : {VelocityDistribution::gaussian(1.0, 0.5), VelocityDistribution::lorentzian(0.3, 1.7),
                        VelocityDistribution::bimodal(0.8, 1.0), VelocityDistribution::bimodal(3.0, 0.6)})
    EXPECT_LE(energy_critical_coupling(d), *critical_coupling(d).value + 1e-6) << d.name();
}

TEST(Energy, TabulatedAlgebraicTail) {
  // The integral of (1+xi^2)^{-3/2} over [0, inf) is 1, so K_ec = 2 up to
  // the grid error of the interpolant.
  EXPECT_NEAR(energy_critical_coupling(gamma3_table()), 2.0, 1e-3);
}

TEST(Report, FieldsConsistent) {
  auto r = analyze(VelocityDistribution::gaussian(), 2.0);
  EXPECT_EQ(r.winding_count, 1);
  EXPECT_FALSE(r.stable);
  EXPECT_NEAR(*r.penrose_critical, 1.5957691, 1e-7);
  EXPECT_NEAR(r.energy_critical, 1.5957691, 1e-7);
  EXPECT_LE(r.sufficient_bound, *r.penrose_critical + 1e-6);
}
