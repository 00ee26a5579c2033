#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "kuramoto/distributions.hpp"
#include "kuramoto/errors.hpp"
#include "kuramoto/penrose.hpp"
#include "kuramoto/quadrature.hpp"
#include "kuramoto/volterra.hpp"

namespace kuramoto::reduction {

/// normalization * d/dt beta = linear_per_eps * eps * beta + cubic * |beta|^2 beta
struct AmplitudeEquation {
  cplx linear_per_eps = 0.0;
  cplx cubic = 0.0;
  cplx normalization = 0.0;
  double critical_coupling = 0.0;
  double critical_frequency = 0.0;  // the critical root sits at i * this; reduction is done co-rotating
};

/// The critical crossing, or the roots when several cross simultaneously.
struct CriticalPoint {
  double coupling = 0.0;
  std::vector<double> frequencies;  // critical roots are i * frequencies
  bool simple() const { return frequencies.size() == 1; }
};

struct Reduction {
  std::optional<AmplitudeEquation> equation;  // empty: not reduced
  std::string status;                         // "reduced" or "not reduced: root pair"
  std::vector<cplx> eigenvalues;
};

struct EquilibriumAmplitude {
  double value = 0.0;
  bool valid = true;  // false when eps > 0.1 K_c
};

namespace detail {

inline constexpr double moment_tol = 1e-12;

/// int_{xi0}^inf (z - xi0)^k e^{-i x z} ghat(z) dz.
inline cplx shifted_moment(const VelocityDistribution& d, double x, int k, double xi0) {
  auto f = [&](double s) {
    const double z = xi0 + s;
    return std::pow(s, k) * std::polar(1.0, -x * z) * d.fourier(z);
  };
  quad::Options opt;
  opt.abs_tol = moment_tol;
  opt.rel_tol = 1e-12;
  opt.max_panels = 20000;
  if (!std::holds_alternative<Tabulated>(d.family())) {
    auto tail = [&](double S) { return volterra::detail::mode_tail(d, xi0, 0.0, k, S); };
    return quad::integrate_to_infinity(f, 0.0, tail, opt, 1.0 / d.scale()).value;
  }
  // Tabulated: octaves up to the resolution limit of the interpolant, then a
  // geometric tail from the last octave ratio.
  const auto& tab = std::get<Tabulated>(d.family());
  double dw = 0.0;
  for (std::size_t i = 0; i + 1 < tab.omega().size(); ++i) dw = std::max(dw, tab.omega()[i + 1] - tab.omega()[i]);
  const double limit = 0.25 / dw;
  double lo = std::min(1.0 / d.scale(), limit / 4.0);
  cplx total = quad::integrate(f, 0.0, lo, opt).value;
  cplx prev = 0.0, piece = 0.0;
  while (2.0 * lo <= limit) {
    prev = piece;
    piece = quad::integrate(f, lo, 2.0 * lo, opt).value;
    total += piece;
    lo *= 2.0;
  }
  if (std::abs(prev) == 0.0) return total;
  const double r = std::abs(piece) / std::abs(prev);
  if (!(r < 0.5))
    throw domain_error("reduction: moment of order " + std::to_string(k) + " does not converge for this table");
  return total + piece * (r / (1.0 - r));
}

}  // namespace detail

/// Locates the critical crossing of the boundary curve. Several crossings at
/// the same height mean a multiple critical root (for example a conjugate pair).
inline CriticalPoint critical_point(const VelocityDistribution& dist) {
  const auto cc = penrose::critical_coupling(dist);
  if (!cc.value) throw domain_error("reduction: distribution has no finite critical coupling");
  CriticalPoint p;
  p.coupling = *cc.value;
  const double top = 2.0 / p.coupling;
  for (const auto& c : cc.crossings)
    if (std::abs(c.value - top) <= 1e-9 * top) p.frequencies.push_back(c.x);
  return p;
}

/// 1 / alpha(z), alpha(v) = int_0^inf v(1, xi) dxi and z(1, xi) = (K_c/2) int_xi^inf ghat.
inline double projection_coefficient(const VelocityDistribution& dist, double K_c, double frequency = 0.0) {
  const cplx a = 0.5 * K_c * detail::shifted_moment(dist, frequency, 1, 0.0);
  if (std::abs(a) < 1e-10) throw degenerate_error("reduction: alpha(z) vanishes, root is not simple", std::abs(a));
  if (std::abs(a.imag()) > 1e-8 * std::abs(a))
    throw domain_error("reduction: alpha(z) is not real in this frame; use the complex normalization");
  return 1.0 / a.real();
}

/// Second-mode quadratic term per unit beta^2:
/// 2 K_c int_0^inf z(1, xi + 2s) ds = (K_c^2/2) int_xi^inf (zeta - xi) ghat(zeta) dzeta.
inline cplx quadratic_manifold_term(const VelocityDistribution& dist, double K_c, double xi, double frequency = 0.0) {
  if (!(xi >= 0.0)) throw domain_error("quadratic term: xi must be >= 0");
  return 0.5 * K_c * K_c * detail::shifted_moment(dist, frequency, 1, xi);
}

/// Amplitude equation at a simple critical root i*frequency, in the frame
/// rotating with that frequency.
inline AmplitudeEquation amplitude_equation(const VelocityDistribution& dist, double K_c, double frequency = 0.0) {
  if (!(K_c > 0.0)) throw domain_error("amplitude equation: K_c must be > 0");
  const cplx m0 = detail::shifted_moment(dist, frequency, 0, 0.0);
  if (std::abs(0.5 * K_c * m0 - 1.0) > 1e-6)
    throw domain_error("amplitude equation: K_c is not critical at this frequency, (K_c/2) Lghat = " +
                       std::to_string(std::abs(0.5 * K_c * m0)));
  const cplx m1 = detail::shifted_moment(dist, frequency, 1, 0.0);
  const cplx m2 = detail::shifted_moment(dist, frequency, 2, 0.0);
  AmplitudeEquation eq;
  eq.critical_coupling = K_c;
  eq.critical_frequency = frequency;
  eq.normalization = 0.5 * K_c * m1;
  if (std::abs(eq.normalization) < 1e-10)
    throw degenerate_error("amplitude equation: normalization vanishes, root is not simple", std::abs(eq.normalization));
  // N(1) = (eps/2) beta ghat - (K_c/2) conj(beta) b(2)/2, b(2) = beta^2 B, int_0^inf B = (K_c^2/4) m2.
  eq.linear_per_eps = 0.5 * m0;
  eq.cubic = -0.25 * K_c * (0.25 * K_c * K_c * m2);
  return eq;
}

/// Full pipeline: finds K_c, reduces a simple critical root, reports pairs.
inline Reduction reduce(const VelocityDistribution& dist) {
  const auto cp = critical_point(dist);
  Reduction r;
  for (double x : cp.frequencies) r.eigenvalues.push_back(cplx(0.0, x));
  if (!cp.simple()) {
    r.status = "not reduced: root pair";
    return r;
  }
  r.equation = amplitude_equation(dist, cp.coupling, cp.frequencies.front());
  r.status = "reduced";
  return r;
}

/// sqrt(Re(linear) eps / |Re(cubic)|).
inline EquilibriumAmplitude equilibrium_amplitude(const AmplitudeEquation& eq, double eps) {
  if (!(eps > 0.0)) throw domain_error("equilibrium amplitude: eps must be > 0");
  if (!(eq.cubic.real() < 0.0))
    throw domain_error("equilibrium amplitude: cubic coefficient has Re >= 0 (subcritical)");
  if (!(eq.linear_per_eps.real() > 0.0))
    throw domain_error("equilibrium amplitude: linear coefficient has Re <= 0");
  return {std::sqrt(eq.linear_per_eps.real() * eps / -eq.cubic.real()), eps <= 0.1 * eq.critical_coupling};
}

/// Largest coefficient of a non-equivariant monomial beta^p conj(beta)^q,
/// p - q != 1, p + q <= 3, in the reduced vector field alpha(N(beta z + psi)).
/// The field is sampled on circles and split into angular harmonics.
inline double equivariance_defect(const AmplitudeEquation& eq, double eps) {
  auto field = [&](cplx b) { return eq.linear_per_eps * eps * b + eq.cubic * std::norm(b) * b; };
  double worst = 0.0;
  const int n = 32;
  for (double r : {0.05, 0.1, 0.2}) {
    for (int k = -3; k <= 3; ++k) {
      if (k == 1) continue;
      cplx c = 0.0;
      for (int j = 0; j < n; ++j) {
        const double th = 2.0 * std::numbers::pi * j / n;
        c += field(std::polar(r, th)) * std::polar(1.0, -k * th);
      }
      worst = std::max(worst, std::abs(c) / n / r);
    }
  }
  return worst;
}

}  // namespace kuramoto::reduction
