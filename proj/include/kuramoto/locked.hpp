#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/ellint_1.hpp>

#include "kuramoto/distributions.hpp"
#include "kuramoto/errors.hpp"
#include "kuramoto/parallel.hpp"
#include "kuramoto/quadrature.hpp"

namespace kuramoto::locked {

struct LockedState {
  double K = 0.0;
  cplx eta = 0.0;
  VelocityDistribution dist = VelocityDistribution::gaussian();
  bool phase_power_l = false;  // use (eta/|eta|)^l instead of (eta/|eta|)

  void validate() const {
    if (!(K > 0.0)) throw domain_error("locked state: K must be > 0");
    const double r = std::abs(eta);
    if (!(r > 0.0 && r <= 1.0)) throw domain_error("locked state: |eta| must lie in (0, 1]");
  }
};

/// The root of b^2 - 2iz b - 1 = 0 with |b| <= 1 on Im z >= 0; equals
/// iz + sqrt(1 - z^2) on [-1, 1] and iz(1 - sqrt(1 - 1/z^2)) for |z| >= 1.
/// Computed as -1 over the larger root to avoid cancellation.
inline cplx beta_eval(cplx z) {
  if (z.imag() < 0.0) throw domain_error("beta: Im z must be >= 0");
  const cplx iz(-z.imag(), z.real());
  const cplx r = std::sqrt(1.0 - z * z);
  const cplx plus = iz + r, minus = iz - r;
  const double ap = std::abs(plus), am = std::abs(minus);
  // The two roots multiply to -1; on the real segment both have modulus 1.
  const cplx big = (ap > am * (1.0 + 1e-14)) ? plus : minus;
  return -1.0 / big;
}

namespace detail {

/// g(w + ia) for the analytic families.
inline cplx density_shifted(const VelocityDistribution& d, double w, double a) {
  const cplx z(w, a);
  auto gauss = [](cplx x, double m, double s) {
    const cplx u = (x - m) / s;
    return std::exp(-0.5 * u * u) / (s * std::sqrt(2.0 * std::numbers::pi));
  };
  if (const auto* g = std::get_if<Gaussian>(&d.family())) return gauss(z, g->mean, g->stddev);
  if (const auto* b = std::get_if<BimodalGaussian>(&d.family()))
    return 0.5 * (gauss(z, b->offset, b->stddev) + gauss(z, -b->offset, b->stddev));
  if (const auto* l = std::get_if<Lorentzian>(&d.family())) {
    const cplx u = z - l->center;
    return l->halfwidth / (std::numbers::pi * (u * u + l->halfwidth * l->halfwidth));
  }
  throw domain_error("locked: tabulated densities have no analytic continuation");
}

inline double admissible_limit(const VelocityDistribution& d) {
  if (std::holds_alternative<Tabulated>(d.family())) return 0.0;
  return d.analyticity_bound();
}

}  // namespace detail

/// || g(. + ia) ||_1; closed form for the Gaussian.
inline double shifted_l1_norm(const VelocityDistribution& d, double a) {
  if (!(a > 0.0) || !(a < detail::admissible_limit(d)))
    throw domain_error("shifted norm: a is not admissible for " + d.name());
  if (const auto* g = std::get_if<Gaussian>(&d.family())) return std::exp(0.5 * a * a / (g->stddev * g->stddev));
  if (const auto* l = std::get_if<Lorentzian>(&d.family())) {
    // int dw / sqrt((w^2 + p^2)(w^2 + q^2)) = (2/p) K(sqrt(1 - q^2/p^2)), p = hw + a, q = hw - a.
    const double p = l->halfwidth + a, q = l->halfwidth - a;
    return l->halfwidth / std::numbers::pi * 2.0 / p * boost::math::ellint_1(std::sqrt(1.0 - (q * q) / (p * p)));
  }
  quad::Options opt;
  opt.abs_tol = 1e-12;
  opt.max_panels = 20000;
  const double c = d.center(), s = std::max(d.scale(), a);
  std::vector<double> br;
  for (int k = -60; k <= 60; ++k) br.push_back(c + s * k);
  return quad::integrate_pieces([&](double w) { return std::abs(detail::density_shifted(d, w, a)); }, br, opt).value;
}

/// u(l, xi) = int e^{i xi w} g(w) P beta(w / (K|eta|))^l dw with P = eta/|eta|
/// (or its l-th power). Real-axis quadrature, split at the locking edges
/// and into panels of length pi/xi for oscillatory integrands.
inline cplx locked_fourier_u(const LockedState& s, int l, double xi) {
  s.validate();
  if (l < 1) throw domain_error("locked u: l must be >= 1");
  if (!(xi >= 0.0)) throw domain_error("locked u: xi must be >= 0");
  const double r = std::abs(s.eta);
  const double edge = s.K * r;
  const cplx phase = s.eta / r;
  const cplx P = s.phase_power_l ? std::pow(phase, l) : phase;
  auto f = [&](double w) {
    const cplx b = beta_eval(cplx(w / edge, 0.0));
    return s.dist.density(w) * std::pow(b, l) * std::polar(1.0, xi * w);
  };
  // Window: +-14 sd for the Gaussian families; +-1000 halfwidths for the
  // Lorentzian, whose neglected tail is below 2 hw (K|eta|)^l / (pi (l+1) R^(l+1)).
  auto [lo, hi] = s.dist.support();
  if (const auto* lz = std::get_if<Lorentzian>(&s.dist.family())) {
    lo = lz->center - 1000.0 * lz->halfwidth;
    hi = lz->center + 1000.0 * lz->halfwidth;
  } else if (!std::holds_alternative<Tabulated>(s.dist.family())) {
    const double c = s.dist.center(), w = 14.0 * s.dist.scale();
    lo = std::max(lo, c - w);
    hi = std::min(hi, c + w);
  }
  std::vector<double> br{lo, hi};
  if (edge < hi && -edge > lo) {
    br.push_back(-edge);
    br.push_back(edge);
  }
  if (xi > 0.0) {
    const double step = std::numbers::pi / xi;
    for (double x = lo + step; x < hi; x += step) br.push_back(x);
  }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  quad::Options opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-11;
  opt.max_panels = 400000;
  const cplx v = quad::integrate_pieces(f, br, opt).value;
  return v * P;
}

struct NormEstimate {
  double za_norm = 0.0;          // grid supremum of e^{a xi} |u(l, xi)|
  double shifted_norm = 0.0;     // ||g(. + ia)||_1
  double bound_theorem = 0.0;    // (K|eta|/2) ||g(. + ia)||_1
  double bound_proof = 0.0;      // (K|eta|/a) ||g(. + ia)||_1
  bool small_eta = false;        // |eta| <= a / (sqrt 2 K)
  bool bound_satisfied = true;   // vacuous unless small_eta
  double tail_uncertainty = 0.0; // bound on e^{a xi}|u| for xi > xi_max
  int argmax_l = 1;
  double argmax_xi = 0.0;
};

/// Grid supremum over l <= l_max and n+1 points of [0, xi_max].
inline NormEstimate za_norm_estimate(const LockedState& s, double a, int l_max, double xi_max, int n = 200) {
  s.validate();
  if (l_max < 1 || n < 1 || !(xi_max > 0.0)) throw domain_error("za norm: need l_max >= 1, n >= 1, xi_max > 0");
  const double amax = detail::admissible_limit(s.dist);
  if (!(a > 0.0 && a < amax)) throw domain_error("za norm: a is not admissible for " + s.dist.name());
  NormEstimate out;
  const double r = std::abs(s.eta);
  out.shifted_norm = shifted_l1_norm(s.dist, a);
  out.bound_theorem = 0.5 * s.K * r * out.shifted_norm;
  out.bound_proof = s.K * r / a * out.shifted_norm;
  out.small_eta = r <= a / (std::sqrt(2.0) * s.K);

  const std::size_t cols = static_cast<std::size_t>(n) + 1;
  std::vector<double> vals(static_cast<std::size_t>(l_max) * cols);
  parallel_for(vals.size(), [&](std::size_t k) {
    const int l = static_cast<int>(k / cols) + 1;
    const double xi = xi_max * static_cast<double>(k % cols) / n;
    vals[k] = std::exp(a * xi) * std::abs(locked_fourier_u(s, l, xi));
  });
  for (std::size_t k = 0; k < vals.size(); ++k)
    if (vals[k] > out.za_norm) {
      out.za_norm = vals[k];
      out.argmax_l = static_cast<int>(k / cols) + 1;
      out.argmax_xi = xi_max * static_cast<double>(k % cols) / n;
    }

  // Shifting the contour to Im w = a' > a gives e^{a xi}|u| <= e^{-(a'-a) xi} ||g(. + ia')||_1.
  double tail = std::numeric_limits<double>::infinity();
  const double top = std::min(amax, a + 4.0 * xi_max);
  for (int k = 1; k <= 64; ++k) {
    const double ap = a + (top - a) * k / 65.0;
    tail = std::min(tail, std::exp(-(ap - a) * xi_max) * shifted_l1_norm(s.dist, ap));
  }
  out.tail_uncertainty = tail;
  if (out.small_eta)
    out.bound_satisfied = out.za_norm <= std::max(out.bound_theorem, out.bound_proof) * (1.0 + 1e-6);
  return out;
}

/// Classical self-consistency r = K r int_{-pi/2}^{pi/2} cos^2 t g(K r sin t) dt
/// for a symmetric unimodal density, by bisection. Returns 0 below onset.
inline double self_consistent_amplitude(const VelocityDistribution& dist, double K) {
  if (!dist.symmetric_unimodal()) throw domain_error("self-consistency: needs a symmetric unimodal density");
  if (!(K > 0.0)) throw domain_error("self-consistency: K must be > 0");
  const double c = dist.center();
  auto h = [&](double r) {
    quad::Options opt;
    opt.abs_tol = 1e-14;
    return K * quad::integrate(
                   [&](double t) {
                     const double ct = std::cos(t);
                     return ct * ct * dist.density(c + K * r * std::sin(t));
                   },
                   -0.5 * std::numbers::pi, 0.5 * std::numbers::pi, opt)
                   .value -
           1.0;
  };
  if (h(1e-12) <= 0.0) return 0.0;
  double lo = 1e-12, hi = 1.0;
  if (h(hi) > 0.0) return 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace kuramoto::locked
