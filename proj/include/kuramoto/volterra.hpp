#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "kuramoto/distributions.hpp"
#include "kuramoto/errors.hpp"
#include "kuramoto/parallel.hpp"
#include "kuramoto/quadrature.hpp"
#include "kuramoto/signal.hpp"

namespace kuramoto::volterra {

/// Axis-aligned rectangle in the complex plane.
struct Box {
  double re_min, re_max, im_min, im_max;
  double diameter() const { return std::hypot(re_max - re_min, im_max - im_min); }
  cplx center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
  bool contains(cplx z, double margin = 0.0) const {
    return z.real() >= re_min - margin && z.real() <= re_max + margin && z.imag() >= im_min - margin &&
           z.imag() <= im_max + margin;
  }
};

struct Root {
  cplx lambda;
  int multiplicity = 1;
  /// Laurent coefficients of 1/F at lambda: residues[k] multiplies (z-lambda)^{-(k+1)}.
  std::vector<cplx> residues;
};

struct EigenmodeSet {
  std::vector<Root> roots;
  double strip_bound = 0.0;
  Box box{};
  double boundary_min_abs = 0.0;
  int contour_count = 0;

  int total_multiplicity() const {
    int n = 0;
    for (const auto& r : roots) n += r.multiplicity;
    return n;
  }
};

/// k(j dt) = -(K/2) ghat(j dt) for j = 0..ceil(T/dt).
inline SampledSignal kernel_signal(const VelocityDistribution& dist, double K, double T, double dt) {
  if (!(K >= 0.0) || !(T > 0.0) || !(dt > 0.0)) throw domain_error("kernel: need K >= 0, T > 0, dt > 0");
  const auto n = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  SampledSignal k{0.0, dt, std::vector<cplx>(n + 1)};
  for (std::size_t j = 0; j <= n; ++j) k.values[j] = -0.5 * K * dist.fourier(dt * static_cast<double>(j));
  return k;
}

namespace detail {

// Forward product integration for x + k*x = f (trapezoid weights).
inline SampledSignal forward_solve(const SampledSignal& k, const SampledSignal& f) {
  const std::size_t n = f.size();
  SampledSignal x{f.t0, f.dt, std::vector<cplx>(n)};
  const cplx diag = 1.0 + 0.5 * k.dt * k.values[0];
  if (std::abs(diag) < 1e-12) throw numeric_error("volterra: singular diagonal (1 + dt k(0)/2 = 0)", std::abs(diag));
  x.values[0] = f.values[0];
  std::vector<cplx> terms;
  for (std::size_t m = 1; m < n; ++m) {
    terms.assign(m, 0.0);
    terms[0] = 0.5 * k.values[m] * x.values[0];
    for (std::size_t j = 1; j < m; ++j) terms[j] = k.values[m - j] * x.values[j];
    x.values[m] = (f.values[m] - k.dt * pairwise_sum(terms)) / diag;
  }
  return x;
}

inline double residual(const SampledSignal& k, const SampledSignal& x, const SampledSignal& f) {
  double worst = 0.0;
  for (std::size_t m = 0; m < x.size(); ++m)
    worst = std::max(worst, std::abs(x.values[m] + trapezoid_convolution_at(k, x, m) - f.values[m]));
  return worst;
}

}  // namespace detail

/// Resolvent r of r + r*k = k on the grid of k, by trapezoidal product
/// integration. Throws numeric_error if the grid residual exceeds
/// 1e-8 (1 + max|k|).
inline SampledSignal resolvent_solve(const SampledSignal& k) {
  k.validate("resolvent");
  if (k.t0 != 0.0) throw domain_error("resolvent: kernel must start at t = 0");
  auto r = detail::forward_solve(k, k);
  r.validate("resolvent");
  const double res = detail::residual(k, r, k);
  if (res >= 1e-8 * (1.0 + k.max_abs())) throw numeric_error("resolvent: residual check failed", res);
  return r;
}

/// Solution x of x + k*x = f on a shared grid. Equals f - r*f in the
/// continuum; on the grid the equation is solved directly so that the
/// discrete residual vanishes to rounding.
inline SampledSignal volterra_solve(const SampledSignal& k, const SampledSignal& f) {
  k.validate("volterra kernel");
  f.validate("volterra forcing");
  if (k.t0 != 0.0 || f.t0 != 0.0 || k.dt != f.dt || k.size() != f.size())
    throw usage_error("volterra: kernel and forcing must share t0 = 0, dt and length");
  auto x = detail::forward_solve(k, f);
  x.validate("volterra");
  const double res = detail::residual(k, x, f);
  if (res >= 1e-8 * (1.0 + f.max_abs())) throw numeric_error("volterra: residual check failed", res);
  return x;
}

/// Order parameter of the linearized flow: nu + k*nu = u1_init(t).
inline SampledSignal linear_order_parameter(const VelocityDistribution& dist, double K,
                                            const std::function<cplx(double)>& u1_init, double T, double dt) {
  auto k = kernel_signal(dist, K, T, dt);
  SampledSignal f{0.0, dt, std::vector<cplx>(k.size())};
  for (std::size_t j = 0; j < f.size(); ++j) f.values[j] = u1_init(f.time(j));
  return volterra_solve(k, f);
}

// ---------------------------------------------------------------------------
// Roots of F(z) = 1 - (K/2) Lghat(z).

struct RootOptions {
  double boundary_tol = 1e-8;    // required min |F| on the search box boundary
  double cluster_diameter = 1e-7;
  int newton_iterations = 100;
  int residue_points = 64;
};

namespace detail {

struct Dispersion {
  const VelocityDistribution& dist;
  double K;
  cplx operator()(cplx z) const { return 1.0 - 0.5 * K * dist.laplace(z); }
  cplx derivative(cplx z) const { return -0.5 * K * dist.laplace_derivative(z); }
};

struct ContourResult {
  int count = 0;
  double min_abs = std::numeric_limits<double>::infinity();
  bool degenerate = false;
};

// Argument change of F along the segment a -> b, subdividing until every
// step is below pi/4.
inline double segment_arg(const Dispersion& F, cplx a, cplx fa, cplx b, cplx fb, double floor,
                          ContourResult& out, int depth) {
  const double step = std::arg(fb / fa);
  if (std::abs(step) <= std::numbers::pi / 4 || depth > 30) return step;
  const cplx m = 0.5 * (a + b);
  const cplx fm = F(m);
  out.min_abs = std::min(out.min_abs, std::abs(fm));
  if (std::abs(fm) < floor) {
    out.degenerate = true;
    return 0.0;
  }
  return segment_arg(F, a, fa, m, fm, floor, out, depth + 1) + segment_arg(F, m, fm, b, fb, floor, out, depth + 1);
}

inline ContourResult contour_count(const Dispersion& F, const Box& b, double floor, int per_edge = 16) {
  ContourResult out;
  const std::array<cplx, 5> corners{cplx(b.re_min, b.im_min), cplx(b.re_max, b.im_min), cplx(b.re_max, b.im_max),
                                    cplx(b.re_min, b.im_max), cplx(b.re_min, b.im_min)};
  std::vector<cplx> pts;
  for (int e = 0; e < 4; ++e)
    for (int i = 0; i < per_edge; ++i)
      pts.push_back(corners[e] + (corners[e + 1] - corners[e]) * (static_cast<double>(i) / per_edge));
  std::vector<cplx> vals(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { vals[i] = F(pts[i]); });
  for (const auto& v : vals) out.min_abs = std::min(out.min_abs, std::abs(v));
  if (out.min_abs < floor) {
    out.degenerate = true;
    return out;
  }
  std::vector<double> steps(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t j = (i + 1) % pts.size();
    steps[i] = segment_arg(F, pts[i], vals[i], pts[j], vals[j], floor, out, 0);
  }
  if (out.degenerate) return out;
  out.count = static_cast<int>(std::lround(pairwise_sum(steps) / (2.0 * std::numbers::pi)));
  return out;
}

// Newton for F with multiplicity m (modified step m F/F').
inline std::optional<cplx> newton(const Dispersion& F, cplx z, int m, int iterations, const Box& keep) {
  const double margin = 0.05 * keep.diameter();
  for (int it = 0; it < iterations; ++it) {
    const cplx f = F(z);
    const cplx d = F.derivative(z);
    if (f == 0.0) return z;
    if (d == 0.0) return std::nullopt;
    const cplx step = static_cast<double>(m) * f / d;
    z -= step;
    if (!keep.contains(z, margin)) return std::nullopt;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) return z;
  }
  // Not converged from this start: the caller subdivides instead.
  if (std::abs(F(z)) < 1e-13) return z;
  return std::nullopt;
}

// Moments sum_i (z_i - c)^k, k = 0..2, of the roots inside a circle.
inline std::array<cplx, 3> circle_moments(const Dispersion& F, cplx c, double rho, int n = 128) {
  std::array<std::vector<cplx>, 3> parts;
  for (auto& p : parts) p.resize(n);
  for (int i = 0; i < n; ++i) {
    const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * i / n);
    const cplx z = c + rho * e;
    const cplx q = F.derivative(z) / F(z) * (rho * e);  // dz / (2 pi i dtheta) scaled
    cplx pw = 1.0;
    for (int k = 0; k < 3; ++k) {
      parts[k][i] = q * pw;
      pw *= rho * e;
    }
  }
  std::array<cplx, 3> out;
  for (int k = 0; k < 3; ++k) out[k] = pairwise_sum(parts[k]) / static_cast<double>(n);
  return out;
}

inline void isolate(const Dispersion& F, const Box& box, int count, const RootOptions& opt,
                    std::vector<Root>& found, int depth) {
  if (count <= 0) return;
  if (depth > 80) throw numeric_error("locate roots: subdivision depth exceeded", box.diameter());
  if (count == 1) {
    if (auto z = newton(F, box.center(), 1, opt.newton_iterations, box); z && box.contains(*z, 1e-12)) {
      found.push_back({*z, 1, {}});
      return;
    }
  } else {
    // A tight cluster is accepted once the root spread, measured by contour
    // moments on a small circle, is below the cluster diameter.
    if (auto z = newton(F, box.center(), count, opt.newton_iterations, box); z && box.contains(*z, 1e-12)) {
      const double rho = std::min(1e-3, 0.5 * box.diameter());
      const auto mom = circle_moments(F, *z, rho);
      const bool all_here = std::lround(mom[0].real()) == count;
      const double spread = std::sqrt(std::abs(mom[2]) / count) + std::abs(mom[1]) / count;
      if (all_here && spread < opt.cluster_diameter) {
        found.push_back({*z + mom[1] / static_cast<double>(count), count, {}});
        return;
      }
    }
  }
  // Quadrisect at slightly off-center ratios; retry other ratios if a cut
  // passes too close to a root.
  for (double ratio : {0.4781, 0.5319, 0.4417, 0.5573, 0.3911}) {
    const double xm = box.re_min + ratio * (box.re_max - box.re_min);
    const double ym = box.im_min + (1.0 - ratio) * (box.im_max - box.im_min);
    const std::array<Box, 4> kids{Box{box.re_min, xm, box.im_min, ym}, Box{xm, box.re_max, box.im_min, ym},
                                  Box{box.re_min, xm, ym, box.im_max}, Box{xm, box.re_max, ym, box.im_max}};
    std::array<int, 4> counts{};
    bool ok = true;
    int sum = 0;
    for (int i = 0; i < 4 && ok; ++i) {
      const auto c = contour_count(F, kids[i], 1e-13);
      ok = !c.degenerate && c.count >= 0;
      counts[i] = c.count;
      sum += c.count;
    }
    if (!ok || sum != count) continue;
    for (int i = 0; i < 4; ++i) isolate(F, kids[i], counts[i], opt, found, depth + 1);
    return;
  }
  throw numeric_error("locate roots: could not split a box consistently", box.diameter());
}

}  // namespace detail

/// All zeros of F(z) = 1 - (K/2) Lghat(z) inside `box`, with multiplicities
/// and Laurent coefficients of 1/F. The left edge must satisfy
/// re_min >= -strip and strip < analyticity bound.
inline EigenmodeSet locate_roots(const VelocityDistribution& dist, double K, double strip, const Box& box,
                                 const RootOptions& opt = {}) {
  if (!(K >= 0.0)) throw domain_error("locate roots: K must be >= 0");
  if (!(box.re_max > box.re_min) || !(box.im_max > box.im_min)) throw domain_error("locate roots: empty box");
  if (!(strip >= 0.0)) throw domain_error("locate roots: strip bound must be >= 0");
  if (box.re_min < -strip) throw domain_error("locate roots: box extends left of the strip Re z > -a");
  const double amax = dist.analyticity_bound();
  if (box.re_min <= -amax || (amax == 0.0 && box.re_min <= 0.0))
    throw domain_error("locate roots: box leaves the half-plane where Lghat is analytic");

  detail::Dispersion F{dist, K};
  EigenmodeSet out;
  out.strip_bound = strip;
  out.box = box;
  const auto outer = detail::contour_count(F, box, opt.boundary_tol);
  out.boundary_min_abs = outer.min_abs;
  if (outer.degenerate)
    throw degenerate_error("locate roots: F nearly vanishes on the box boundary; reposition the box", outer.min_abs);
  out.contour_count = outer.count;
  if (outer.count < 0) throw numeric_error("locate roots: negative contour count", outer.count);

  std::vector<Root> found;
  detail::isolate(F, box, outer.count, opt, found, 0);

  // Laurent coefficients of 1/F on a small circle around each root.
  for (std::size_t i = 0; i < found.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < found.size(); ++j)
      if (j != i) nearest = std::min(nearest, std::abs(found[i].lambda - found[j].lambda));
    const double rho = std::min(1e-2, 0.5 * nearest);
    const int n = opt.residue_points;
    for (int k = 1; k <= found[i].multiplicity; ++k) {
      std::vector<cplx> parts(n);
      for (int s = 0; s < n; ++s) {
        const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * s / n);
        parts[s] = std::pow(rho * e, k) / F(found[i].lambda + rho * e);
      }
      found[i].residues.push_back(pairwise_sum(parts) / static_cast<double>(n));
    }
  }
  out.roots = std::move(found);
  std::sort(out.roots.begin(), out.roots.end(), [](const Root& a, const Root& b) {
    return a.lambda.real() != b.lambda.real() ? a.lambda.real() > b.lambda.real() : a.lambda.imag() < b.lambda.imag();
  });
  return out;
}

/// Default strip for mode decompositions: 0.9 min(a_max, 1).
inline double default_strip(const VelocityDistribution& dist) {
  return 0.9 * std::min(dist.analyticity_bound(), 1.0);
}

/// A box containing every root with Re z >= -strip (or > 0 when strip = 0).
/// Integrating by parts, |Lghat(z)| <= (1 + D)/|z| with
/// D = int_0^inf e^{-re_min xi} |ghat'(xi)| dxi, so a root has |z| <= (K/2)(1 + D).
/// D is the total variation of the sampled ghat, padded by 50%.
inline Box default_box(const VelocityDistribution& dist, double K, double strip) {
  const double re_min = strip > 0.0 ? -strip : 1e-9;
  double cut = 64.0 / dist.scale();
  if (const auto* l = std::get_if<Lorentzian>(&dist.family())) cut = 40.0 / (l->halfwidth - strip);
  else if (const auto* g = std::get_if<Gaussian>(&dist.family()))
    cut = (strip + std::sqrt(strip * strip + 80.0 * g->stddev * g->stddev)) / (g->stddev * g->stddev);
  else if (const auto* b = std::get_if<BimodalGaussian>(&dist.family()))
    cut = (strip + std::sqrt(strip * strip + 80.0 * b->stddev * b->stddev)) / (b->stddev * b->stddev);
  const int n = 20000;
  const double h = cut / n;
  std::vector<double> parts(n);
  cplx prev = dist.fourier(0.0);
  for (int i = 1; i <= n; ++i) {
    const cplx cur = dist.fourier(h * i);
    parts[static_cast<std::size_t>(i - 1)] = std::abs(cur - prev) * std::exp(-re_min * h * (i - 0.5));
    prev = cur;
  }
  const double R = 1.5 * 0.5 * K * (1.0 + pairwise_sum(parts)) + 0.5;
  return {re_min, R, -R, R};
}

namespace detail {

// Bound for the integral of e^{-re s} s^j |ghat(xi0 + s)| over [S, inf).
inline double mode_tail(const VelocityDistribution& d, double xi0, double re, int j, double S) {
  double rate = re - j / std::max(S, 1e-300);
  const double shifted = xi0 + S;
  if (std::holds_alternative<Lorentzian>(d.family())) rate += std::get<Lorentzian>(d.family()).halfwidth;
  else if (const auto* g = std::get_if<Gaussian>(&d.family())) rate += g->stddev * g->stddev * shifted;
  else if (const auto* b = std::get_if<BimodalGaussian>(&d.family())) rate += b->stddev * b->stddev * shifted;
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return std::exp(-re * S) * std::pow(S, j) * d.fourier_envelope(shifted) / rate;
}

}  // namespace detail

/// First-mode value of the generalized eigenvector:
/// (K/2) int_0^inf e^{-lambda s} s^j ghat(xi + s) ds.
inline cplx eigenmode_eval(const VelocityDistribution& dist, double K, cplx lambda, int j, double xi) {
  if (j < 0) throw domain_error("eigenmode: j must be >= 0");
  if (!(xi >= 0.0)) throw domain_error("eigenmode: xi must be >= 0");
  const double amax = dist.analyticity_bound();
  if (!(lambda.real() > -amax) || (amax == 0.0 && !(lambda.real() > 0.0)))
    throw domain_error("eigenmode: Re lambda is outside the strip where the tail converges");
  quad::Options opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-12;
  auto f = [&](double s) {
    const double pw = j == 0 ? 1.0 : std::pow(s, j);
    return std::exp(-lambda * s) * pw * dist.fourier(xi + s);
  };
  auto tail = [&](double S) { return detail::mode_tail(dist, xi, lambda.real(), j, S); };
  return 0.5 * K * quad::integrate_to_infinity(f, 0.0, tail, opt, 0.5).value;
}

/// alpha_{lambda,j}(u1) = int_0^inf u1(t) (-t)^j e^{-lambda t} dt, for u1
/// with |u1(t)| <= scale e^{-decay_rate t}.
inline cplx spectral_functional(const std::function<cplx(double)>& u1, double decay_rate, cplx lambda, int j,
                                double scale = 1.0) {
  if (j < 0) throw domain_error("spectral functional: j must be >= 0");
  const double rate = decay_rate + lambda.real();
  if (!(rate > 0.0)) throw domain_error("spectral functional: integrand does not decay (decay + Re lambda <= 0)");
  quad::Options opt;
  opt.abs_tol = 1e-10;
  opt.rel_tol = 1e-12;
  auto f = [&](double t) {
    const double pw = j == 0 ? 1.0 : std::pow(-t, j);
    return u1(t) * pw * std::exp(-lambda * t);
  };
  auto tail = [&](double S) {
    const double r = rate - j / std::max(S, 1e-300);
    if (r <= 0.0) return std::numeric_limits<double>::infinity();
    return scale * std::exp(-rate * S) * std::pow(S, j) / r;
  };
  return quad::integrate_to_infinity(f, 0.0, tail, opt, 0.5).value;
}

}  // namespace kuramoto::volterra
