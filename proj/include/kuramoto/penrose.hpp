#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "kuramoto/distributions.hpp"
#include "kuramoto/errors.hpp"
#include "kuramoto/parallel.hpp"
#include "kuramoto/quadrature.hpp"

namespace kuramoto::penrose {

struct CurveSample {
  double x;
  cplx w;  // Lghat(i x)
};

struct CurveOptions {
  double closure = 1e-4;            // required |w| at both ends
  double max_extent_scales = 1 << 20;  // widening cap, in units of dist.scale()
  int samples_per_octave = 64;      // tail sampling density while widening
};

/// Samples of the boundary curve x -> Lghat(ix), ordered by x. The uniform
/// core covers [-core_extent, core_extent]; geometric tails extend it to
/// [-extent, extent], where both ends are within closure_tolerance of 0.
struct PenroseCurve {
  VelocityDistribution dist;
  std::vector<CurveSample> samples;
  double core_extent = 0.0;
  double extent = 0.0;
  double closure_tolerance = 0.0;
  double endpoint_magnitude = 0.0;
};

struct StabilityReport {
  double coupling = 0.0;
  int winding_count = 0;
  bool stable = true;
  std::optional<double> penrose_critical;  // empty: no instability below the cap
  double energy_critical = 0.0;
  double sufficient_bound = 0.0;
};

struct RealCrossing {
  double x;
  double value;  // real part of the curve where it meets the real axis
};

struct CriticalSearch {
  double k_min = 1e-3;
  double k_max = 1e3;
  double k_cap = 1e6;
};

struct CriticalCoupling {
  std::optional<double> value;
  std::vector<RealCrossing> crossings;
  bool beyond_bracket = false;  // K_c exists but exceeds k_max (still below cap)
};

/// Samples Lghat(ix) on n+1 uniform points of [-X, X] (X raised to at least
/// |center| + 8 scale) and widens the range by octaves until both ends are
/// within opts.closure of 0.
inline PenroseCurve boundary_curve(const VelocityDistribution& dist, double X, int n,
                                   const CurveOptions& opts = {}) {
  if (!(X > 0.0) || !std::isfinite(X)) throw domain_error("boundary curve: extent must be positive");
  if (n < 64) throw domain_error("boundary curve: need at least 64 samples");
  PenroseCurve c{dist, {}, 0.0, 0.0, opts.closure, 0.0};
  const double s = dist.scale();
  const double core = std::max(X, std::abs(dist.center()) + 8.0 * s);
  c.core_extent = core;

  std::vector<double> xs(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) xs[j] = -core + 2.0 * core * j / n;
  xs[n / 2] = (n % 2 == 0) ? 0.0 : xs[n / 2];
  std::vector<cplx> ws(xs.size());
  parallel_for(xs.size(), [&](std::size_t j) { ws[j] = dist.laplace(cplx(0.0, xs[j])); });

  std::vector<double> left_x, right_x;
  std::vector<cplx> left_w, right_w;
  double reach = core;
  const double cap = opts.max_extent_scales * s + std::abs(dist.center());
  const double ratio = std::exp2(1.0 / opts.samples_per_octave);
  auto ends_closed = [&]() {
    const cplx lw = left_w.empty() ? ws.front() : left_w.back();
    const cplx rw = right_w.empty() ? ws.back() : right_w.back();
    c.endpoint_magnitude = std::max(std::abs(lw), std::abs(rw));
    return c.endpoint_magnitude < opts.closure;
  };
  while (!ends_closed()) {
    if (reach >= cap) {
      throw numeric_error("boundary curve: endpoint closure not reached within extent " +
                              std::to_string(reach),
                          c.endpoint_magnitude);
    }
    std::vector<double> octave;
    double x = reach;
    for (int k = 0; k < opts.samples_per_octave; ++k) {
      x *= ratio;
      octave.push_back(x);
    }
    std::vector<cplx> lw(octave.size()), rw(octave.size());
    parallel_for(octave.size(), [&](std::size_t k) {
      rw[k] = dist.laplace(cplx(0.0, octave[k]));
      lw[k] = dist.laplace(cplx(0.0, -octave[k]));
    });
    for (std::size_t k = 0; k < octave.size(); ++k) {
      right_x.push_back(octave[k]);
      right_w.push_back(rw[k]);
      left_x.push_back(-octave[k]);
      left_w.push_back(lw[k]);
    }
    reach = x;
  }
  c.extent = reach;
  c.samples.reserve(xs.size() + 2 * left_x.size());
  for (std::size_t k = left_x.size(); k-- > 0;) c.samples.push_back({left_x[k], left_w[k]});
  for (std::size_t j = 0; j < xs.size(); ++j) c.samples.push_back({xs[j], ws[j]});
  for (std::size_t k = 0; k < right_x.size(); ++k) c.samples.push_back({right_x[k], right_w[k]});
  return c;
}

namespace detail {

constexpr double kDegenerate = 1e-9;

inline double arg_step(cplx from, cplx to, cplx p) { return std::arg((to - p) / (from - p)); }

// Argument increment along the curve between two samples, subdividing until
// every step is below pi/2.
inline double refined_step(const VelocityDistribution& d, double xa, cplx wa, double xb, cplx wb, cplx p,
                           int depth) {
  const double step = arg_step(wa, wb, p);
  if (std::abs(step) <= std::numbers::pi / 2) return step;
  if (depth > 40 || xb - xa < 1e-13 * (1.0 + std::abs(xa)))
    throw numeric_error("winding count: curve refinement did not resolve the argument", step);
  const double xm = 0.5 * (xa + xb);
  const cplx wm = d.laplace(cplx(0.0, xm));
  if (std::abs(wm - p) < kDegenerate)
    throw degenerate_error("winding count: 2/K lies on the boundary curve", std::abs(wm - p));
  return refined_step(d, xa, wa, xm, wm, p, depth + 1) + refined_step(d, xm, wm, xb, wb, p, depth + 1);
}

}  // namespace detail

/// Number of times the closed curve (samples in increasing x, closed through
/// 0) encircles 2/K. The curve runs clockwise around enclosed points, so the
/// count equals the number of roots of 1 - (K/2) Lghat(z) in Re z > 0.
inline int winding_count(const PenroseCurve& curve, double K) {
  if (!(K > 0.0) || !std::isfinite(K)) throw domain_error("winding count: K must be positive");
  const cplx p(2.0 / K, 0.0);
  const auto& s = curve.samples;
  if (s.size() < 2) throw domain_error("winding count: curve has too few samples");
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& smp : s) closest = std::min(closest, std::abs(smp.w - p));
  if (closest < detail::kDegenerate)
    throw degenerate_error("winding count: 2/K lies on the boundary curve", closest);

  std::vector<double> steps(s.size() + 1);
  for (std::size_t j = 0; j + 1 < s.size(); ++j)
    steps[j] = detail::refined_step(curve.dist, s[j].x, s[j].w, s[j + 1].x, s[j + 1].w, p, 0);
  // Closing legs are straight segments through the origin.
  steps[s.size() - 1] = detail::arg_step(s.back().w, 0.0, p);
  steps[s.size()] = detail::arg_step(0.0, s.front().w, p);
  const double total = pairwise_sum(steps);
  return -static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

/// Points where the curve meets the positive real axis, located by
/// bracketing sign changes of Im w and refining with TOMS 748.
inline std::vector<RealCrossing> real_crossings(const PenroseCurve& curve) {
  std::vector<RealCrossing> out;
  const auto& s = curve.samples;
  auto im_at = [&](double x) { return curve.dist.laplace(cplx(0.0, x)).imag(); };
  auto sign = [](double v) { return (v > 0) - (v < 0); };
  for (std::size_t j = 0; j + 1 < s.size(); ++j) {
    const double a = s[j].w.imag(), b = s[j + 1].w.imag();
    if (a == 0.0) {
      if (j > 0 && sign(s[j - 1].w.imag()) * sign(b) < 0) out.push_back({s[j].x, s[j].w.real()});
      continue;
    }
    if (b == 0.0 || sign(a) * sign(b) > 0) continue;
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(im_at, s[j].x, s[j + 1].x, a, b,
                                                     boost::math::tools::eps_tolerance<double>(52), iters);
    const double x = 0.5 * (r.first + r.second);
    out.push_back({x, curve.dist.laplace(cplx(0.0, x)).real()});
  }
  return out;
}

/// Onset coupling of linear instability: 2 divided by the largest positive
/// real-axis crossing of the boundary curve. Empty when there is none or
/// when it lies above the search cap.
inline CriticalCoupling critical_coupling(const VelocityDistribution& dist, const CriticalSearch& search = {},
                                          int n = 2048) {
  const auto curve = boundary_curve(dist, 8.0 * dist.scale(), n);
  CriticalCoupling out;
  out.crossings = real_crossings(curve);
  double best = 0.0;
  for (const auto& c : out.crossings) best = std::max(best, c.value);
  if (best <= 0.0) return out;
  const double k = 2.0 / best;
  if (k > search.k_cap || k < 0.0) return out;
  out.value = k;
  out.beyond_bracket = k > search.k_max || k < search.k_min;
  return out;
}

/// 2 / int_0^inf |ghat(xi)| dxi.
inline double energy_critical_coupling(const VelocityDistribution& dist) {
  quad::Options opt;
  opt.abs_tol = 1e-11;
  opt.rel_tol = 1e-13;
  auto f = [&](double xi) { return std::abs(dist.fourier(xi)); };

  if (const auto* b = std::get_if<BimodalGaussian>(&dist.family())) {
    const double xmax = std::sqrt(80.0) / b->stddev;
    std::vector<double> br{0.0};
    const double w0 = std::abs(b->offset);
    if (w0 > 0.0)
      for (double z = 0.5 * std::numbers::pi / w0; z < xmax; z += std::numbers::pi / w0) br.push_back(z);
    br.push_back(xmax);
    return 2.0 / quad::integrate_pieces(f, br, opt).value;
  }
  if (const auto* g = std::get_if<Gaussian>(&dist.family()))
    return 2.0 / quad::integrate(f, 0.0, std::sqrt(80.0) / g->stddev, opt).value;
  if (const auto* l = std::get_if<Lorentzian>(&dist.family()))
    return 2.0 / quad::integrate_to_infinity(
                     f, 0.0, [&](double x) { return std::exp(-l->halfwidth * x) / l->halfwidth; }, opt,
                     1.0 / l->halfwidth)
                     .value;

  // Tabulated: the transform of the interpolant tracks the true one only
  // while xi * dw stays small. Integrate by octaves up to xi = 0.25 / dw and
  // extrapolate the algebraic tail from the ratio of the last two octaves.
  const auto& tab = std::get<Tabulated>(dist.family());
  double dw_max = 0.0;
  for (std::size_t i = 0; i + 1 < tab.omega().size(); ++i)
    dw_max = std::max(dw_max, tab.omega()[i + 1] - tab.omega()[i]);
  const double xi_limit = 0.25 / dw_max;
  opt.abs_tol = 1e-12;
  opt.rel_tol = 1e-10;
  opt.max_panels = 20000;
  double lo = std::min(1.0 / dist.scale(), xi_limit / 4.0);
  double total = quad::integrate(f, 0.0, lo, opt).value;
  double prev_piece = 0.0, piece = 0.0;
  int octaves = 0;
  while (2.0 * lo <= xi_limit) {
    prev_piece = piece;
    piece = quad::integrate(f, lo, 2.0 * lo, opt).value;
    total += piece;
    lo *= 2.0;
    ++octaves;
    if (octaves >= 2 && piece < 1e-13 * total) return 2.0 / total;
  }
  if (octaves < 2 || prev_piece <= 0.0)
    throw numeric_error("energy critical coupling: table too coarse to resolve the tail of |ghat|", total);
  const double rho = piece / prev_piece;
  if (rho >= std::exp2(-0.05))
    throw domain_error("energy critical coupling: |ghat| is not integrable (tail decays like xi^-p, p <= 1.05)");
  return 2.0 / (total + piece * rho / (1.0 - rho));
}

/// Linear-stability summary for coupling K.
inline StabilityReport analyze(const VelocityDistribution& dist, double K, double X = 0.0, int n = 2048,
                               const CriticalSearch& search = {}) {
  if (X <= 0.0) X = 8.0 * dist.scale();
  StabilityReport r;
  r.coupling = K;
  const auto curve = boundary_curve(dist, X, n);
  r.winding_count = winding_count(curve, K);
  r.stable = r.winding_count == 0;
  r.penrose_critical = critical_coupling(dist, search, n).value;
  r.energy_critical = energy_critical_coupling(dist);
  r.sufficient_bound = 2.0 / (std::numbers::pi * dist.sup_density());
  return r;
}

}  // namespace kuramoto::penrose
