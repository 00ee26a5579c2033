#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "kuramoto/distributions.hpp"
#include "kuramoto/errors.hpp"
#include "kuramoto/penrose.hpp"
#include "kuramoto/quadrature.hpp"
#include "kuramoto/signal.hpp"

namespace kuramoto::meanfield {

struct StepOptions {
  int corrector_passes = 1;  // 1 = Heun
};

/// Fourier modes u(l, xi_j), l = 1..l_max, xi_j = j h, j = 0..n_xi, of the
/// perturbed density, together with the data needed for the inflow closure.
class SpectralState {
 public:
  double h = 0.0;
  int n_xi = 0;
  int l_max = 0;
  double t = 0.0;
  std::int64_t steps = 0;
  std::vector<cplx> u;             // row-major (l-1, j)
  std::vector<cplx> coefficients;  // c_1, c_2, ...
  std::shared_ptr<const VelocityDistribution> dist;
  std::shared_ptr<const std::vector<cplx>> ghat;  // ghat(xi_j)
  double max_abs_u = 0.0;  // clamp monitor: largest |u| seen
  std::int64_t clamp_violations = 0;

  std::size_t row() const { return static_cast<std::size_t>(n_xi) + 1; }
  cplx& at(int l, int j) { return u[static_cast<std::size_t>(l - 1) * row() + static_cast<std::size_t>(j)]; }
  const cplx& at(int l, int j) const {
    return u[static_cast<std::size_t>(l - 1) * row() + static_cast<std::size_t>(j)];
  }
  cplx eta() const { return at(1, 0); }
  double xi_max() const { return h * n_xi; }
  double truncation_monitor() const {
    double m = 0.0;
    for (int j = 0; j <= n_xi; ++j) m = std::max(m, std::abs(at(l_max, j)));
    return m;
  }
  /// Freely transported initial datum, used for cells fed from beyond xi_max.
  cplx inflow(int l, double xi) const {
    if (l > static_cast<int>(coefficients.size())) return 0.0;
    const cplx c = coefficients[static_cast<std::size_t>(l - 1)];
    return c == 0.0 ? cplx(0.0) : c * dist->fourier(xi);
  }
};

struct OrderParameterTrace {
  SampledSignal eta;
  std::vector<double> truncation;  // sup_j |u(l_max, j)| after each step (index 0: initial)
  double max_abs_u = 0.0;
};

/// u(l, xi) = c_l ghat(xi): the density g(w)(1 + sum_l 2 Re(conj(c_l) e^{il theta}))/(2 pi).
inline SpectralState init_state(const VelocityDistribution& dist, const std::vector<cplx>& c, double h,
                                double xi_max, int l_max) {
  if (!(h > 0.0) || !(xi_max > 0.0)) throw domain_error("init state: need h > 0 and xi_max > 0");
  if (l_max < static_cast<int>(c.size()) + 2) throw domain_error("init state: l_max must be >= len(c) + 2");
  double s = 0.0;
  for (const auto& v : c) {
    if (std::abs(v) > 1.0) throw domain_error("init state: |c_l| must be <= 1");
    s += 2.0 * std::abs(v);
  }
  if (s > 1.0) throw domain_error("init state: sum of 2|c_l| exceeds 1, density would be negative");
  SpectralState st;
  st.h = h;
  st.n_xi = static_cast<int>(std::lround(xi_max / h));
  if (st.n_xi < 1) throw domain_error("init state: grid needs at least one cell");
  st.l_max = l_max;
  st.coefficients = c;
  st.dist = std::make_shared<const VelocityDistribution>(dist);
  auto gh = std::make_shared<std::vector<cplx>>(st.row());
  for (int j = 0; j <= st.n_xi; ++j) (*gh)[static_cast<std::size_t>(j)] = dist.fourier(h * j);
  st.ghat = gh;
  st.u.assign(static_cast<std::size_t>(l_max) * st.row(), 0.0);
  for (int l = 1; l <= static_cast<int>(c.size()); ++l)
    for (int j = 0; j <= st.n_xi; ++j) st.at(l, j) = c[static_cast<std::size_t>(l - 1)] * (*gh)[static_cast<std::size_t>(j)];
  for (const auto& v : st.u) st.max_abs_u = std::max(st.max_abs_u, std::abs(v));
  return st;
}

namespace detail {

// (K l / 2) [eta u(l-1, j) - conj(eta) u(l+1, j)], with u(0) = ghat and u(l_max+1) = 0.
inline cplx interaction(const SpectralState& s, const std::vector<cplx>& u, cplx eta, double K, int l, int j) {
  const std::size_t row = s.row();
  const cplx lower = l == 1 ? (*s.ghat)[static_cast<std::size_t>(j)]
                            : u[static_cast<std::size_t>(l - 2) * row + static_cast<std::size_t>(j)];
  const cplx upper = l == s.l_max ? cplx(0.0) : u[static_cast<std::size_t>(l) * row + static_cast<std::size_t>(j)];
  return 0.5 * K * l * (eta * lower - std::conj(eta) * upper);
}

}  // namespace detail

/// Advances the state by one step of size h in place: mode l is shifted by l
/// cells along its characteristic, the coupling term is integrated with
/// Heun's rule, and cells fed from beyond xi_max take the inflow closure.
inline void advance(SpectralState& s, double K, const StepOptions& opt = {}) {
  const int n = s.n_xi;
  const std::size_t row = s.row();
  const double h = s.h;
  const double t_new = h * static_cast<double>(s.steps + 1);
  const cplx eta_n = s.eta();

  std::vector<cplx> base(s.u.size()), pred(s.u.size());
  for (int l = 1; l <= s.l_max; ++l) {
    const std::size_t off = static_cast<std::size_t>(l - 1) * row;
    for (int j = 0; j <= n; ++j) {
      const std::size_t idx = off + static_cast<std::size_t>(j);
      const int src = j + l;
      if (src <= n) {
        const cplx a = K == 0.0 ? cplx(0.0) : detail::interaction(s, s.u, eta_n, K, l, src);
        base[idx] = s.u[off + static_cast<std::size_t>(src)] + 0.5 * h * a;
        pred[idx] = s.u[off + static_cast<std::size_t>(src)] + h * a;
      } else {
        base[idx] = pred[idx] = s.inflow(l, h * j + l * t_new);
      }
    }
  }
  if (K != 0.0) {
    std::vector<cplx> next(s.u.size());
    for (int pass = 0; pass < opt.corrector_passes; ++pass) {
      const cplx eta_p = pred[0];
      for (int l = 1; l <= s.l_max; ++l) {
        const std::size_t off = static_cast<std::size_t>(l - 1) * row;
        for (int j = 0; j <= n; ++j) {
          const std::size_t idx = off + static_cast<std::size_t>(j);
          next[idx] = j + l <= n ? base[idx] + 0.5 * h * detail::interaction(s, pred, eta_p, K, l, j) : base[idx];
        }
      }
      pred.swap(next);
    }
  }
  s.u.swap(pred);
  s.steps += 1;
  s.t = t_new;
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    const double a = std::abs(s.u[i]);
    if (!std::isfinite(a))
      throw numeric_error("mean-field step: non-finite value at step " + std::to_string(s.steps),
                          static_cast<double>(s.steps));
    if (a > s.max_abs_u) s.max_abs_u = a;
    if (a > 1.0 + 1e-6) ++s.clamp_violations;
  }
}

/// Functional form of advance.
inline SpectralState step(const SpectralState& state, double K, const StepOptions& opt = {}) {
  SpectralState next = state;
  advance(next, K, opt);
  return next;
}

/// Runs ceil(T/h) steps, recording eta and the truncation monitor after each.
inline OrderParameterTrace run(SpectralState& s, double K, double T, const StepOptions& opt = {},
                               const std::function<void(const SpectralState&)>& observer = {}) {
  if (!(T >= 0.0)) throw domain_error("run: horizon must be >= 0");
  const auto m = static_cast<std::int64_t>(std::ceil(T / s.h - 1e-9));
  OrderParameterTrace tr;
  tr.eta.t0 = s.t;
  tr.eta.dt = s.h;
  tr.eta.values.reserve(static_cast<std::size_t>(m) + 1);
  tr.eta.values.push_back(s.eta());
  tr.truncation.push_back(s.truncation_monitor());
  if (observer) observer(s);
  for (std::int64_t i = 0; i < m; ++i) {
    advance(s, K, opt);
    tr.eta.values.push_back(s.eta());
    tr.truncation.push_back(s.truncation_monitor());
    if (observer) observer(s);
  }
  tr.max_abs_u = s.max_abs_u;
  return tr;
}

// ---------------------------------------------------------------------------
// Energy functional.

/// phi(xi) = A / (A - int_0^xi (|ghat| + e^{-gamma z}) dz) with contraction
/// constant alpha = (K^2/4) A int_0^inf |ghat|^2 / (|ghat| + e^{-gamma xi}).
class EnergyWeight {
 public:
  double A_bar = 1.0;
  double gamma_bar = 1.0;
  double alpha = 0.0;
  double c() const { return 1.0 - alpha; }
  bool unit() const { return table_.empty(); }

  static EnergyWeight unit_weight() { return {}; }

  double phi(double xi) const {
    if (unit()) return 1.0;
    if (xi < 0.0) throw domain_error("energy weight: xi must be >= 0");
    if (xi > extent_) throw domain_error("energy weight: xi beyond the tabulated extent");
    const auto k = static_cast<std::size_t>(xi / spacing_);
    const double lo = spacing_ * static_cast<double>(k);
    double g = table_[std::min(k, table_.size() - 1)];
    if (xi > lo) g += cell_integral(lo, xi);
    return A_bar / (A_bar - g);
  }

  double extent() const { return extent_; }

  friend EnergyWeight build_energy_weight(const VelocityDistribution&, double, double);

 private:
  std::shared_ptr<const VelocityDistribution> dist_;
  std::vector<double> table_;  // cumulative integral at multiples of spacing_
  double spacing_ = 1.0 / 128;
  double extent_ = 0.0;

  double cell_integral(double a, double b) const {
    using GL = boost::math::quadrature::gauss<double, 20>;
    auto f = [&](double z) { return std::abs(dist_->fourier(z)) + std::exp(-gamma_bar * z); };
    return GL::integrate(f, a, b);
  }
};

/// Searches gamma in {2^0..2^10} and A = (1 + 2^-m)(1/gamma + int|ghat|),
/// m = 1..20, for the smallest alpha. Requires K below the energy-critical
/// coupling; `extent` is the largest xi at which phi will be evaluated.
inline EnergyWeight build_energy_weight(const VelocityDistribution& dist, double K, double extent = 64.0) {
  if (!(K >= 0.0)) throw domain_error("energy weight: K must be >= 0");
  const double kec = penrose::energy_critical_coupling(dist);
  if (!(K < kec)) throw domain_error("energy weight: K must be below the energy-critical coupling " + std::to_string(kec));
  const double S = 2.0 / kec;  // int_0^inf |ghat|

  // Truncation point where |ghat| is negligible; the remaining part of the
  // alpha integrand equals |ghat| there, so the tail of S is added back.
  double cut = 40.0;
  if (const auto* g = std::get_if<Gaussian>(&dist.family())) cut = std::sqrt(80.0) / g->stddev;
  else if (const auto* b = std::get_if<BimodalGaussian>(&dist.family())) cut = std::sqrt(80.0) / b->stddev;
  else if (const auto* l = std::get_if<Lorentzian>(&dist.family())) cut = 40.0 / l->halfwidth;
  else cut = 64.0 / dist.scale();
  quad::Options opt;
  opt.abs_tol = 1e-12;
  opt.max_panels = 20000;
  std::vector<double> br;
  for (double x = 0.0; x < cut; x += 0.5) br.push_back(x);
  br.push_back(cut);
  const double head = quad::integrate_pieces([&](double x) { return std::abs(dist.fourier(x)); }, br, opt).value;
  const double tail = std::max(0.0, S - head);

  EnergyWeight best;
  best.alpha = std::numeric_limits<double>::infinity();
  for (int e = 0; e <= 10; ++e) {
    const double gamma = std::ldexp(1.0, e);
    auto integrand = [&](double x) {
      const double a = std::abs(dist.fourier(x));
      return a * a / (a + std::exp(-gamma * x));
    };
    const double J = quad::integrate_pieces(integrand, br, opt).value + tail;
    for (int m = 1; m <= 20; ++m) {
      const double A = (1.0 + std::ldexp(1.0, -m)) * (1.0 / gamma + S);
      const double alpha = 0.25 * K * K * A * J;
      if (alpha < best.alpha) {
        best.alpha = alpha;
        best.A_bar = A;
        best.gamma_bar = gamma;
      }
    }
  }
  if (!(best.alpha < 1.0))
    throw numeric_error("energy weight: no admissible pair with alpha < 1", best.alpha);

  best.dist_ = std::make_shared<const VelocityDistribution>(dist);
  best.extent_ = extent;
  const auto cells = static_cast<std::size_t>(std::ceil(extent / best.spacing_));
  best.table_.assign(cells + 1, 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < cells; ++k) {
    acc += best.cell_integral(best.spacing_ * k, best.spacing_ * (k + 1));
    best.table_[k + 1] = acc;
  }
  return best;
}

/// I = sum_l (1/l) int_0^xi_max |u(l, xi)|^2 phi(xi) dxi (trapezoid rule).
inline double energy_functional(const SpectralState& s, const EnergyWeight& w) {
  std::vector<double> phi(s.row());
  for (int j = 0; j <= s.n_xi; ++j) phi[static_cast<std::size_t>(j)] = w.phi(s.h * j);
  std::vector<double> modes(static_cast<std::size_t>(s.l_max));
  std::vector<double> cells(s.row());
  for (int l = 1; l <= s.l_max; ++l) {
    for (int j = 0; j <= s.n_xi; ++j) {
      const double wt = (j == 0 || j == s.n_xi) ? 0.5 : 1.0;
      cells[static_cast<std::size_t>(j)] = wt * std::norm(s.at(l, j)) * phi[static_cast<std::size_t>(j)];
    }
    modes[static_cast<std::size_t>(l - 1)] = s.h * pairwise_sum(cells) / l;
  }
  return pairwise_sum(modes);
}

// ---------------------------------------------------------------------------

enum class DecayModel { exponential, algebraic };

struct DecayFit {
  double rate = 0.0;  // decay rate (exponential) or power (algebraic)
  double r_squared = 0.0;
  std::size_t samples = 0;
};

/// Least-squares fit of log|eta| against t or log t on [t1, t2].
inline DecayFit decay_fit(const SampledSignal& eta, double t1, double t2, DecayModel model) {
  if (!(t2 > t1)) throw domain_error("decay fit: empty window");
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < eta.size(); ++j) {
    const double t = eta.time(j);
    if (t < t1 - 1e-12 || t > t2 + 1e-12) continue;
    const double a = std::abs(eta.values[j]);
    if (!(a > 1e-14))
      throw numeric_error("decay fit: |eta| underflows 1e-14 at t = " + std::to_string(t) +
                              "; use a shorter window",
                          a);
    if (model == DecayModel::algebraic && !(t > 0.0)) throw domain_error("decay fit: algebraic model needs t > 0");
    xs.push_back(model == DecayModel::exponential ? t : std::log(t));
    ys.push_back(std::log(a));
  }
  if (xs.size() < 3) throw domain_error("decay fit: fewer than 3 samples in the window");
  const double n = static_cast<double>(xs.size());
  const double mx = pairwise_sum(xs) / n, my = pairwise_sum(ys) / n;
  std::vector<double> sxy(xs.size()), sxx(xs.size()), syy(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy[i] = (xs[i] - mx) * (ys[i] - my);
    sxx[i] = (xs[i] - mx) * (xs[i] - mx);
    syy[i] = (ys[i] - my) * (ys[i] - my);
  }
  const double cxy = pairwise_sum(sxy), cxx = pairwise_sum(sxx), cyy = pairwise_sum(syy);
  DecayFit f;
  f.rate = -cxy / cxx;
  f.r_squared = cyy == 0.0 ? 1.0 : (cxy * cxy) / (cxx * cyy);
  f.samples = xs.size();
  return f;
}

}  // namespace kuramoto::meanfield
