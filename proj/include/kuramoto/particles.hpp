#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "kuramoto/distributions.hpp"
#include "kuramoto/errors.hpp"
#include "kuramoto/parallel.hpp"
#include "kuramoto/quadrature.hpp"
#include "kuramoto/signal.hpp"

namespace kuramoto::particles {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline double wrap_phase(double x) {
  double y = std::fmod(x, two_pi);
  if (y < 0.0) y += two_pi;
  return y >= two_pi ? 0.0 : y;
}

struct Ensemble {
  std::vector<double> theta;
  std::vector<double> omega;
  double t = 0.0;

  std::size_t size() const { return theta.size(); }
};

enum class Scheme { quantile, random };

struct Sampling {
  Scheme scheme = Scheme::quantile;
  std::uint64_t seed = 0;

  static Sampling quantile() { return {}; }
  static Sampling seeded(std::uint64_t s) { return {Scheme::random, s}; }
};

/// Inverse CDF by bisection, to 1e-10 relative to max(1, |w|).
inline double quantile(const VelocityDistribution& dist, double p) {
  if (!(p > 0.0 && p < 1.0)) throw domain_error("quantile: probability must lie in (0, 1)");
  auto [lo, hi] = dist.support();
  const double width = hi - lo;
  for (int k = 0; dist.cdf(lo) > p; ++k) {
    if (k > 60) throw numeric_error("quantile: lower bracket not found", p);
    lo -= width * std::ldexp(1.0, k);
  }
  for (int k = 0; dist.cdf(hi) < p; ++k) {
    if (k > 60) throw numeric_error("quantile: upper bracket not found", p);
    hi += width * std::ldexp(1.0, k);
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-10 * std::max(1.0, std::abs(mid))) return mid;
    (dist.cdf(mid) < p ? lo : hi) = mid;
  }
  throw numeric_error("quantile: bisection did not converge", hi - lo);
}

/// Quantile scheme: w_i = G^{-1}((i - 1/2)/N). Random scheme: inverse-CDF
/// draws from a seeded mt19937_64.
inline std::vector<double> sample_frequencies(const VelocityDistribution& dist, std::size_t N, Sampling s) {
  if (N < 2) throw domain_error("sample frequencies: N must be >= 2");
  std::vector<double> p(N);
  if (s.scheme == Scheme::quantile) {
    for (std::size_t i = 0; i < N; ++i) p[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(N);
  } else {
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : p) {
      do v = u(rng);
      while (v == 0.0);
    }
  }
  std::vector<double> w(N);
  parallel_for(N, [&](std::size_t i) { w[i] = quantile(dist, p[i]); });
  return w;
}

/// Phases whose empirical first harmonics approximate c_l: x_i from the
/// golden-ratio Kronecker sequence, mapped through the inverse CDF of the
/// phase density (1 + 2 Re sum_l conj(c_l) e^{il theta}) / (2 pi).
inline std::vector<double> matched_phases(std::size_t N, const std::vector<cplx>& c) {
  double mass = 0.0;
  for (const auto& v : c) mass += 2.0 * std::abs(v);
  if (mass > 1.0) throw domain_error("matched phases: sum of 2|c_l| exceeds 1, density would be negative");
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  std::vector<double> theta(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double x = std::fmod(0.5 + g * static_cast<double>(i), 1.0);
    if (c.empty()) {
      theta[i] = two_pi * x;
      continue;
    }
    auto F = [&](double th) {
      // 2 pi (CDF(th) - x) and its derivative
      double f = th - two_pi * x, df = 1.0;
      for (std::size_t l = 1; l <= c.size(); ++l) {
        const cplx cb = std::conj(c[l - 1]);
        const cplx e = std::polar(1.0, static_cast<double>(l) * th);
        f += 2.0 * (cb * (e - 1.0) / cplx(0.0, static_cast<double>(l))).real();
        df += 2.0 * (cb * e).real();
      }
      return std::make_pair(f, df);
    };
    std::uintmax_t iters = 100;
    theta[i] = wrap_phase(boost::math::tools::newton_raphson_iterate(F, two_pi * x, 0.0, two_pi, 50, iters));
  }
  return theta;
}

inline Ensemble matched_ensemble(const VelocityDistribution& dist, std::size_t N, const std::vector<cplx>& c,
                                 Sampling s = {}) {
  Ensemble e;
  e.omega = sample_frequencies(dist, N, s);
  e.theta = matched_phases(N, c);
  return e;
}

/// (1/N) sum_j e^{i theta_j}, pairwise summed.
inline cplx empirical_order_parameter(const std::vector<double>& theta) {
  std::vector<cplx> e(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) e[i] = std::polar(1.0, theta[i]);
  return pairwise_sum(e) / static_cast<double>(theta.size());
}

inline cplx empirical_order_parameter(const Ensemble& ens) { return empirical_order_parameter(ens.theta); }

namespace detail {

// k = w + K Im(eta e^{-i theta}), eta the order parameter of the stage state.
inline void velocity(const std::vector<double>& theta, const std::vector<double>& omega, double K,
                     std::vector<double>& k) {
  const cplx eta = empirical_order_parameter(theta);
  parallel_for(theta.size(), [&](std::size_t i) { k[i] = omega[i] + K * (eta * std::polar(1.0, -theta[i])).imag(); });
}

}  // namespace detail

/// One classical RK4 step of the mean-field form of the finite-N model.
inline void advance(Ensemble& e, double K, double dt) {
  if (!(dt > 0.0)) throw domain_error("ode step: dt must be > 0");
  const std::size_t n = e.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), y(n);
  detail::velocity(e.theta, e.omega, K, k1);
  for (std::size_t i = 0; i < n; ++i) y[i] = e.theta[i] + 0.5 * dt * k1[i];
  detail::velocity(y, e.omega, K, k2);
  for (std::size_t i = 0; i < n; ++i) y[i] = e.theta[i] + 0.5 * dt * k2[i];
  detail::velocity(y, e.omega, K, k3);
  for (std::size_t i = 0; i < n; ++i) y[i] = e.theta[i] + dt * k3[i];
  detail::velocity(y, e.omega, K, k4);
  for (std::size_t i = 0; i < n; ++i)
    e.theta[i] = wrap_phase(e.theta[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
  e.t += dt;
}

inline Ensemble ode_step(const Ensemble& e, double K, double dt) {
  Ensemble next = e;
  advance(next, K, dt);
  return next;
}

/// Integrates ceil(T/dt) steps and records eta_N at every step.
inline SampledSignal run(Ensemble& e, double K, double T, double dt) {
  if (e.size() < 2 || e.omega.size() != e.size()) throw domain_error("particles: need N >= 2 matching phases and frequencies");
  if (!(T >= 0.0) || !(dt > 0.0)) throw domain_error("particles: need T >= 0 and dt > 0");
  for (auto& th : e.theta) th = wrap_phase(th);
  const auto m = static_cast<std::int64_t>(std::ceil(T / dt - 1e-9));
  SampledSignal s{e.t, dt, {}};
  s.values.reserve(static_cast<std::size_t>(m) + 1);
  s.values.push_back(empirical_order_parameter(e));
  for (std::int64_t i = 0; i < m; ++i) {
    advance(e, K, dt);
    s.values.push_back(empirical_order_parameter(e));
  }
  return s;
}

/// Builds the matched ensemble for coefficients c (empty: uniform phases) and runs it.
inline SampledSignal run_particles(const VelocityDistribution& dist, std::size_t N, double K, double T, double dt,
                                   Sampling s = {}, const std::vector<cplx>& c = {}) {
  auto e = matched_ensemble(dist, N, c, s);
  return run(e, K, T, dt);
}

}  // namespace kuramoto::particles
