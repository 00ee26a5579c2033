#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kuramoto/errors.hpp"

namespace kuramoto {

using cplx = std::complex<double>;

/// Pairwise (cascade) summation over a range of values.
template <class T>
T pairwise_sum(std::span<const T> v) {
  if (v.size() <= 16) {
    T s{};
    for (const auto& x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(std::span<const T>(v.data(), v.size()));
}

namespace quad {

struct Options {
  double abs_tol = 1e-13;
  double rel_tol = 1e-12;
  int max_panels = 4000;
};

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  int panels = 0;
};

namespace detail {

template <class T>
struct Panel {
  double a, b;
  T value;
  double error;
  double roundoff;
  bool operator<(const Panel& o) const { return error < o.error; }
};

inline double mag(double x) { return std::abs(x); }
inline double mag(const cplx& x) { return std::abs(x); }

// Single 21-point Kronrod panel with a QUADPACK-style error estimate.
template <class F>
auto gk21(F& f, double a, double b) {
  using T = std::decay_t<decltype(f(a))>;
  using K = boost::math::quadrature::gauss_kronrod<double, 21>;
  using G = boost::math::quadrature::gauss<double, 10>;
  static const auto& xk = K::abscissa();
  static const auto& wk = K::weights();
  static const auto& wg = G::weights();

  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T fv[21];
  fv[0] = f(c);
  for (int i = 1; i <= 10; ++i) {
    fv[2 * i - 1] = f(c - h * xk[i]);
    fv[2 * i] = f(c + h * xk[i]);
  }
  T rk = wk[0] * fv[0];
  T rg{};
  double abs_k = wk[0] * mag(fv[0]);
  for (int i = 1; i <= 10; ++i) {
    const T pair = fv[2 * i - 1] + fv[2 * i];
    rk += wk[i] * pair;
    abs_k += wk[i] * (mag(fv[2 * i - 1]) + mag(fv[2 * i]));
    if (i % 2 == 1) rg += wg[(i - 1) / 2] * pair;
  }
  const T mean = rk * 0.5;
  double asc = wk[0] * mag(fv[0] - mean);
  for (int i = 1; i <= 10; ++i)
    asc += wk[i] * (mag(fv[2 * i - 1] - mean) + mag(fv[2 * i] - mean));

  double err = mag(rk - rg) * std::abs(h);
  asc *= std::abs(h);
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  const double roundoff = 50.0 * 2.2e-16 * abs_k * std::abs(h);
  return Panel<T>{a, b, T(rk * h), err, roundoff};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature on [a, b]. Stops when the
/// estimated error is below max(abs_tol, rel_tol * |value|); throws
/// numeric_error when the panel budget runs out first.
template <class F>
auto integrate(F&& f, double a, double b, const Options& opt = {}) {
  using T = std::decay_t<decltype(f(a))>;
  if (a == b) return Result<T>{T{}, 0.0, 0};
  if (!std::isfinite(a) || !std::isfinite(b))
    throw domain_error("quadrature bounds must be finite");

  std::priority_queue<detail::Panel<T>> heap;
  heap.push(detail::gk21(f, a, b));
  int panels = 1;
  double roundoff = heap.top().roundoff;
  auto totals = [&]() {
    std::vector<T> vals;
    double err = 0.0;
    roundoff = 0.0;
    auto copy = heap;
    while (!copy.empty()) {
      vals.push_back(copy.top().value);
      err += copy.top().error;
      roundoff += copy.top().roundoff;
      copy.pop();
    }
    return std::pair<T, double>(pairwise_sum(vals), err);
  };

  T value = heap.top().value;
  double err = heap.top().error;
  while (err > std::max({opt.abs_tol, opt.rel_tol * detail::mag(value), roundoff})) {
    if (panels >= opt.max_panels) {
      throw numeric_error("adaptive quadrature did not converge on [" + std::to_string(a) +
                              ", " + std::to_string(b) + "]",
                          err);
    }
    auto worst = heap.top();
    heap.pop();
    const double m = 0.5 * (worst.a + worst.b);
    auto left = detail::gk21(f, worst.a, m);
    auto right = detail::gk21(f, m, worst.b);
    value += (left.value + right.value) - worst.value;
    err += (left.error + right.error) - worst.error;
    roundoff += (left.roundoff + right.roundoff) - worst.roundoff;
    heap.push(left);
    heap.push(right);
    ++panels;
    if (panels % 64 == 0) std::tie(value, err) = totals();
  }
  std::tie(value, err) = totals();
  return Result<T>{value, err, panels};
}

/// Integrates over consecutive breakpoints, splitting the absolute tolerance
/// evenly across pieces.
template <class F>
auto integrate_pieces(F&& f, const std::vector<double>& breaks, const Options& opt = {}) {
  using T = std::decay_t<decltype(f(breaks.front()))>;
  Result<T> total;
  if (breaks.size() < 2) return total;
  Options o = opt;
  o.abs_tol = opt.abs_tol / static_cast<double>(breaks.size() - 1);
  std::vector<T> parts;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    auto r = integrate(f, breaks[i], breaks[i + 1], o);
    parts.push_back(r.value);
    total.error += r.error;
    total.panels += r.panels;
  }
  total.value = pairwise_sum(parts);
  return total;
}

/// Integral over [a, inf). `tail(x)` must bound the integral of |f| over
/// [x, inf); the range is cut once that bound is below a tenth of abs_tol.
/// Pieces grow geometrically from `first_piece`.
template <class F, class Tail>
auto integrate_to_infinity(F&& f, double a, Tail&& tail, const Options& opt = {},
                           double first_piece = 1.0, double max_extent = 1e7) {
  using T = std::decay_t<decltype(f(a))>;
  std::vector<double> breaks{a};
  double len = first_piece;
  double x = a;
  while (true) {
    x += len;
    breaks.push_back(x);
    if (tail(x) < 0.1 * opt.abs_tol) break;
    if (x - a > max_extent)
      throw numeric_error("integrand tail does not decay within the allowed range", tail(x));
    len *= 2.0;
  }
  Result<T> r = integrate_pieces(f, breaks, opt);
  return r;
}

}  // namespace quad
}  // namespace kuramoto
