#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "kuramoto/errors.hpp"
#include "kuramoto/quadrature.hpp"

namespace kuramoto {

/// Complex samples v_j at times t0 + j dt.
struct SampledSignal {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<cplx> values;

  std::size_t size() const { return values.size(); }
  double time(std::size_t j) const { return t0 + dt * static_cast<double>(j); }
  double max_abs() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
  }

  void validate(const std::string& what) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw domain_error(what + ": time step must be positive");
    if (values.empty()) throw domain_error(what + ": signal is empty");
    for (std::size_t j = 0; j < values.size(); ++j)
      if (!std::isfinite(values[j].real()) || !std::isfinite(values[j].imag()))
        throw numeric_error(what + ": non-finite sample at index " + std::to_string(j),
                            static_cast<double>(j));
  }
};

/// Trapezoidal product-integration value of (a * b)(t_n) on a shared grid.
inline cplx trapezoid_convolution_at(const SampledSignal& a, const SampledSignal& b, std::size_t n) {
  if (n == 0) return 0.0;
  std::vector<cplx> terms(n + 1);
  terms[0] = 0.5 * a.values[0] * b.values[n];
  terms[n] = 0.5 * a.values[n] * b.values[0];
  for (std::size_t j = 1; j < n; ++j) terms[j] = a.values[j] * b.values[n - j];
  return a.dt * pairwise_sum(terms);
}

}  // namespace kuramoto
