#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kuramoto/errors.hpp"
#include "kuramoto/quadrature.hpp"

namespace kuramoto {

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

struct Lorentzian {
  double center = 0.0;
  double halfwidth = 1.0;
};

/// Equal-weight mixture of N(-offset, stddev^2) and N(+offset, stddev^2).
struct BimodalGaussian {
  double offset = 1.5;
  double stddev = 1.0;
};

/// Density given by samples on an increasing grid and interpreted as the
/// piecewise-linear interpolant (zero outside the grid). All transforms are
/// exact transforms of that interpolant.
class Tabulated {
 public:
  Tabulated(std::vector<double> omega, std::vector<double> density);

  const std::vector<double>& omega() const { return t_->omega; }
  const std::vector<double>& density() const { return t_->g; }
  double raw_mass() const { return t_->raw_mass; }
  double mean() const { return t_->mean; }
  double radius() const { return t_->radius; }
  double sup() const { return t_->sup; }

  double eval(double w) const;
  cplx fourier(double xi) const;
  cplx laplace(cplx z) const;
  cplx laplace_derivative(cplx z) const;
  double cdf(double w) const;

 private:
  struct Table {
    std::vector<double> omega, g, slope, cum;
    std::vector<double> moments;  // central moments scaled by radius^k
    double raw_mass = 1.0, mean = 0.0, radius = 1.0, sup = 0.0;
    double uniform_step = 0.0;  // nonzero when the grid is uniform
  };
  std::shared_ptr<const Table> t_;

  cplx multipole(cplx z, int derivative) const;
};

/// Velocity distribution g together with its Fourier transform
/// ghat(xi) = int e^{i xi w} g(w) dw and the Laplace transform of ghat.
class VelocityDistribution {
 public:
  using Family = std::variant<Gaussian, Lorentzian, BimodalGaussian, Tabulated>;

  explicit VelocityDistribution(Family f);

  static VelocityDistribution gaussian(double mean = 0.0, double stddev = 1.0) {
    return VelocityDistribution(Gaussian{mean, stddev});
  }
  static VelocityDistribution lorentzian(double center = 0.0, double halfwidth = 1.0) {
    return VelocityDistribution(Lorentzian{center, halfwidth});
  }
  static VelocityDistribution bimodal(double offset, double stddev = 1.0) {
    return VelocityDistribution(BimodalGaussian{offset, stddev});
  }
  static VelocityDistribution tabulated(std::vector<double> omega, std::vector<double> g) {
    return VelocityDistribution(Tabulated(std::move(omega), std::move(g)));
  }

  const Family& family() const { return family_; }
  std::string name() const;
  bool has_closed_fourier() const { return !std::holds_alternative<Tabulated>(family_); }

  double density(double w) const;
  cplx fourier(double xi) const;
  /// Laplace transform of ghat at z, Re z > -analyticity_bound(). On the
  /// imaginary axis this is the boundary value from the right half-plane.
  cplx laplace(cplx z) const;
  /// d/dz of laplace(z).
  cplx laplace_derivative(cplx z) const;
  double cdf(double w) const;

  /// Exponential decay rate of ghat (infinite for Gaussian shapes).
  double analyticity_bound() const;
  /// Upper bound for |ghat(xi)|, used to truncate integrals in xi.
  double fourier_envelope(double xi) const;
  double center() const;
  double scale() const;
  double sup_density() const;
  /// Interval outside which the density is negligible (below ~1e-300 for
  /// Gaussian shapes); Lorentzian returns a window of 40 halfwidths.
  std::pair<double, double> support() const;
  bool symmetric_unimodal() const;
  /// Mass of the density by quadrature over the effective support.
  double total_mass() const;

 private:
  Family family_;
};

inline double density_eval(const VelocityDistribution& d, double w) { return d.density(w); }
inline cplx fourier_eval(const VelocityDistribution& d, double xi) { return d.fourier(xi); }
inline cplx laplace_eval(const VelocityDistribution& d, cplx z) { return d.laplace(z); }

/// Boundary value of the Laplace transform on the imaginary axis computed
/// from the density alone: pi g(x) + i PV int g(x+w)/w dw. The principal
/// value uses a symmetric excision radius h with Richardson extrapolation.
cplx plemelj_boundary_value(const VelocityDistribution& d, double x, double h = 1e-3);

/// Reads a two-column table with header `omega,density`.
Tabulated read_tabulated_csv(std::istream& in);
Tabulated read_tabulated_csv(const std::string& path);

// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

inline double gaussian_pdf(double w, double mu, double s) {
  const double u = (w - mu) / s;
  return kInvSqrt2Pi / s * std::exp(-0.5 * u * u);
}

inline cplx gaussian_fourier(double xi, double mu, double s) {
  return std::exp(cplx(-0.5 * s * s * xi * xi, mu * xi));
}

// Laplace transform of ghat for N(mu, s^2) and its derivative.
inline cplx gaussian_laplace(cplx z, double mu, double s, int derivative) {
  const double x = z.real();
  const double y = z.imag();
  quad::Options opt;
  opt.abs_tol = 1e-14;
  opt.rel_tol = 1e-13;
  if (x >= 0.0 && std::abs(y - mu) > 15.0 * s) {
    // Far from the bulk the density form is smooth and short.
    auto f = [&](double w) {
      const cplx d = z - cplx(0.0, w);
      const double g = gaussian_pdf(w, mu, s);
      return derivative == 0 ? cplx(g) / d : -cplx(g) / (d * d);
    };
    return quad::integrate(f, mu - 12.0 * s, mu + 12.0 * s, opt).value;
  }
  // e^{-s^2 xi^2/2 - x xi} < e^{-40} beyond xi_max.
  const double xi_max = (-x + std::sqrt(x * x + 80.0 * s * s)) / (s * s);
  const cplx shift(-x, mu - y);
  auto f = [&](double xi) {
    const cplx e = std::exp(cplx(-0.5 * s * s * xi * xi) + shift * xi);
    return derivative == 0 ? e : -xi * e;
  };
  if (x < 0.0) opt.abs_tol = 1e-14 * std::exp(0.5 * x * x / (s * s));
  const int pieces = std::max(1, static_cast<int>(std::ceil(xi_max * (std::abs(y - mu) + 1.0) / 20.0)));
  std::vector<double> br;
  for (int i = 0; i <= pieces; ++i) br.push_back(xi_max * i / pieces);
  return quad::integrate_pieces(f, br, opt).value;
}

inline double gaussian_cdf(double w, double mu, double s) {
  return 0.5 * std::erfc(-(w - mu) / (s * std::numbers::sqrt2));
}

// exp(i t) - 1 over i t and int_0^1 u e^{i t u} du, with series near 0.
inline std::pair<cplx, cplx> segment_kernels(double t) {
  if (std::abs(t) < 0.5) {
    cplx e0 = 0.0, e1 = 0.0;
    cplx p = 1.0;  // (i t)^k / k!
    for (int k = 0; k < 18; ++k) {
      e0 += p / static_cast<double>(k + 1);
      e1 += p / static_cast<double>(k + 2);
      p *= cplx(0.0, t) / static_cast<double>(k + 1);
    }
    return {e0, e1};
  }
  const cplx it(0.0, t);
  const cplx e = std::exp(it);
  return {(e - 1.0) / it, e / it + (e - 1.0) / (t * t)};
}

// Principal log of (w - p) with Im(w - p) = x >= 0, continuous in the
// closed upper half plane.
inline cplx log_shifted(double w, double y, double x) {
  const double dr = w - y;
  double r = std::hypot(dr, x);
  if (r == 0.0) r = std::numeric_limits<double>::min();
  return {std::log(r), std::atan2(x, dr)};
}

}  // namespace detail

inline Tabulated::Tabulated(std::vector<double> omega, std::vector<double> density) {
  if (omega.size() != density.size()) throw domain_error("tabulated density: column length mismatch");
  if (omega.size() < 3) throw domain_error("tabulated density: need at least 3 grid points");
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (!std::isfinite(omega[i]) || !std::isfinite(density[i]))
      throw domain_error("tabulated density: non-finite entry at row " + std::to_string(i + 1));
    if (density[i] < 0.0)
      throw domain_error("tabulated density: negative density at row " + std::to_string(i + 1));
    if (i > 0 && !(omega[i] > omega[i - 1]))
      throw domain_error("tabulated density: grid must be strictly increasing (row " +
                         std::to_string(i + 1) + ")");
  }
  const double gmax = *std::max_element(density.begin(), density.end());
  if (density.front() > 1e-10 * std::max(1.0, gmax) || density.back() > 1e-10 * std::max(1.0, gmax))
    throw domain_error("tabulated density: grid must cover the support (density > 1e-10 at an end)");

  auto t = std::make_shared<Table>();
  const std::size_t n = omega.size();
  std::vector<double> pieces(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    pieces[i] = 0.5 * (omega[i + 1] - omega[i]) * (density[i] + density[i + 1]);
  const double mass = pairwise_sum(pieces);
  if (std::abs(mass - 1.0) > 1e-6)
    throw domain_error("tabulated density: total mass " + std::to_string(mass) +
                       " differs from 1 by more than 1e-6");
  t->raw_mass = mass;
  t->omega = std::move(omega);
  t->g = std::move(density);
  for (auto& v : t->g) v /= mass;

  t->slope.resize(n - 1);
  t->cum.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dw = t->omega[i + 1] - t->omega[i];
    t->slope[i] = (t->g[i + 1] - t->g[i]) / dw;
    t->cum[i + 1] = t->cum[i] + 0.5 * dw * (t->g[i] + t->g[i + 1]);
  }
  t->sup = *std::max_element(t->g.begin(), t->g.end());
  {
    const double step = (t->omega.back() - t->omega.front()) / static_cast<double>(n - 1);
    bool uniform = true;
    for (std::size_t i = 0; i < n && uniform; ++i)
      uniform = std::abs(t->omega[i] - (t->omega.front() + step * static_cast<double>(i))) <= 1e-12 * step * n;
    if (uniform) t->uniform_step = step;
  }

  // Exact moments of the interpolant via 16-point Gauss-Legendre per segment.
  using GL = boost::math::quadrature::gauss<double, 16>;
  const auto& ga = GL::abscissa();
  const auto& gw = GL::weights();
  auto segment_integral = [&](auto&& fn) {
    std::vector<double> parts(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double c = 0.5 * (t->omega[i] + t->omega[i + 1]);
      const double h = 0.5 * (t->omega[i + 1] - t->omega[i]);
      double s = 0.0;
      for (std::size_t k = 0; k < ga.size(); ++k) {
        for (double sg : {-1.0, 1.0}) {
          if (ga[k] == 0.0 && sg > 0) continue;
          const double w = c + sg * h * ga[k];
          s += gw[k] * fn(w, t->g[i] + t->slope[i] * (w - t->omega[i]));
        }
      }
      parts[i] = s * h;
    }
    return pairwise_sum(parts);
  };
  t->mean = segment_integral([](double w, double g) { return w * g; });
  t->radius = std::max(t->mean - t->omega.front(), t->omega.back() - t->mean);
  constexpr int kMoments = 30;
  t->moments.resize(kMoments);
  for (int k = 0; k < kMoments; ++k) {
    const double m = t->mean, r = t->radius;
    t->moments[k] = segment_integral([&](double w, double g) { return std::pow((w - m) / r, k) * g; });
  }
  t_ = std::move(t);
}

inline double Tabulated::eval(double w) const {
  const auto& om = t_->omega;
  if (w < om.front() || w > om.back()) return 0.0;
  auto it = std::upper_bound(om.begin(), om.end(), w);
  std::size_t i = static_cast<std::size_t>(it - om.begin());
  if (i >= om.size()) return t_->g.back();
  --i;
  return t_->g[i] + t_->slope[i] * (w - om[i]);
}

inline double Tabulated::cdf(double w) const {
  const auto& om = t_->omega;
  if (w <= om.front()) return 0.0;
  if (w >= om.back()) return 1.0;
  auto it = std::upper_bound(om.begin(), om.end(), w);
  const std::size_t i = static_cast<std::size_t>(it - om.begin()) - 1;
  const double d = w - om[i];
  return std::min(1.0, t_->cum[i] + d * (t_->g[i] + 0.5 * t_->slope[i] * d));
}

inline cplx Tabulated::fourier(double xi) const {
  const auto& om = t_->omega;
  const auto& g = t_->g;
  if (t_->uniform_step > 0.0) {
    // Shared segment kernels; phases by recurrence, re-anchored every 32 nodes.
    const double dw = t_->uniform_step;
    const auto [e0, e1] = detail::segment_kernels(xi * dw);
    const cplx rot = std::exp(cplx(0.0, xi * dw));
    std::vector<cplx> blocks;
    blocks.reserve(om.size() / 32 + 1);
    for (std::size_t start = 0; start + 1 < om.size(); start += 32) {
      const std::size_t stop = std::min(start + 32, om.size() - 1);
      cplx phase = std::exp(cplx(0.0, xi * om[start]));
      cplx acc = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        acc += phase * (g[i] * e0 + (g[i + 1] - g[i]) * e1);
        phase *= rot;
      }
      blocks.push_back(acc);
    }
    return dw * pairwise_sum(blocks);
  }
  std::vector<cplx> parts(om.size() - 1);
  for (std::size_t i = 0; i + 1 < om.size(); ++i) {
    const double dw = om[i + 1] - om[i];
    const auto [e0, e1] = detail::segment_kernels(xi * dw);
    parts[i] = std::exp(cplx(0.0, xi * om[i])) * dw * (g[i] * e0 + (g[i + 1] - g[i]) * e1);
  }
  return pairwise_sum(parts);
}

inline cplx Tabulated::multipole(cplx z, int derivative) const {
  // int g(w)/(z - i w) dw = sum_k i^k M_k / zeta^{k+1}, zeta = z - i*mean.
  const cplx zeta = z - cplx(0.0, t_->mean);
  const cplx q = cplx(0.0, t_->radius) / zeta;
  cplx sum = 0.0, qk = 1.0;
  for (std::size_t k = 0; k < t_->moments.size(); ++k) {
    const double coef = derivative == 0 ? 1.0 : -static_cast<double>(k + 1);
    sum += coef * t_->moments[k] * qk;
    qk *= q;
  }
  return derivative == 0 ? sum / zeta : sum / (zeta * zeta);
}

inline cplx Tabulated::laplace(cplx z) const {
  const double x = z.real();
  const double y = z.imag();
  if (x < 0.0) throw domain_error("tabulated density: Laplace transform needs Re z >= 0");
  if (std::abs(z - cplx(0.0, t_->mean)) > 4.0 * t_->radius) return multipole(z, 0);
  // With p = -i z: int L(w)/(z - i w) = i int L(w)/(w - p); the log terms of
  // adjacent segments combine into node contributions.
  const auto& om = t_->omega;
  const auto& g = t_->g;
  const auto& m = t_->slope;
  const std::size_t n = om.size() - 1;
  const cplx p(y, -x);
  std::vector<cplx> terms(n + 1);
  terms[0] = -(g[0] + m[0] * (p - om[0])) * detail::log_shifted(om[0], y, x);
  terms[n] = (g[n - 1] + m[n - 1] * (p - om[n - 1])) * detail::log_shifted(om[n], y, x);
  for (std::size_t k = 1; k < n; ++k) {
    const cplx dist = p - om[k];
    if (dist == 0.0) {
      terms[k] = 0.0;
      continue;
    }
    terms[k] = (m[k - 1] - m[k]) * dist * detail::log_shifted(om[k], y, x);
  }
  return cplx(0.0, 1.0) * ((g[n] - g[0]) + pairwise_sum(terms));
}

inline cplx Tabulated::laplace_derivative(cplx z) const {
  const double x = z.real();
  const double y = z.imag();
  if (x <= 0.0) throw domain_error("tabulated density: derivative needs Re z > 0");
  if (std::abs(z - cplx(0.0, t_->mean)) > 4.0 * t_->radius) return multipole(z, 1);
  const auto& om = t_->omega;
  const auto& g = t_->g;
  const auto& m = t_->slope;
  const std::size_t n = om.size() - 1;
  const cplx p(y, -x);
  std::vector<cplx> terms(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double mprev = k == 0 ? 0.0 : m[k - 1];
    const double mnext = k == n ? 0.0 : m[k];
    terms[k] = (mprev - mnext) * detail::log_shifted(om[k], y, x);
  }
  const cplx ends = (g[0] + m[0] * (p - om[0])) / (om[0] - p) -
                    (g[n - 1] + m[n - 1] * (p - om[n - 1])) / (om[n] - p);
  return pairwise_sum(terms) + (m[0] - m[n - 1]) + ends;
}

// ---------------------------------------------------------------------------

inline VelocityDistribution::VelocityDistribution(Family f) : family_(std::move(f)) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          if (!std::isfinite(d.mean) || !(d.stddev > 0.0) || !std::isfinite(d.stddev))
            throw domain_error("Gaussian needs finite mean and stddev > 0");
        } else if constexpr (std::is_same_v<T, Lorentzian>) {
          if (!std::isfinite(d.center) || !(d.halfwidth > 0.0) || !std::isfinite(d.halfwidth))
            throw domain_error("Lorentzian needs finite center and halfwidth > 0");
        } else if constexpr (std::is_same_v<T, BimodalGaussian>) {
          if (!std::isfinite(d.offset) || !(d.stddev > 0.0) || !std::isfinite(d.stddev))
            throw domain_error("bimodal Gaussian needs finite offset and stddev > 0");
        }
      },
      family_);
}

inline std::string VelocityDistribution::name() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) os << "gaussian(" << d.mean << "," << d.stddev << ")";
        else if constexpr (std::is_same_v<T, Lorentzian>) os << "lorentzian(" << d.center << "," << d.halfwidth << ")";
        else if constexpr (std::is_same_v<T, BimodalGaussian>) os << "bimodal(" << d.offset << "," << d.stddev << ")";
        else os << "tabulated(" << d.omega().size() << " points)";
      },
      family_);
  return os.str();
}

inline double VelocityDistribution::density(double w) const {
  if (!std::isfinite(w)) throw domain_error("density: frequency must be finite");
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return detail::gaussian_pdf(w, d.mean, d.stddev);
        else if constexpr (std::is_same_v<T, Lorentzian>) {
          const double u = (w - d.center) / d.halfwidth;
          return 1.0 / (detail::kPi * d.halfwidth * (1.0 + u * u));
        } else if constexpr (std::is_same_v<T, BimodalGaussian>)
          return 0.5 * (detail::gaussian_pdf(w, -d.offset, d.stddev) + detail::gaussian_pdf(w, d.offset, d.stddev));
        else return d.eval(w);
      },
      family_);
}

inline cplx VelocityDistribution::fourier(double xi) const {
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw domain_error("fourier: xi must be finite and >= 0");
  return std::visit(
      [&](const auto& d) -> cplx {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return detail::gaussian_fourier(xi, d.mean, d.stddev);
        else if constexpr (std::is_same_v<T, Lorentzian>)
          return std::exp(cplx(-d.halfwidth * xi, d.center * xi));
        else if constexpr (std::is_same_v<T, BimodalGaussian>)
          return std::cos(d.offset * xi) * std::exp(-0.5 * d.stddev * d.stddev * xi * xi);
        else return d.fourier(xi);
      },
      family_);
}

inline double VelocityDistribution::analyticity_bound() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Lorentzian>) return d.halfwidth;
        else if constexpr (std::is_same_v<T, Tabulated>) return 0.0;
        else return std::numeric_limits<double>::infinity();
      },
      family_);
}

inline double VelocityDistribution::fourier_envelope(double xi) const {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Lorentzian>) return std::exp(-d.halfwidth * xi);
        else if constexpr (std::is_same_v<T, Tabulated>) return 1.0;
        else return std::exp(-0.5 * d.stddev * d.stddev * xi * xi);
      },
      family_);
}

inline cplx VelocityDistribution::laplace(cplx z) const {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw domain_error("laplace: z must be finite");
  const double a = analyticity_bound();
  if (a > 0.0 && !(z.real() > -a))
    throw domain_error("laplace: Re z must exceed -" + std::to_string(a));
  return std::visit(
      [&](const auto& d) -> cplx {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return detail::gaussian_laplace(z, d.mean, d.stddev, 0);
        else if constexpr (std::is_same_v<T, Lorentzian>)
          return 1.0 / (z + d.halfwidth - cplx(0.0, d.center));
        else if constexpr (std::is_same_v<T, BimodalGaussian>)
          return 0.5 * (detail::gaussian_laplace(z, d.offset, d.stddev, 0) +
                        detail::gaussian_laplace(z, -d.offset, d.stddev, 0));
        else return d.laplace(z);
      },
      family_);
}

inline cplx VelocityDistribution::laplace_derivative(cplx z) const {
  const double a = analyticity_bound();
  if (a > 0.0 && !(z.real() > -a))
    throw domain_error("laplace derivative: Re z must exceed -" + std::to_string(a));
  return std::visit(
      [&](const auto& d) -> cplx {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return detail::gaussian_laplace(z, d.mean, d.stddev, 1);
        else if constexpr (std::is_same_v<T, Lorentzian>) {
          const cplx q = z + d.halfwidth - cplx(0.0, d.center);
          return -1.0 / (q * q);
        } else if constexpr (std::is_same_v<T, BimodalGaussian>)
          return 0.5 * (detail::gaussian_laplace(z, d.offset, d.stddev, 1) +
                        detail::gaussian_laplace(z, -d.offset, d.stddev, 1));
        else return d.laplace_derivative(z);
      },
      family_);
}

inline double VelocityDistribution::cdf(double w) const {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return detail::gaussian_cdf(w, d.mean, d.stddev);
        else if constexpr (std::is_same_v<T, Lorentzian>)
          return 0.5 + std::atan((w - d.center) / d.halfwidth) / detail::kPi;
        else if constexpr (std::is_same_v<T, BimodalGaussian>)
          return 0.5 * (detail::gaussian_cdf(w, -d.offset, d.stddev) + detail::gaussian_cdf(w, d.offset, d.stddev));
        else return d.cdf(w);
      },
      family_);
}

inline double VelocityDistribution::center() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return d.mean;
        else if constexpr (std::is_same_v<T, Lorentzian>) return d.center;
        else if constexpr (std::is_same_v<T, BimodalGaussian>) return 0.0;
        else return d.mean();
      },
      family_);
}

inline double VelocityDistribution::scale() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return d.stddev;
        else if constexpr (std::is_same_v<T, Lorentzian>) return d.halfwidth;
        else if constexpr (std::is_same_v<T, BimodalGaussian>) return std::abs(d.offset) + d.stddev;
        else return d.radius() / 4.0;
      },
      family_);
}

inline std::pair<double, double> VelocityDistribution::support() const {
  return std::visit(
      [](const auto& d) -> std::pair<double, double> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return {d.mean - 40 * d.stddev, d.mean + 40 * d.stddev};
        else if constexpr (std::is_same_v<T, Lorentzian>)
          return {d.center - 40 * d.halfwidth, d.center + 40 * d.halfwidth};
        else if constexpr (std::is_same_v<T, BimodalGaussian>) {
          const double r = std::abs(d.offset) + 40 * d.stddev;
          return {-r, r};
        } else return {d.omega().front(), d.omega().back()};
      },
      family_);
}

inline double VelocityDistribution::sup_density() const {
  if (const auto* b = std::get_if<BimodalGaussian>(&family_)) {
    // The mixture peaks at 0 or near +-offset; refine by golden section.
    double best = density(0.0);
    const double a0 = 0.0, b0 = std::abs(b->offset) + b->stddev;
    double lo = a0, hi = b0;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
      const double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
      if (density(m1) < density(m2)) lo = m1;
      else hi = m2;
    }
    return std::max(best, density(0.5 * (lo + hi)));
  }
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return detail::kInvSqrt2Pi / d.stddev;
        else if constexpr (std::is_same_v<T, Lorentzian>) return 1.0 / (detail::kPi * d.halfwidth);
        else if constexpr (std::is_same_v<T, Tabulated>) return d.sup();
        else return 0.0;
      },
      family_);
}

inline bool VelocityDistribution::symmetric_unimodal() const {
  if (std::holds_alternative<Gaussian>(family_) || std::holds_alternative<Lorentzian>(family_)) return true;
  if (const auto* b = std::get_if<BimodalGaussian>(&family_))
    return std::abs(b->offset) <= b->stddev;  // mixture stays unimodal
  return false;
}

inline double VelocityDistribution::total_mass() const {
  quad::Options opt;
  opt.abs_tol = 1e-12;
  if (const auto* l = std::get_if<Lorentzian>(&family_)) {
    // w = c + gamma tan(u): the density becomes 1/pi on (-pi/2, pi/2).
    auto f = [&](double u) {
      const double w = l->center + l->halfwidth * std::tan(u);
      const double c = std::cos(u);
      return density(w) * l->halfwidth / (c * c);
    };
    const double e = 1e-12;
    return quad::integrate(f, -detail::kPi / 2 + e, detail::kPi / 2 - e, opt).value;
  }
  if (const auto* t = std::get_if<Tabulated>(&family_)) {
    // Exact for the interpolant.
    return t->cdf(t->omega().back()) - t->cdf(t->omega().front());
  }
  const auto [lo, hi] = support();
  std::vector<double> br;
  const int pieces = 80;
  for (int i = 0; i <= pieces; ++i) br.push_back(lo + (hi - lo) * i / pieces);
  return quad::integrate_pieces([&](double w) { return density(w); }, br, opt).value;
}

inline cplx plemelj_boundary_value(const VelocityDistribution& d, double x, double h) {
  const auto [lo, hi] = d.support();
  const double reach = std::max(std::abs(hi - x), std::abs(x - lo));
  quad::Options opt;
  opt.abs_tol = 1e-13;
  opt.max_panels = 20000;
  auto odd_part = [&](double w) { return (d.density(x + w) - d.density(x - w)) / w; };
  auto excised = [&](double eps) {
    std::vector<double> br{eps};
    for (double b = std::max(2 * eps, 0.5); b < reach; b *= 2) br.push_back(b);
    br.push_back(std::max(reach, 2 * eps));
    return quad::integrate_pieces(odd_part, br, opt).value;
  };
  // The excision error contains only odd powers of h.
  const double i1 = excised(h), i2 = excised(h / 2), i3 = excised(h / 4);
  const double r1 = 2 * i2 - i1, r2 = 2 * i3 - i2;
  const double pv = (8 * r2 - r1) / 7;
  return {detail::kPi * d.density(x), pv};
}

inline Tabulated read_tabulated_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw domain_error("tabulated csv: empty input");
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
  };
  if (trim(line) != "omega,density")
    throw domain_error("tabulated csv: header must be 'omega,density'");
  std::vector<double> w, g;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw domain_error("tabulated csv: row " + std::to_string(row) + " needs two columns");
    try {
      std::size_t used = 0;
      const std::string a = trim(line.substr(0, comma)), b = trim(line.substr(comma + 1));
      w.push_back(std::stod(a, &used));
      if (used != a.size()) throw std::invalid_argument(a);
      g.push_back(std::stod(b, &used));
      if (used != b.size()) throw std::invalid_argument(b);
    } catch (const std::logic_error&) {
      throw domain_error("tabulated csv: cannot parse row " + std::to_string(row));
    }
  }
  return Tabulated(std::move(w), std::move(g));
}

inline Tabulated read_tabulated_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw domain_error("tabulated csv: cannot open " + path);
  return read_tabulated_csv(f);
}

}  // namespace kuramoto
