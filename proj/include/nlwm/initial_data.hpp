#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "nlwm/radial_grid.hpp"

namespace nlwm {

/// An even radial profile p(r) known in closed form, with p', p'' and its extent
/// (p vanishes to machine precision for r > extent). `r_moment`, when set, is
/// int_0^r s p(s) ds in closed form.
struct RadialProfile {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  double extent = std::numeric_limits<double>::infinity();
  std::function<double(double)> r_moment;

  explicit operator bool() const { return static_cast<bool>(value); }
};

inline RadialProfile zero_profile() {
  RadialProfile p;
  p.value = p.d1 = p.d2 = [](double) { return 0.0; };
  p.r_moment = [](double) { return 0.0; };
  p.extent = 0.0;
  return p;
}

inline RadialProfile gaussian_profile(double amplitude, double width) {
  RadialProfile p;
  const double w2 = width * width;
  p.value = [=](double r) { return amplitude * std::exp(-r * r / w2); };
  p.d1 = [=](double r) { return -2.0 * r / w2 * amplitude * std::exp(-r * r / w2); };
  p.d2 = [=](double r) {
    return amplitude * std::exp(-r * r / w2) * (4.0 * r * r / (w2 * w2) - 2.0 / w2);
  };
  p.r_moment = [=](double r) { return 0.5 * amplitude * w2 * -std::expm1(-r * r / w2); };
  p.extent = width * std::sqrt(745.0);
  return p;
}

namespace detail {

/// r -> int_0^r q(s) ds for q supported in [0, extent]: cumulative Gauss-Legendre cell
/// table plus a Gauss-Legendre partial cell, accurate to rounding for smooth q.
inline std::function<double(double)> moment_table(std::function<double(double)> q,
                                                  double extent) {
  constexpr int cells = 1024;
  const double h = extent / cells;
  auto table = std::make_shared<std::vector<double>>(cells + 1, 0.0);
  for (int c = 0; c < cells; ++c) {
    (*table)[c + 1] = (*table)[c] + boost::math::quadrature::gauss<double, 20>::integrate(
                                        q, c * h, (c + 1) * h);
  }
  return [q, table, h, extent](double r) {
    r = std::abs(r);
    if (r >= extent) return table->back();
    const int c = static_cast<int>(r / h);
    const double a = c * h;
    if (r == a) return (*table)[c];
    return (*table)[c] + boost::math::quadrature::gauss<double, 10>::integrate(q, a, r);
  };
}

}  // namespace detail

/// amplitude * exp(1 - 1/(1 - (r/rho)^2)) on r < rho, zero outside.
inline RadialProfile bump_profile(double amplitude, double rho) {
  RadialProfile p;
  auto core = [=](double r, int order) {
    const double x = r / rho;
    if (x >= 1.0) return 0.0;
    const double d = 1.0 - x * x;
    const double b = amplitude * std::exp(1.0 - 1.0 / d);
    if (order == 0) return b;
    // d/dx exp(1 - 1/d) = b * (-2x / d^2)
    const double g1 = -2.0 * x / (d * d);
    if (order == 1) return b * g1 / rho;
    const double g1p = -2.0 / (d * d) - 8.0 * x * x / (d * d * d);
    return b * (g1 * g1 + g1p) / (rho * rho);
  };
  p.value = [core](double r) { return core(r, 0); };
  p.d1 = [core](double r) { return core(r, 1); };
  p.d2 = [core](double r) { return core(r, 2); };
  p.extent = rho;
  p.r_moment = detail::moment_table([core](double s) { return s * core(s, 0); }, rho);
  return p;
}

/// Radial initial pair (f, g) sampled on a grid, optionally with exact profiles.
struct InitialData {
  Field f;
  Field g;
  double support_radius = std::numeric_limits<double>::infinity();
  RadialProfile f_exact;
  RadialProfile g_exact;
  std::string label;

  bool is_compact() const { return std::isfinite(support_radius); }
};

enum class DataMode { displacement, velocity };

inline DataMode parse_mode(const std::string& s) {
  if (s == "displacement" || s == "f") return DataMode::displacement;
  if (s == "velocity" || s == "g") return DataMode::velocity;
  throw std::invalid_argument("unknown data mode '" + s + "' (displacement|velocity)");
}

inline InitialData data_from_profiles(const RadialGrid& grid, RadialProfile f, RadialProfile g,
                                      double support, std::string label) {
  InitialData d;
  d.f = grid.sample(f.value);
  d.g = grid.sample(g.value);
  d.support_radius = support;
  d.f_exact = std::move(f);
  d.g_exact = std::move(g);
  d.label = std::move(label);
  return d;
}

inline InitialData gaussian_bump(const RadialGrid& grid, double amplitude, double width,
                                 DataMode mode) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_bump: width must be positive");
  auto p = gaussian_profile(amplitude, width);
  auto z = zero_profile();
  const std::string label = "gaussian";
  return mode == DataMode::displacement
             ? data_from_profiles(grid, p, z, std::numeric_limits<double>::infinity(), label)
             : data_from_profiles(grid, z, p, std::numeric_limits<double>::infinity(), label);
}

inline InitialData compact_bump(const RadialGrid& grid, double rho, DataMode mode,
                                double amplitude = 1.0) {
  if (!(rho > 0.0) || !(rho < grid.r_max() / 4.0)) {
    throw std::invalid_argument("compact_bump: rho must lie in (0, r_max/4)");
  }
  auto p = bump_profile(amplitude, rho);
  auto z = zero_profile();
  return mode == DataMode::displacement ? data_from_profiles(grid, p, z, rho, "bump")
                                        : data_from_profiles(grid, z, p, rho, "bump");
}

/// W(r) = (1 + r^2/(n(n-2)))^{-(n-2)/2}, the static solution of -Delta W = W^{2*-1}.
inline RadialProfile ground_state_profile(int n_dim, double scale = 1.0) {
  const double c = 1.0 / (n_dim * (n_dim - 2.0));
  const double e = 0.5 * (n_dim - 2.0);
  RadialProfile p;
  p.value = [=](double r) { return scale * std::pow(1.0 + c * r * r, -e); };
  // W' = -(r/n) (1 + c r^2)^{-n/2}
  p.d1 = [=](double r) { return -scale * (r / n_dim) * std::pow(1.0 + c * r * r, -0.5 * n_dim); };
  p.d2 = [=](double r) {
    const double s = 1.0 + c * r * r;
    return -scale / n_dim * (std::pow(s, -0.5 * n_dim) - n_dim * c * r * r * std::pow(s, -0.5 * n_dim - 1.0));
  };
  return p;
}

inline Field ground_state_W(const RadialGrid& grid) {
  return grid.sample(ground_state_profile(grid.n_dim()).value);
}

/// (alpha W, 0): plain multiplication, moving int |grad f|^2 across int |grad W|^2.
inline InitialData scaled_ground_state(const RadialGrid& grid, double alpha) {
  return data_from_profiles(grid, ground_state_profile(grid.n_dim(), alpha), zero_profile(),
                            std::numeric_limits<double>::infinity(), "ground_state");
}

/// Data rescaled in the energy-invariant way eps^{n/2-1} f(eps r), eps^{n/2} g(eps r).
inline InitialData rescale_energy_invariant(const RadialGrid& grid, const InitialData& d,
                                            double eps) {
  const int n = grid.n_dim();
  auto scale_profile = [eps](const RadialProfile& p, double power) {
    RadialProfile q;
    const double a = std::pow(eps, power);
    auto v = p.value, d1 = p.d1, d2 = p.d2;
    q.value = [=](double r) { return a * v(eps * r); };
    q.d1 = [=](double r) { return a * eps * d1(eps * r); };
    q.d2 = [=](double r) { return a * eps * eps * d2(eps * r); };
    q.extent = p.extent / eps;
    if (p.r_moment) {
      auto m = p.r_moment;
      q.r_moment = [=](double r) { return a / (eps * eps) * m(eps * r); };
    }
    return q;
  };
  if (!d.f_exact || !d.g_exact) {
    throw std::invalid_argument("rescale_energy_invariant: data has no exact profiles");
  }
  return data_from_profiles(grid, scale_profile(d.f_exact, 0.5 * n - 1.0),
                            scale_profile(d.g_exact, 0.5 * n), d.support_radius / eps,
                            d.label + "_rescaled");
}

/// Centered-difference radial derivative: zero at the origin (even symmetry),
/// one-sided second order at r_max.
inline Field radial_derivative(std::span<const double> u, const RadialGrid& grid) {
  const std::size_t n = u.size();
  Field d(n, 0.0);
  const double inv = 1.0 / (2.0 * grid.dr());
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i - 1]) * inv;
  d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * inv;
  return d;
}

/// int |grad f|^2 dx with one-sided differences on cell faces r_{i+1/2}, the form the
/// flux Laplacian conserves.
inline double gradient_energy(std::span<const double> f, const RadialGrid& grid) {
  const double dr = grid.dr();
  const int n = grid.n_dim();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double d = (f[i + 1] - f[i]) / dr;
    sum += std::pow((static_cast<double>(i) + 0.5) * dr, n - 1) * d * d;
  }
  return grid.sphere_area() * dr * sum;
}

enum class ThresholdVerdict { subthreshold_global, superthreshold_blowup, indeterminate };

inline std::string to_string(ThresholdVerdict v) {
  switch (v) {
    case ThresholdVerdict::subthreshold_global: return "subthreshold_global";
    case ThresholdVerdict::superthreshold_blowup: return "superthreshold_blowup";
    default: return "indeterminate";
  }
}

struct ThresholdReport {
  double energy_lhs = 0.0;
  double energy_rhs = 0.0;
  double grad_f = 0.0;
  double grad_W = 0.0;
  bool condition_energy = false;
  bool condition_gradient = false;
  ThresholdVerdict verdict = ThresholdVerdict::indeterminate;
  /// Analytic tail of int |grad W|^2 beyond r_max; an error bar, not a correction.
  double truncation_error = 0.0;
};

inline double ground_state_gradient_tail(int n_dim, double r_max) {
  const auto w = ground_state_profile(n_dim);
  const double sigma = sphere_area(n_dim);
  boost::math::quadrature::exp_sinh<double> integrator;
  return sigma * integrator.integrate(
                     [&](double s) {
                       const double r = r_max + s;
                       const double d = w.d1(r);
                       return d * d * std::pow(r, n_dim - 1);
                     },
                     0.0, std::numeric_limits<double>::infinity());
}

/// Focusing (lambda = -1) threshold conditions against (W, 0) on the same grid.
inline ThresholdReport kenig_merle_check(const InitialData& data, const RadialGrid& grid) {
  const double p = grid.critical_exponent();
  const double c = (grid.n_dim() - 2.0) / grid.n_dim();
  auto static_energy = [&](std::span<const double> f, std::span<const double> g, double& grad) {
    grad = gradient_energy(f, grid);
    Field dens(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      dens[i] = g[i] * g[i] - c * std::pow(std::abs(f[i]), p);
    }
    return grad + integrate_ball(dens, grid);
  };
  const Field W = ground_state_W(grid);
  const Field zero = grid.zeros();
  ThresholdReport rep;
  rep.energy_lhs = static_energy(data.f, data.g, rep.grad_f);
  rep.energy_rhs = static_energy(W, zero, rep.grad_W);
  rep.truncation_error = ground_state_gradient_tail(grid.n_dim(), grid.r_max());
  rep.condition_energy = rep.energy_lhs < rep.energy_rhs;
  rep.condition_gradient = rep.grad_f < rep.grad_W;
  if (rep.condition_energy && rep.condition_gradient) {
    rep.verdict = ThresholdVerdict::subthreshold_global;
  } else if (rep.condition_energy && rep.grad_f > rep.grad_W) {
    rep.verdict = ThresholdVerdict::superthreshold_blowup;
  } else {
    rep.verdict = ThresholdVerdict::indeterminate;
  }
  return rep;
}

}  // namespace nlwm
