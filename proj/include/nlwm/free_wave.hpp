#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlwm/initial_data.hpp"
#include "nlwm/observer.hpp"
#include "nlwm/radial_grid.hpp"
#include "nlwm/solver.hpp"

namespace nlwm {

/// Exact radial free wave in three dimensions through v = r u, which solves the
/// one-dimensional wave equation with odd data Phi(s) = s f(|s|), Gamma'(s) = s g(|s|).
///
/// With closed-form profiles the evaluation is exact to rounding. Otherwise Phi and
/// gamma are interpolated from grid samples by 4-point Lagrange polynomials and
/// Gamma is assembled from 4-point cell integrals, an O(dr^4) reconstruction.
class Dalembert3D {
 public:
  Dalembert3D(const InitialData& data, const RadialGrid& grid) : grid_(grid) {
    if (grid.n_dim() != 3) {
      throw std::invalid_argument("dalembert_3d: requires n_dim = 3 (got " +
                                  std::to_string(grid.n_dim()) + ")");
    }
    analytic_ = data.f_exact && data.g_exact && data.f_exact.d2 && data.g_exact.d1 &&
                data.g_exact.r_moment;
    if (analytic_) {
      f_ = data.f_exact;
      g_ = data.g_exact;
      return;
    }
    build_tables(data);
  }

  bool analytic() const { return analytic_; }

  /// State at time t (negative t allowed) on the grid, with the exact radial derivative.
  FieldState state(double t) const {
    const std::size_t N = grid_.size();
    FieldState s{Field(N), Field(N), t, Field(N)};
    check_extent(t);
    for (std::size_t i = 0; i < N; ++i) {
      const double r = grid_.r(i);
      if (i == 0) {
        s.u[0] = phi1(t) + gam(t);
        s.ut[0] = phi2(t) + gam1(t);
        s.ur[0] = 0.0;
        continue;
      }
      const double a = r + t, b = r - t;
      const double v = 0.5 * (phi(a) + phi(b)) + 0.5 * (big_gamma(a) - big_gamma(b));
      const double pa = phi1(a), pb = phi1(b), ga = gam(a), gb = gam(b);
      const double vt = 0.5 * (pa - pb) + 0.5 * (ga + gb);
      const double vr = 0.5 * (pa + pb) + 0.5 * (ga - gb);
      const double u = v / r;
      s.u[i] = u;
      s.ut[i] = vt / r;
      s.ur[i] = (vr - u) / r;
    }
    return s;
  }

 private:
  // Phi(s) = s f(|s|) and its first two derivatives.
  double phi(double s) const { return analytic_ ? s * f_.value(std::abs(s)) : interp(F_, s, 0); }
  double phi1(double s) const {
    if (!analytic_) return interp(F_, s, 1);
    const double a = std::abs(s);
    return f_.value(a) + a * f_.d1(a);
  }
  double phi2(double s) const {
    if (!analytic_) return interp(F_, s, 2);
    const double a = std::abs(s);
    return std::copysign(1.0, s) * (2.0 * f_.d1(a) + a * f_.d2(a));
  }
  // gamma(s) = s g(|s|), gamma', and Gamma = int_0^s gamma (even).
  double gam(double s) const { return analytic_ ? s * g_.value(std::abs(s)) : interp(C_, s, 0); }
  double gam1(double s) const {
    if (!analytic_) return interp(C_, s, 1);
    const double a = std::abs(s);
    return g_.value(a) + a * g_.d1(a);
  }
  double big_gamma(double s) const {
    if (analytic_) return g_.r_moment(std::abs(s));
    return hermite_gamma(std::abs(s));
  }

  void build_tables(const InitialData& data) {
    const std::size_t N = grid_.size();
    const double dr = grid_.dr();
    F_.assign(N, 0.0);
    C_.assign(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      F_[i] = grid_.r(i) * data.f[i];
      C_[i] = grid_.r(i) * data.g[i];
    }
    double tail = 0.0;
    for (std::size_t i = N - 3; i < N; ++i) {
      tail = std::max({tail, std::abs(data.f[i]), std::abs(data.g[i])});
    }
    double peak = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      peak = std::max({peak, std::abs(data.f[i]), std::abs(data.g[i])});
    }
    vanishing_tail_ = tail <= 1e-14 * std::max(peak, 1e-300);
    G_.assign(N, 0.0);
    for (std::size_t i = 0; i + 1 < N; ++i) {
      const double cell = dr * (-odd(C_, static_cast<long>(i) - 1) + 13.0 * C_[i] +
                                13.0 * C_[i + 1] - odd(C_, static_cast<long>(i) + 2)) /
                          24.0;
      G_[i + 1] = G_[i] + cell;
    }
  }

  /// Odd extension of a node table; zero beyond r_max.
  static double odd(const Field& T, long j) {
    if (j < 0) return -odd(T, -j);
    if (j >= static_cast<long>(T.size())) return 0.0;
    return T[static_cast<std::size_t>(j)];
  }

  /// 4-point Lagrange interpolation of the odd extension of T (derivative order 0..2).
  double interp(const Field& T, double s, int order) const {
    const double dr = grid_.dr();
    const double x = s / dr;
    const long j = static_cast<long>(std::floor(x));
    const double q = x - static_cast<double>(j);
    const double y0 = odd(T, j - 1), y1 = odd(T, j), y2 = odd(T, j + 1), y3 = odd(T, j + 2);
    // Nodes at -1, 0, 1, 2 in local coordinate q.
    if (order == 0) {
      return -y0 * q * (q - 1) * (q - 2) / 6.0 + y1 * (q + 1) * (q - 1) * (q - 2) / 2.0 -
             y2 * (q + 1) * q * (q - 2) / 2.0 + y3 * (q + 1) * q * (q - 1) / 6.0;
    }
    if (order == 1) {
      const double l0 = -(3 * q * q - 6 * q + 2) / 6.0;
      const double l1 = (3 * q * q - 4 * q - 1) / 2.0;
      const double l2 = -(3 * q * q - 2 * q - 2) / 2.0;
      const double l3 = (3 * q * q - 1) / 6.0;
      return (y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3) / dr;
    }
    const double l0 = -(q - 1);
    const double l1 = 3 * q - 2;
    const double l2 = -(3 * q - 1);
    const double l3 = q;
    return (y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3) / (dr * dr);
  }

  /// Cubic Hermite interpolation of Gamma using Gamma' = gamma at the nodes.
  double hermite_gamma(double s) const {
    const double dr = grid_.dr();
    const std::size_t N = G_.size();
    const double x = s / dr;
    if (x >= static_cast<double>(N - 1)) return G_.back();
    const std::size_t j = static_cast<std::size_t>(x);
    const double q = x - static_cast<double>(j);
    const double h00 = (1 + 2 * q) * (1 - q) * (1 - q);
    const double h10 = q * (1 - q) * (1 - q);
    const double h01 = q * q * (3 - 2 * q);
    const double h11 = q * q * (q - 1);
    return h00 * G_[j] + h10 * dr * C_[j] + h01 * G_[j + 1] + h11 * dr * C_[j + 1];
  }

  void check_extent(double t) const {
    if (analytic_ || vanishing_tail_) return;
    if (std::abs(t) > 0.0) {
      throw std::invalid_argument(
          "dalembert_3d: data does not vanish at r_max, so r + |t| leaves the sampled "
          "extent of the odd extensions");
    }
  }

  RadialGrid grid_;
  bool analytic_ = false;
  bool vanishing_tail_ = false;
  RadialProfile f_, g_;
  Field F_, C_, G_;
};

inline FieldState dalembert_3d(const InitialData& data, double t, const RadialGrid& grid) {
  return Dalembert3D(data, grid).state(t);
}

/// Feeds observers with oracle states at t_k = k dt, k = 0..round(T/dt), for the
/// forward data (direction +1) or for (f, -g) (direction -1, read off u(-t)).
/// Returns the last state.
inline FieldState oracle_evolve(const Dalembert3D& oracle, double dt, double T,
                                std::span<Observer* const> observers, int direction = 1) {
  const std::size_t total = static_cast<std::size_t>(std::llround(T / dt));
  FieldState s;
  for (std::size_t k = 0; k <= total; ++k) {
    const double t = static_cast<double>(k) * dt;
    s = direction > 0 ? oracle.state(t) : time_reflect(oracle.state(-t));
    StepInfo info;
    info.direction = direction;
    info.step = k;
    info.total_steps = total;
    info.time_weight = total == 0 ? 0.0 : ((k == 0 || k == total) ? 0.5 * dt : dt);
    for (Observer* o : observers) o->observe(s, info);
  }
  return s;
}

inline FieldState oracle_evolve(const Dalembert3D& oracle, double dt, double T,
                                std::initializer_list<Observer*> observers, int direction = 1) {
  return oracle_evolve(oracle, dt, T,
                       std::span<Observer* const>(observers.begin(), observers.size()),
                       direction);
}

// ---------------------------------------------------------------------------
// Linear spherical-harmonic modes

/// u = a(t, r) Y_l(omega) with Y_l normalized in L^2(S^{n-1}).
struct ModeState {
  int ell = 1;
  Field a;
  Field at;
  double t = 0.0;
};

/// Displacement mode data a = r^l * bump(r; rho).
inline ModeState mode_bump(const RadialGrid& grid, int ell, double rho, double amplitude = 1.0) {
  if (ell < 1) throw std::invalid_argument("mode: ell must be >= 1");
  if (!(rho > 0.0) || !(rho < grid.r_max() / 4.0)) {
    throw std::invalid_argument("mode: rho must lie in (0, r_max/4)");
  }
  const auto b = bump_profile(amplitude, rho);
  ModeState m;
  m.ell = ell;
  m.a = grid.sample([&](double r) { return std::pow(r, ell) * b.value(r); });
  m.at = grid.zeros();
  return m;
}

struct ModeEnergy {
  double kinetic = 0.0;
  double radial = 0.0;
  double tangential = 0.0;
  double total = 0.0;
};

/// Energy split of the mode with the sphere measure factored out:
/// int (a_t^2 + a_r^2 + l(l+1) a^2 / r^2) r^{n-1} dr, in the cell/face measure
/// that the mode scheme conserves.
inline ModeEnergy mode_energy(const ModeState& m, const RadialGrid& grid) {
  const double sigma = grid.sphere_area();
  const double L = m.ell * (m.ell + 1.0);
  ModeEnergy e;
  for (std::size_t i = 1; i < m.a.size(); ++i) {
    const double r = grid.r(i);
    const double vol = grid.cell_volume(i) / sigma;
    e.kinetic += vol * m.at[i] * m.at[i];
    e.tangential += vol * L * m.a[i] * m.a[i] / (r * r);
  }
  e.radial = gradient_energy(m.a, grid) / sigma;
  e.total = e.kinetic + e.radial + e.tangential;
  return e;
}

/// l(l+1) int a^2 r^{n-3} dr: int |grad_tau u|^2 dx for the normalized mode.
inline double tangential_energy(const ModeState& m, const RadialGrid& grid) {
  return mode_energy(m, grid).tangential;
}

/// Tangential density l(l+1) a^2 / r^2 divided by the sphere area, ready for the ball
/// quadrature (which carries sigma r^{n-1}).
inline Field tangential_density(const ModeState& m, const RadialGrid& grid) {
  const double L = m.ell * (m.ell + 1.0) / grid.sphere_area();
  Field d(m.a.size(), 0.0);
  for (std::size_t i = 1; i < d.size(); ++i) {
    const double r = grid.r(i);
    d[i] = L * m.a[i] * m.a[i] / (r * r);
  }
  return d;
}

/// Leapfrog for a_tt = a_rr + ((n-1)/r) a_r - l(l+1) a / r^2, Dirichlet at both ends.
/// `observe(state, trapezoid weight)` is called at every step including t = 0.
inline ModeState evolve_mode(const ModeState& mode, double t, const SolverConfig& cfg,
                             const std::function<void(const ModeState&, double)>& observe = {}) {
  validate(cfg);
  if (cfg.lambda != 0.0) {
    throw std::invalid_argument("lambda: modes decouple only for the free equation (lambda = 0)");
  }
  if (mode.ell < 1) throw std::invalid_argument("mode: ell must be >= 1");
  const RadialGrid grid = cfg.grid();
  if (mode.a.size() != grid.size() || mode.at.size() != grid.size()) {
    throw std::invalid_argument("mode: size does not match grid");
  }
  const RadialLaplacian lap(grid);
  const std::size_t N = grid.size();
  const double L = mode.ell * (mode.ell + 1.0);
  Field pot(N, 0.0);
  for (std::size_t i = 1; i < N; ++i) pot[i] = L / (grid.r(i) * grid.r(i));

  ModeState m = mode;
  m.a[0] = 0.0;
  m.at[0] = 0.0;
  m.at[N - 1] = 0.0;
  Field a(N);
  auto accel = [&] {
    lap.apply(m.a, a);
    a[0] = 0.0;
    for (std::size_t i = 1; i + 1 < N; ++i) a[i] -= pot[i] * m.a[i];
  };
  const std::size_t total = static_cast<std::size_t>(std::llround(t / cfg.dt));
  auto weight = [&](std::size_t k) {
    return total == 0 ? 0.0 : ((k == 0 || k == total) ? 0.5 * cfg.dt : cfg.dt);
  };
  if (observe) observe(m, weight(0));
  accel();
  const double h = 0.5 * cfg.dt;
  for (std::size_t k = 1; k <= total; ++k) {
    for (std::size_t i = 1; i + 1 < N; ++i) {
      m.at[i] += h * a[i];
      m.a[i] += cfg.dt * m.at[i];
    }
    accel();
    for (std::size_t i = 1; i + 1 < N; ++i) m.at[i] += h * a[i];
    m.t = mode.t + static_cast<double>(k) * cfg.dt;
    if (observe) observe(m, weight(k));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Rescaling

/// h_eps(r) = eps^{n/2} h(eps r), resampled by 4-point Lagrange interpolation of h.
inline Field rescale_data(std::span<const double> h, double eps, const RadialGrid& grid) {
  if (!(eps > 0.0) || eps > 1.0) throw std::invalid_argument("rescale_data: eps must lie in (0, 1]");
  if (h.size() != grid.size()) throw std::invalid_argument("rescale_data: size mismatch");
  const std::size_t N = h.size();
  double peak = 0.0, outside = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    peak = std::max(peak, std::abs(h[i]));
    if (grid.r(i) > eps * grid.r_max() + 2.0 * grid.dr()) outside = std::max(outside, std::abs(h[i]));
  }
  if (outside > 1e-12 * peak) {
    throw std::invalid_argument("rescale_data: support of h exceeds eps * r_max");
  }
  const double scale = std::pow(eps, 0.5 * grid.n_dim());
  const double dr = grid.dr();
  auto even = [&](long j) {
    j = std::labs(j);
    return j >= static_cast<long>(N) ? 0.0 : h[static_cast<std::size_t>(j)];
  };
  Field out(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double x = eps * grid.r(i) / dr;
    const long j = static_cast<long>(std::floor(x));
    const double q = x - static_cast<double>(j);
    const double v = -even(j - 1) * q * (q - 1) * (q - 2) / 6.0 +
                     even(j) * (q + 1) * (q - 1) * (q - 2) / 2.0 -
                     even(j + 1) * (q + 1) * q * (q - 2) / 2.0 +
                     even(j + 2) * (q + 1) * q * (q - 1) / 6.0;
    out[i] = scale * v;
  }
  return out;
}

}  // namespace nlwm
