#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlwm {

/// Samples of a radial quantity, one entry per grid node (node_count + 1 entries).
using Field = std::vector<double>;

/// Surface measure of the unit (n-1)-sphere, 2 pi^{n/2} / Gamma(n/2).
inline double sphere_area(int n_dim) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n_dim) / std::tgamma(0.5 * n_dim);
}

/// Critical Sobolev exponent 2n/(n-2).
inline double critical_exponent(int n_dim) {
  return 2.0 * n_dim / (n_dim - 2.0);
}

/// Uniform radial mesh r_i = i dr, i = 0..node_count, for radial functions on R^n.
///
/// Integrals use composite trapezoidal quadrature of sigma_{n-1} q(r) r^{n-1};
/// the weight vanishes at the origin node, so no integrand is ever evaluated
/// against the coordinate singularity.
class RadialGrid {
 public:
  RadialGrid(int n_dim, double dr, double r_max) : n_dim_(n_dim), dr_(dr) {
    if (n_dim < 3) {
      throw std::invalid_argument("radial grid: dimension below 3 (n_dim = " +
                                  std::to_string(n_dim) + ")");
    }
    if (!(dr > 0.0) || !std::isfinite(dr)) {
      throw std::invalid_argument("radial grid: dr must be positive");
    }
    if (!(r_max >= 10.0 * dr) || !std::isfinite(r_max)) {
      throw std::invalid_argument("radial grid: r_max must be at least 10 dr");
    }
    node_count_ = static_cast<std::size_t>(std::llround(r_max / dr));
    r_max_ = static_cast<double>(node_count_) * dr_;
    sphere_area_ = nlwm::sphere_area(n_dim);
    weights_.resize(node_count_ + 1);
    volumes_.resize(node_count_ + 1);
    const double n = n_dim_;
    for (std::size_t i = 0; i <= node_count_; ++i) {
      weights_[i] = sphere_area_ * dr_ * std::pow(r(i), n_dim_ - 1);
      const double x = static_cast<double>(i);
      const double hi = i == node_count_ ? x : x + 0.5;
      const double lo = i == 0 ? 0.0 : x - 0.5;
      volumes_[i] = sphere_area_ * std::pow(dr_, n) * (std::pow(hi, n) - std::pow(lo, n)) / n;
    }
  }

  int n_dim() const { return n_dim_; }
  double dr() const { return dr_; }
  double r_max() const { return r_max_; }
  std::size_t node_count() const { return node_count_; }
  std::size_t size() const { return node_count_ + 1; }
  double sphere_area() const { return sphere_area_; }
  double critical_exponent() const { return nlwm::critical_exponent(n_dim_); }

  double r(std::size_t i) const { return static_cast<double>(i) * dr_; }

  /// Full (un-halved) trapezoid weight sigma dr r_i^{n-1}.
  double weight(std::size_t i) const { return weights_[i]; }

  /// Volume of the cell [r_i - dr/2, r_i + dr/2] (clipped at 0 and r_max).
  double cell_volume(std::size_t i) const { return volumes_[i]; }

  Field zeros() const { return Field(size(), 0.0); }

  /// Index of the node nearest to R; R = infinity (or beyond r_max) maps to the last node.
  std::size_t snap(double R) const {
    if (std::isnan(R) || R < 0.0) {
      throw std::invalid_argument("radial grid: negative ball radius");
    }
    if (!std::isfinite(R) || R >= r_max_) return node_count_;
    return static_cast<std::size_t>(std::llround(R / dr_));
  }

  /// Distance between R and the node it snaps to (zero for R = infinity).
  double snap_distance(double R) const {
    if (!std::isfinite(R)) return 0.0;
    return std::abs(R - r(snap(R)));
  }

  template <class F>
  Field sample(F&& fn) const {
    Field out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(r(i));
    return out;
  }

  bool operator==(const RadialGrid& other) const {
    return n_dim_ == other.n_dim_ && dr_ == other.dr_ && node_count_ == other.node_count_;
  }

 private:
  int n_dim_;
  double dr_;
  double r_max_;
  std::size_t node_count_;
  double sphere_area_;
  std::vector<double> weights_;
  std::vector<double> volumes_;
};

inline RadialGrid make_grid(int n_dim, double dr, double r_max) {
  return RadialGrid(n_dim, dr, r_max);
}

/// The pair (u, du/dt) at time t. `ur` optionally carries an exact radial
/// derivative (oracle states); when empty, functionals difference u.
struct FieldState {
  Field u;
  Field ut;
  double t = 0.0;
  Field ur;

  bool has_exact_gradient() const { return !ur.empty(); }
};

inline FieldState zero_state(const RadialGrid& grid, double t = 0.0) {
  return FieldState{grid.zeros(), grid.zeros(), t, {}};
}

/// (u, u_t, t) -> (u, -u_t, -t): the state of u(-t) read off a forward run of (f, -g).
inline FieldState time_reflect(FieldState s) {
  for (double& v : s.ut) v = -v;
  s.t = -s.t;
  return s;
}

/// Integral of q over the ball B_R (R snapped to the nearest node, infinity -> r_max).
inline double integrate_ball(std::span<const double> q, const RadialGrid& grid,
                             double R = std::numeric_limits<double>::infinity()) {
  if (q.size() != grid.size()) {
    throw std::invalid_argument("integrate_ball: field size does not match grid");
  }
  const std::size_t m = grid.snap(R);
  if (m == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 1; i < m; ++i) sum += grid.weight(i) * q[i];
  sum += 0.5 * grid.weight(m) * q[m];
  return sum;
}

/// Midpoint-cell sum of q over the whole grid; the measure the solver conserves.
inline double integrate_cells(std::span<const double> q, const RadialGrid& grid) {
  if (q.size() != grid.size()) {
    throw std::invalid_argument("integrate_cells: field size does not match grid");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) sum += grid.cell_volume(i) * q[i];
  return sum;
}

/// Integral over the shell R1 < |x| < R2.
inline double integrate_shell(std::span<const double> q, const RadialGrid& grid, double R1,
                              double R2) {
  return integrate_ball(q, grid, R2) - integrate_ball(q, grid, R1);
}

/// Running ball integrals: out[m] = integral over B_{r_m}. One pass, O(N).
inline void cumulative_ball_integral(std::span<const double> q, const RadialGrid& grid,
                                     std::span<double> out) {
  out[0] = 0.0;
  double interior = 0.0;
  for (std::size_t m = 1; m < q.size(); ++m) {
    out[m] = interior + 0.5 * grid.weight(m) * q[m];
    interior += grid.weight(m) * q[m];
  }
}

}  // namespace nlwm
