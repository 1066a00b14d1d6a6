#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlwm/initial_data.hpp"
#include "nlwm/observer.hpp"
#include "nlwm/radial_grid.hpp"
#include "nlwm/weights.hpp"

namespace nlwm {

/// |u|^{p}, with fast paths for the integer critical powers of n = 3, 4, 6.
inline double abs_pow(double u, double p) {
  const double a = std::abs(u);
  if (p == 6.0) {
    const double a2 = a * a;
    return a2 * a2 * a2;
  }
  if (p == 4.0) {
    const double a2 = a * a;
    return a2 * a2;
  }
  if (p == 3.0) return a * a * a;
  return a == 0.0 ? 0.0 : std::exp(p * std::log(a));
}

/// u |u|^{p-2}.
inline double signed_pow(double u, double p) {
  if (p == 6.0) {
    const double u2 = u * u;
    return u2 * u2 * u;
  }
  if (p == 4.0) return u * u * u;
  if (p == 3.0) return u * std::abs(u);
  const double a = std::abs(u);
  if (a == 0.0) return 0.0;
  return std::copysign(std::exp((p - 1.0) * std::log(a)), u);
}

/// Exact d_r u when the state carries it, centered differences otherwise.
inline Field gradient_of(const FieldState& s, const RadialGrid& grid) {
  if (s.has_exact_gradient()) return s.ur;
  return radial_derivative(s.u, grid);
}

struct EnergyReport {
  double kinetic = 0.0;
  double gradient = 0.0;
  double potential = 0.0;
  double total = 0.0;
  double t = 0.0;
};

/// int u_t^2 + |grad u|^2 + (2 lambda / 2*) |u|^{2*} dx. States with an exact gradient
/// use trapezoid quadrature; solver states use cell volumes and face differences, the
/// discrete energy the scheme conserves.
inline EnergyReport energy(const FieldState& s, double lambda, const RadialGrid& grid) {
  const double p = grid.critical_exponent();
  const std::size_t n = s.u.size();
  Field kin(n), pot(n);
  for (std::size_t i = 0; i < n; ++i) {
    kin[i] = s.ut[i] * s.ut[i];
    pot[i] = abs_pow(s.u[i], p);
  }
  EnergyReport e;
  if (s.has_exact_gradient()) {
    Field grad(n);
    for (std::size_t i = 0; i < n; ++i) grad[i] = s.ur[i] * s.ur[i];
    e.kinetic = integrate_ball(kin, grid);
    e.gradient = integrate_ball(grad, grid);
    e.potential = 2.0 * lambda / p * integrate_ball(pot, grid);
  } else {
    e.kinetic = integrate_cells(kin, grid);
    e.gradient = gradient_energy(s.u, grid);
    e.potential = 2.0 * lambda / p * integrate_cells(pot, grid);
  }
  e.total = e.kinetic + e.gradient + e.potential;
  e.t = s.t;
  return e;
}

/// Energy of the initial pair (f, g), using exact derivatives when available.
inline EnergyReport data_energy(const InitialData& d, double lambda, const RadialGrid& grid) {
  FieldState s{d.f, d.g, 0.0, {}};
  if (d.f_exact) s.ur = grid.sample(d.f_exact.d1);
  return energy(s, lambda, grid);
}

/// (int |u|^q dx)^{1/q}.
inline double lp_norm(std::span<const double> u, const RadialGrid& grid, double q) {
  Field d(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) d[i] = abs_pow(u[i], q);
  return std::pow(integrate_ball(d, grid), 1.0 / q);
}

/// sup_r (int_{S^{n-1}} |u(r w)|^p dw)^{1/p} = sigma^{1/p} sup |u| for radial u.
inline double sup_sphere_norm(const FieldState& s, const RadialGrid& grid,
                              double p = std::numeric_limits<double>::infinity()) {
  double m = 0.0;
  for (double v : s.u) m = std::max(m, std::abs(v));
  return std::isinf(p) ? m : std::pow(grid.sphere_area(), 1.0 / p) * m;
}

// ---------------------------------------------------------------------------
// Morawetz functionals

/// Space integral of psi'' |d_r u|^2 - 1/4 |u|^2 Delta^2 psi + (lambda/n) |u|^{2*} Delta psi.
/// For radial u the Hessian form grad u D^2 psi grad u reduces to psi'' |d_r u|^2.
inline double morawetz_integrand(const FieldState& s, const WeightSamples& psi, double lambda,
                                 const RadialGrid& grid) {
  const Field ur = gradient_of(s, grid);
  const double p = grid.critical_exponent();
  const double c = lambda / grid.n_dim();
  Field d(s.u.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double u = s.u[i];
    d[i] = psi.d2[i] * ur[i] * ur[i] - 0.25 * u * u * psi.bilaplacian[i] +
           c * abs_pow(u, p) * psi.laplacian[i];
  }
  return integrate_ball(d, grid);
}

/// M = int u_t (psi' d_r u + 1/2 Delta psi u) dx.
inline double morawetz_action(const FieldState& s, const WeightSamples& psi,
                              const RadialGrid& grid) {
  const Field ur = gradient_of(s, grid);
  Field d(s.u.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = s.ut[i] * (psi.d1[i] * ur[i] + 0.5 * psi.laplacian[i] * s.u[i]);
  }
  return integrate_ball(d, grid);
}

/// Boundary term -+ int u_t(+-T) grad u . grad psi + 1/2 u_t u Delta psi dx for a
/// state at time +T (sign = +1) or -T (sign = -1).
inline double morawetz_boundary(const FieldState& s, const WeightSamples& psi,
                                const RadialGrid& grid, int sign) {
  return -sign * morawetz_action(s, psi, grid);
}

inline double morawetz_boundary(const FieldState& s, const RadialWeight& psi,
                                const RadialGrid& grid, int sign) {
  return morawetz_boundary(s, sample_weight(psi, grid), grid, sign);
}

struct MorawetzLedger {
  double lhs_accumulated = 0.0;
  double boundary_plus = 0.0;
  double boundary_minus = 0.0;
  double T = 0.0;
  double target = 0.0;

  double boundary_sum() const { return boundary_plus + boundary_minus; }
  double residual() const { return lhs_accumulated - boundary_sum(); }
};

inline void morawetz_observe(MorawetzLedger& ledger, const FieldState& s, const WeightSamples& psi,
                             double lambda, const RadialGrid& grid, double dt_weight) {
  ledger.lhs_accumulated += dt_weight * morawetz_integrand(s, psi, lambda, grid);
}

inline void morawetz_observe(MorawetzLedger& ledger, const FieldState& s, const RadialWeight& psi,
                             double lambda, const RadialGrid& grid, double dt_weight) {
  require_morawetz(psi, grid.r_max());
  morawetz_observe(ledger, s, sample_weight(psi, grid), lambda, grid, dt_weight);
}

/// Feeds a MorawetzLedger from a (two-sided) run; the weight is audited once.
class MorawetzObserver : public Observer {
 public:
  MorawetzObserver(const RadialWeight& psi, double lambda, const RadialGrid& grid)
      : grid_(grid), lambda_(lambda) {
    require_morawetz(psi, grid.r_max());
    psi_ = sample_weight(psi, grid);
  }

  void observe(const FieldState& s, const StepInfo& info) override {
    morawetz_observe(ledger_, s, psi_, lambda_, grid_, info.time_weight);
  }

  /// Closes the ledger with the states at +T and at -T (the latter already reflected).
  void finish(const FieldState& at_plus, const FieldState& at_minus, double energy0) {
    ledger_.T = at_plus.t;
    ledger_.boundary_plus = morawetz_boundary(at_plus, psi_, grid_, +1);
    ledger_.boundary_minus = morawetz_boundary(at_minus, psi_, grid_, -1);
    ledger_.target = psi_.d1_at_infinity * energy0;
  }

  const MorawetzLedger& ledger() const { return ledger_; }
  const WeightSamples& samples() const { return psi_; }

 private:
  RadialGrid grid_;
  double lambda_;
  WeightSamples psi_;
  MorawetzLedger ledger_;
};

// ---------------------------------------------------------------------------
// Virial functionals

/// Space integral of (u_t^2 - |grad u|^2 - lambda |u|^{2*}) phi + 1/2 |u|^2 Delta phi.
inline double virial_integrand(const FieldState& s, const WeightSamples& phi, double lambda,
                               const RadialGrid& grid) {
  const Field ur = gradient_of(s, grid);
  const double p = grid.critical_exponent();
  Field d(s.u.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double u = s.u[i];
    d[i] = (s.ut[i] * s.ut[i] - ur[i] * ur[i] - lambda * abs_pow(u, p)) * phi.eval[i] +
           0.5 * u * u * phi.laplacian[i];
  }
  return integrate_ball(d, grid);
}

/// int u_t u phi dx.
inline double pairing(const FieldState& s, const WeightSamples& phi, const RadialGrid& grid) {
  Field d(s.u.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = s.ut[i] * s.u[i] * phi.eval[i];
  return integrate_ball(d, grid);
}

inline double pairing(const FieldState& s, const RadialWeight& phi, const RadialGrid& grid) {
  require_virial(phi);
  return pairing(s, sample_weight(phi, grid), grid);
}

/// +- int u_t(+-T) u(+-T) phi dx.
inline double virial_boundary(const FieldState& s, const WeightSamples& phi,
                              const RadialGrid& grid, int sign) {
  return sign * pairing(s, phi, grid);
}

inline double virial_boundary(const FieldState& s, const RadialWeight& phi,
                              const RadialGrid& grid, int sign) {
  require_virial(phi);
  return virial_boundary(s, sample_weight(phi, grid), grid, sign);
}

struct VirialLedger {
  double lhs_accumulated = 0.0;
  double boundary_plus = 0.0;
  double boundary_minus = 0.0;
  double T = 0.0;

  double boundary_sum() const { return boundary_plus + boundary_minus; }
  double residual() const { return lhs_accumulated - boundary_sum(); }
};

inline void virial_observe(VirialLedger& ledger, const FieldState& s, const WeightSamples& phi,
                           double lambda, const RadialGrid& grid, double dt_weight) {
  ledger.lhs_accumulated += dt_weight * virial_integrand(s, phi, lambda, grid);
}

inline void virial_observe(VirialLedger& ledger, const FieldState& s, const RadialWeight& phi,
                           double lambda, const RadialGrid& grid, double dt_weight) {
  require_virial(phi);
  virial_observe(ledger, s, sample_weight(phi, grid), lambda, grid, dt_weight);
}

class VirialObserver : public Observer {
 public:
  VirialObserver(const RadialWeight& phi, double lambda, const RadialGrid& grid)
      : grid_(grid), lambda_(lambda) {
    require_virial(phi);
    phi_ = sample_weight(phi, grid);
  }

  void observe(const FieldState& s, const StepInfo& info) override {
    virial_observe(ledger_, s, phi_, lambda_, grid_, info.time_weight);
  }

  void finish(const FieldState& at_plus, const FieldState& at_minus) {
    ledger_.T = at_plus.t;
    ledger_.boundary_plus = virial_boundary(at_plus, phi_, grid_, +1);
    ledger_.boundary_minus = virial_boundary(at_minus, phi_, grid_, -1);
  }

  const VirialLedger& ledger() const { return ledger_; }

 private:
  RadialGrid grid_;
  double lambda_;
  WeightSamples phi_;
  VirialLedger ledger_;
};

// ---------------------------------------------------------------------------
// Flux, defect, conformal energy

/// int u_t grad u . grad psi dx = int u_t d_r u psi'(r) dx.
inline double flux(const FieldState& s, const WeightSamples& psi, const RadialGrid& grid) {
  const Field ur = gradient_of(s, grid);
  Field d(s.u.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = s.ut[i] * ur[i] * psi.d1[i];
  return integrate_ball(d, grid);
}

inline double flux(const FieldState& s, const RadialWeight& psi, const RadialGrid& grid) {
  return flux(s, sample_weight(psi, grid), grid);
}

/// int u_t^2 - |grad u|^2 dx.
inline double equipartition_defect(const FieldState& s, const RadialGrid& grid) {
  const Field ur = gradient_of(s, grid);
  Field d(s.u.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = s.ut[i] * s.ut[i] - ur[i] * ur[i];
  return integrate_ball(d, grid);
}

/// int |u_t + sign d_r u|^2 dx.
inline double wave_defect(const FieldState& s, const RadialGrid& grid, int sign) {
  const Field ur = gradient_of(s, grid);
  Field d(s.u.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double v = s.ut[i] + sign * ur[i];
    d[i] = v * v;
  }
  return integrate_ball(d, grid);
}

struct ConformalReport {
  double T = 0.0;
  double Q = 0.0;
  double rhs_cap = 0.0;
  double plus_wave = 0.0;
  double minus_wave = 0.0;
  double interior = 0.0;
};

/// int |x|^2 (|grad f|^2 + g^2) dx.
inline double conformal_cap(const InitialData& data, const RadialGrid& grid) {
  const Field fr = data.f_exact ? grid.sample(data.f_exact.d1) : radial_derivative(data.f, grid);
  Field d(fr.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = grid.r(i);
    d[i] = r * r * (fr[i] * fr[i] + data.g[i] * data.g[i]);
  }
  return integrate_ball(d, grid);
}

inline ConformalReport conformal(const FieldState& s, const InitialData& data,
                                 const RadialGrid& grid) {
  const Field ur = gradient_of(s, grid);
  const double T = s.t;
  const std::size_t n = s.u.size();
  Field q(n), plus(n), minus(n), e(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = grid.r(i);
    const double ut = s.ut[i], g = ur[i];
    e[i] = ut * ut + g * g;
    q[i] = (T * T + r * r) * e[i] + 4.0 * T * r * g * ut;
    plus[i] = (T + r) * (T + r) * (ut + g) * (ut + g);
    minus[i] = (T - r) * (T - r) * (ut - g) * (ut - g);
  }
  ConformalReport rep;
  rep.T = T;
  rep.Q = integrate_ball(q, grid);
  rep.rhs_cap = conformal_cap(data, grid);
  rep.plus_wave = integrate_ball(plus, grid);
  rep.minus_wave = integrate_ball(minus, grid);
  rep.interior = integrate_ball(e, grid, 0.5 * std::abs(T));
  return rep;
}

// ---------------------------------------------------------------------------
// Space-time accumulators

enum class LocalizedKind {
  radial_grad,
  tangential_grad,
  full_grad,
  spacetime_full,
  lagrangian,
  l2star,
  mass,
};

inline std::string to_string(LocalizedKind k) {
  switch (k) {
    case LocalizedKind::radial_grad: return "radial_grad";
    case LocalizedKind::tangential_grad: return "tangential_grad";
    case LocalizedKind::full_grad: return "full_grad";
    case LocalizedKind::spacetime_full: return "spacetime_full";
    case LocalizedKind::lagrangian: return "lagrangian";
    case LocalizedKind::l2star: return "l2star";
    case LocalizedKind::mass: return "mass";
  }
  return "?";
}

/// Running int int_{B_R} (density) dx dt for a set of radii, for all kinds at
/// once. Tangential densities vanish for radial states; linear modes feed them
/// through `add_tangential`.
class LocalizedEnergyAccumulator : public Observer {
 public:
  static constexpr std::size_t kKinds = 7;

  LocalizedEnergyAccumulator(const RadialGrid& grid, std::vector<double> radii)
      : grid_(grid), radii_(std::move(radii)) {
    for (double R : radii_) {
      if (R > grid.r_max() + 1e-12) {
        throw std::invalid_argument("localized_energy: R exceeds r_max");
      }
      nodes_.push_back(grid.snap(R));
    }
    sums_.assign(radii_.size() * kKinds, 0.0);
    weighted_l2star_ = 0.0;
    cum_.resize(grid.size());
    dens_.resize(grid.size());
  }

  void observe(const FieldState& s, const StepInfo& info) override {
    const Field ur = gradient_of(s, grid_);
    const double p = grid_.critical_exponent();
    const double w = info.time_weight;
    auto accumulate = [&](LocalizedKind kind, auto&& density) {
      for (std::size_t i = 0; i < dens_.size(); ++i) dens_[i] = density(i);
      cumulative_ball_integral(dens_, grid_, cum_);
      for (std::size_t j = 0; j < nodes_.size(); ++j) {
        sums_[j * kKinds + static_cast<std::size_t>(kind)] += w * cum_[nodes_[j]];
      }
    };
    accumulate(LocalizedKind::radial_grad, [&](std::size_t i) { return ur[i] * ur[i]; });
    accumulate(LocalizedKind::lagrangian,
               [&](std::size_t i) { return s.ut[i] * s.ut[i] - ur[i] * ur[i]; });
    accumulate(LocalizedKind::spacetime_full,
               [&](std::size_t i) { return s.ut[i] * s.ut[i] + ur[i] * ur[i]; });
    accumulate(LocalizedKind::l2star, [&](std::size_t i) { return abs_pow(s.u[i], p); });
    accumulate(LocalizedKind::mass, [&](std::size_t i) { return s.u[i] * s.u[i]; });
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      sums_[j * kKinds + static_cast<std::size_t>(LocalizedKind::full_grad)] =
          sums_[j * kKinds + static_cast<std::size_t>(LocalizedKind::radial_grad)] +
          sums_[j * kKinds + static_cast<std::size_t>(LocalizedKind::tangential_grad)];
    }
    double wl = 0.0;
    for (std::size_t i = 1; i < dens_.size(); ++i) {
      const double r = grid_.r(i);
      const double half = (i + 1 == dens_.size()) ? 0.5 : 1.0;
      wl += half * grid_.weight(i) * abs_pow(s.u[i], p) / std::sqrt(1.0 + r * r);
    }
    weighted_l2star_ += w * wl;
  }

  /// Adds a tangential-gradient density sampled on the grid (linear modes).
  void add_tangential(std::span<const double> density, double time_weight) {
    for (std::size_t i = 0; i < dens_.size(); ++i) dens_[i] = density[i];
    cumulative_ball_integral(dens_, grid_, cum_);
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      sums_[j * kKinds + static_cast<std::size_t>(LocalizedKind::tangential_grad)] +=
          time_weight * cum_[nodes_[j]];
      sums_[j * kKinds + static_cast<std::size_t>(LocalizedKind::full_grad)] +=
          time_weight * cum_[nodes_[j]];
    }
  }

  /// (1/R) int int_{B_R} density, or (1/R^3) int int |u|^2 for kind = mass.
  double value(std::size_t radius_index, LocalizedKind kind) const {
    const double R = radii_.at(radius_index);
    const double raw = sums_[radius_index * kKinds + static_cast<std::size_t>(kind)];
    return kind == LocalizedKind::mass ? raw / (R * R * R) : raw / R;
  }

  double raw(std::size_t radius_index, LocalizedKind kind) const {
    return sums_[radius_index * kKinds + static_cast<std::size_t>(kind)];
  }

  /// Un-normalized int int |u|^{2*} / <x> dx dt.
  double weighted_l2star() const { return weighted_l2star_; }

  const std::vector<double>& radii() const { return radii_; }

 private:
  RadialGrid grid_;
  std::vector<double> radii_;
  std::vector<std::size_t> nodes_;
  std::vector<double> sums_;
  double weighted_l2star_;
  Field cum_;
  Field dens_;
};

inline double localized_energy(const LocalizedEnergyAccumulator& acc, double R,
                               LocalizedKind kind) {
  const auto& radii = acc.radii();
  for (std::size_t j = 0; j < radii.size(); ++j) {
    if (radii[j] == R) return acc.value(j, kind);
  }
  throw std::invalid_argument("localized_energy: radius not tracked by accumulator");
}

/// (int (int |u|^q dx)^{p/q} dt)^{1/p} over the observed horizon.
class MixedNormAccumulator : public Observer {
 public:
  MixedNormAccumulator(const RadialGrid& grid, double p, double q) : grid_(grid), p_(p), q_(q) {
    if (p < 1.0 || q < 1.0) throw std::invalid_argument("mixed_norm: exponents must be >= 1");
  }

  void observe(const FieldState& s, const StepInfo& info) override {
    const double lq = lp_norm(s.u, grid_, q_);
    sum_ += info.time_weight * std::pow(lq, p_);
  }

  double value() const { return std::pow(sum_, 1.0 / p_); }

 private:
  RadialGrid grid_;
  double p_, q_;
  double sum_ = 0.0;
};

}  // namespace nlwm
