#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlwm/functionals.hpp"
#include "nlwm/initial_data.hpp"
#include "nlwm/observer.hpp"
#include "nlwm/radial_grid.hpp"

namespace nlwm {

struct SolverConfig {
  double lambda = 0.0;
  int n_dim = 3;
  double dr = 0.02;
  double dt = 0.01;
  double t_max = 10.0;
  double r_max = 100.0;
  /// Amplitude bound; 0 selects 1e3 x the initial sup of |f| and |g|.
  double blowup_threshold = 0.0;
  double boundary_margin = 5.0;
  /// Calibrated relative energy drift bound; the tripwire fires at 10x.
  double drift_bound = 1e-4;
  std::size_t sample_stride = 0;
  std::size_t energy_stride = 10;

  double cfl() const { return dt / dr; }
  std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_max / dt)); }
  RadialGrid grid() const { return RadialGrid(n_dim, dr, r_max); }
};

inline void validate(const SolverConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    throw std::invalid_argument("dt: must be positive");
  }
  if (cfg.cfl() > 0.9) {
    throw std::invalid_argument("dt: CFL ratio dt/dr = " + std::to_string(cfg.cfl()) +
                                " exceeds 0.9");
  }
  if (!(cfg.t_max >= 0.0) || !std::isfinite(cfg.t_max)) {
    throw std::invalid_argument("t_max: must be finite and non-negative");
  }
  if (cfg.blowup_threshold < 0.0 || std::isnan(cfg.blowup_threshold)) {
    throw std::invalid_argument("blowup_threshold: must be positive");
  }
  if (!(cfg.drift_bound > 0.0)) throw std::invalid_argument("drift_bound: must be positive");
  if (!std::isfinite(cfg.lambda)) throw std::invalid_argument("lambda: must be finite");
}

/// Rejects compact data whose light cone reaches the outer boundary before t_max.
inline void validate_domain(const SolverConfig& cfg, const RadialGrid& grid,
                            const InitialData& data) {
  validate(cfg);
  if (grid.n_dim() != cfg.n_dim || grid.dr() != cfg.dr) {
    throw std::invalid_argument("solver: grid does not match configuration");
  }
  if (data.f.size() != grid.size() || data.g.size() != grid.size()) {
    throw std::invalid_argument("solver: data size does not match grid");
  }
  if (data.is_compact() &&
      grid.r_max() < data.support_radius + cfg.t_max + cfg.boundary_margin) {
    throw std::invalid_argument("r_max: " + std::to_string(grid.r_max()) +
                                " < support + t_max + boundary_margin = " +
                                std::to_string(data.support_radius + cfg.t_max +
                                               cfg.boundary_margin));
  }
}

/// Discrete radial Laplacian in flux form: cell volumes ((i+1/2)^n - (i-1/2)^n)/n and
/// face areas (i +- 1/2)^{n-1} (in units of dr). It agrees with the centered stencil
/// to O(dr^2), reduces to 2n(u_1 - u_0)/dr^2 at the origin, and is symmetric in the
/// discrete measure, so the semi-discrete energy is conserved exactly. The last node
/// is a fixed boundary and gets zero.
class RadialLaplacian {
 public:
  explicit RadialLaplacian(const RadialGrid& grid)
      : n_(grid.n_dim()), inv_dr2_(1.0 / (grid.dr() * grid.dr())) {
    const std::size_t N = grid.size();
    cp_.resize(N);
    cm_.resize(N);
    const double n = n_;
    for (std::size_t i = 1; i < N; ++i) {
      const double x = static_cast<double>(i);
      const double vol = (std::pow(x + 0.5, n) - std::pow(x - 0.5, n)) / n;
      cp_[i] = std::pow(x + 0.5, n - 1.0) / vol * inv_dr2_;
      cm_[i] = std::pow(x - 0.5, n - 1.0) / vol * inv_dr2_;
    }
  }

  void apply(std::span<const double> u, std::span<double> out) const {
    const std::size_t N = u.size();
    out[0] = 2.0 * n_ * (u[1] - u[0]) * inv_dr2_;
    for (std::size_t i = 1; i + 1 < N; ++i) {
      out[i] = cp_[i] * (u[i + 1] - u[i]) - cm_[i] * (u[i] - u[i - 1]);
    }
    out[N - 1] = 0.0;
  }

 private:
  int n_;
  double inv_dr2_;
  std::vector<double> cp_, cm_;
};

/// a(u) = Delta_r u - lambda u |u|^{2*-2}.
inline void acceleration(const RadialLaplacian& lap, double lambda, double p,
                         std::span<const double> u, std::span<double> a) {
  lap.apply(u, a);
  if (lambda != 0.0) {
    for (std::size_t i = 0; i + 1 < u.size(); ++i) a[i] -= lambda * signed_pow(u[i], p);
  }
}

/// One velocity-Verlet step. Stand-alone form; `evolve` reuses the acceleration
/// across steps.
inline FieldState step(const FieldState& state, const SolverConfig& cfg) {
  validate(cfg);
  const RadialGrid grid = cfg.grid();
  if (state.u.size() != grid.size()) throw std::invalid_argument("step: state size mismatch");
  const RadialLaplacian lap(grid);
  const double p = grid.critical_exponent();
  FieldState s{state.u, state.ut, state.t, {}};
  Field a(s.u.size());
  const std::size_t last = s.u.size() - 1;
  acceleration(lap, cfg.lambda, p, s.u, a);
  for (std::size_t i = 0; i < last; ++i) s.ut[i] += 0.5 * cfg.dt * a[i];
  for (std::size_t i = 0; i < last; ++i) s.u[i] += cfg.dt * s.ut[i];
  acceleration(lap, cfg.lambda, p, s.u, a);
  for (std::size_t i = 0; i < last; ++i) s.ut[i] += 0.5 * cfg.dt * a[i];
  s.ut[last] = 0.0;
  s.t += cfg.dt;
  return s;
}

struct Trajectory {
  int direction = 1;
  std::vector<FieldState> samples;
  std::vector<double> energy_t;
  std::vector<double> energy_value;
  FieldState final_state;
  bool blew_up = false;
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
  std::string blowup_reason;
  double energy0 = 0.0;
  double max_drift = 0.0;
  double max_amplitude = 0.0;
  std::size_t steps_taken = 0;
};

/// Evolves (f, g) to t_max or blow-up. Observers see every step, including t = 0,
/// with trapezoid weights. direction = -1 evolves (f, -g) and tags observers so
/// that they can assemble integrals over [-T, 0].
inline Trajectory evolve(const InitialData& data, const SolverConfig& cfg,
                         std::span<Observer* const> observers = {}, int direction = 1) {
  const RadialGrid grid = cfg.grid();
  validate_domain(cfg, grid, data);
  const RadialLaplacian lap(grid);
  const double p = grid.critical_exponent();
  const std::size_t N = grid.size();
  const std::size_t last = N - 1;
  const std::size_t total = cfg.steps();

  FieldState s{data.f, data.g, 0.0, {}};
  if (direction < 0) {
    for (double& v : s.ut) v = -v;
  }
  s.ut[last] = 0.0;

  double sup0 = 0.0;
  for (std::size_t i = 0; i < N; ++i) sup0 = std::max({sup0, std::abs(data.f[i]), std::abs(data.g[i])});
  const double threshold = cfg.blowup_threshold > 0.0
                               ? cfg.blowup_threshold
                               : (sup0 > 0.0 ? 1e3 * sup0 : std::numeric_limits<double>::infinity());

  Trajectory traj;
  traj.direction = direction;
  const EnergyReport e0 = energy(s, cfg.lambda, grid);
  traj.energy0 = e0.total;
  const double escale = std::max({std::abs(e0.total), e0.kinetic + e0.gradient, 1e-300});
  traj.energy_t.push_back(0.0);
  traj.energy_value.push_back(e0.total);
  if (cfg.sample_stride > 0) traj.samples.push_back(s);

  auto notify = [&](std::size_t k) {
    if (observers.empty()) return;
    StepInfo info;
    info.direction = direction;
    info.step = k;
    info.total_steps = total;
    info.time_weight = (k == 0 || k == total) ? 0.5 * cfg.dt : cfg.dt;
    if (total == 0) info.time_weight = 0.0;
    for (Observer* o : observers) o->observe(s, info);
  };
  notify(0);

  Field a(N);
  acceleration(lap, cfg.lambda, p, s.u, a);
  const double h = 0.5 * cfg.dt;
  for (std::size_t k = 1; k <= total; ++k) {
    double amp = 0.0;
    for (std::size_t i = 0; i < last; ++i) {
      s.ut[i] += h * a[i];
      s.u[i] += cfg.dt * s.ut[i];
      amp = std::max(amp, std::abs(s.u[i]));
    }
    acceleration(lap, cfg.lambda, p, s.u, a);
    for (std::size_t i = 0; i < last; ++i) s.ut[i] += h * a[i];
    s.t = static_cast<double>(k) * cfg.dt;
    traj.steps_taken = k;
    traj.max_amplitude = std::max(traj.max_amplitude, amp);

    if (!(amp <= threshold)) {
      traj.blew_up = true;
      traj.blowup_time = s.t;
      traj.blowup_reason = std::isfinite(amp) ? "amplitude" : "non-finite";
      break;
    }
    if (k % std::max<std::size_t>(cfg.energy_stride, 1) == 0 || k == total) {
      const double e = energy(s, cfg.lambda, grid).total;
      const double drift = std::abs(e - traj.energy0) / escale;
      traj.energy_t.push_back(s.t);
      traj.energy_value.push_back(e);
      traj.max_drift = std::max(traj.max_drift, drift);
      if (!(drift <= 10.0 * cfg.drift_bound)) {
        traj.blew_up = true;
        traj.blowup_time = s.t;
        traj.blowup_reason = "energy_drift";
        break;
      }
    }
    notify(k);
    if (cfg.sample_stride > 0 && k % cfg.sample_stride == 0) traj.samples.push_back(s);
  }
  traj.final_state = s;
  return traj;
}

inline Trajectory evolve(const InitialData& data, const SolverConfig& cfg,
                         std::initializer_list<Observer*> observers, int direction = 1) {
  return evolve(data, cfg, std::span<Observer* const>(observers.begin(), observers.size()),
                direction);
}

/// Forward run of (f, g) and forward run of (f, -g); the second realizes u(-t).
inline std::pair<Trajectory, Trajectory> evolve_two_sided(const InitialData& data,
                                                          const SolverConfig& cfg,
                                                          std::span<Observer* const> observers = {}) {
  Trajectory fwd = evolve(data, cfg, observers, +1);
  Trajectory bwd = evolve(data, cfg, observers, -1);
  return {std::move(fwd), std::move(bwd)};
}

inline std::pair<Trajectory, Trajectory> evolve_two_sided(const InitialData& data,
                                                          const SolverConfig& cfg,
                                                          std::initializer_list<Observer*> observers) {
  return evolve_two_sided(data, cfg,
                          std::span<Observer* const>(observers.begin(), observers.size()));
}

/// Max |u| over r > r0, used to assert that no signal reached the outer boundary.
inline double outer_amplitude(const FieldState& s, const RadialGrid& grid, double r0) {
  double m = 0.0;
  for (std::size_t i = grid.snap(r0); i < s.u.size(); ++i) m = std::max(m, std::abs(s.u[i]));
  return m;
}

/// CSV checkpoint: a comment line with t, then "r,u,ut" rows.
inline void write_checkpoint(const FieldState& s, const RadialGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint file " + path);
  char buf[128];
  std::snprintf(buf, sizeof buf, "# t=%.17g\n", s.t);
  out << buf << "r,u,ut\n";
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.r(i), s.u[i], s.ut[i]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for checkpoint file " + path);
}

}  // namespace nlwm
