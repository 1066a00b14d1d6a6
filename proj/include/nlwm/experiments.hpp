#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "nlwm/config.hpp"
#include "nlwm/free_wave.hpp"
#include "nlwm/functionals.hpp"
#include "nlwm/initial_data.hpp"
#include "nlwm/solver.hpp"
#include "nlwm/weights.hpp"

namespace nlwm {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Verdict {
  std::string label;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string metric;
};

struct ExperimentReport {
  std::string name;
  std::string anchor;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<Series> metrics;
  std::vector<Verdict> verdicts;
  double runtime_seconds = 0.0;

  bool passed() const {
    return !verdicts.empty() &&
           std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  }

  Series& series(const std::string& label) {
    for (auto& s : metrics) {
      if (s.label == label) return s;
    }
    metrics.push_back(Series{label, {}, {}});
    return metrics.back();
  }

  const Series* find_series(const std::string& label) const {
    for (const auto& s : metrics) {
      if (s.label == label) return &s;
    }
    return nullptr;
  }

  void point(const std::string& label, double x, double y) {
    Series& s = series(label);
    s.x.push_back(x);
    s.y.push_back(y);
  }

  /// measured <= tolerance.
  void at_most(const std::string& label, double measured, double tolerance,
               const std::string& metric) {
    verdicts.push_back(Verdict{label, measured <= tolerance, measured, tolerance, metric});
  }

  /// |measured - target| <= tolerance; `measured` stored as given.
  void within(const std::string& label, double measured, double target, double tolerance,
              const std::string& metric) {
    verdicts.push_back(
        Verdict{label, std::abs(measured - target) <= tolerance, measured, tolerance, metric});
  }

  void check(const std::string& label, bool pass, double measured, double tolerance,
             const std::string& metric) {
    verdicts.push_back(Verdict{label, pass, measured, tolerance, metric});
  }

  const Verdict* verdict(const std::string& label) const {
    for (const auto& v : verdicts) {
      if (v.label == label) return &v;
    }
    return nullptr;
  }
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// |y_i| non-increasing, ignoring increases of at most `noise` (absolute).
inline bool monotone_approach(const std::vector<double>& gaps, double noise = 0.0) {
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    if (std::abs(gaps[i]) > std::abs(gaps[i - 1]) + noise) return false;
  }
  return true;
}

namespace exp_detail {

/// Grid nodes needed so that data of effective radius `support` evolved for time T
/// never reaches the boundary.
inline double run_extent(const RunConfig& cfg, double support, double T) {
  return std::min(cfg.r_max, support + T + cfg.boundary_margin);
}

/// Radius outside which the configured data is zero to double precision.
inline double effective_support(const RunConfig& cfg) {
  if (cfg.data == "bump") return cfg.rho;
  if (cfg.data == "gaussian") return 6.2 * cfg.width;
  return cfg.r_max;
}

inline InitialData make_data(const RunConfig& cfg, const RadialGrid& grid) {
  const DataMode mode = parse_mode(cfg.mode);
  if (cfg.data == "gaussian") return gaussian_bump(grid, cfg.amplitude, cfg.width, mode);
  if (cfg.data == "bump") return compact_bump(grid, cfg.rho, mode, cfg.amplitude);
  if (cfg.data == "ground_state") return scaled_ground_state(grid, cfg.alpha);
  throw ConfigError("data", "unknown generator '" + cfg.data + "'");
}

inline SolverConfig solver_config(const RunConfig& cfg, double lambda, double dr, double T,
                                  double r_max) {
  SolverConfig s;
  s.lambda = lambda;
  s.n_dim = cfg.n_dim;
  s.dr = dr;
  s.dt = cfg.dt / cfg.dr * dr;
  s.t_max = T;
  s.r_max = r_max;
  s.boundary_margin = cfg.boundary_margin;
  return s;
}

inline RadialWeight make_weight(const std::string& name, const RunConfig& cfg) {
  const int n = cfg.n_dim;
  if (name == "bracket") return weight_bracket(n);
  if (name == "cutoff") return rescale_morawetz(cutoff_family(cfg.k), cfg.R, n);
  if (name == "smoothed_abs") return weight_smoothed_abs(n, cfg.smoothing);
  if (name == "abs") return weight_abs(n);
  if (name == "constant") return weight_constant(n, 1.0);
  throw ConfigError("weights", "unknown weight '" + name + "'");
}

/// Short label form of a parameter value.
inline std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string lambda_tag(double lambda) {
  return lambda > 0 ? "lambda=+" + tag(lambda) : "lambda=" + tag(lambda);
}

/// Records a failed verdict if the run blew up; returns true when it did.
inline bool blew_up(ExperimentReport& rep, const Trajectory& t, const std::string& what) {
  if (!t.blew_up) return false;
  rep.check("no blow-up: " + what + " (" + t.blowup_reason + ")", false, t.blowup_time, 0.0,
            "blowup_time");
  rep.point("blowup_time", 0.0, t.blowup_time);
  return true;
}

/// Records |u| near r_max for the final state of a completed run.
inline void watch_boundary(ExperimentReport& rep, const Trajectory& tr, const RadialGrid& grid) {
  if (tr.blew_up) return;
  Series& s = rep.series("boundary_amplitude");
  s.x.push_back(static_cast<double>(s.x.size()));
  s.y.push_back(outer_amplitude(tr.final_state, grid, grid.r_max() - 1.0));
}

inline FieldState trajectory_state_at(const Trajectory& tr, double t) {
  for (const auto& s : tr.samples) {
    if (std::abs(s.t - t) < 1e-9) return s;
  }
  throw std::logic_error("trajectory has no sample at t = " + tag(t));
}

inline InitialData data_from_state(const FieldState& s) {
  InitialData d;
  d.f = s.u;
  d.g = s.ut;
  d.label = "state";
  return d;
}

/// Energy-space distance (int |grad(a-b)|^2 + |a_t - b_t|^2)^{1/2}.
inline double energy_distance(const FieldState& a, const FieldState& b, const RadialGrid& grid) {
  Field du(a.u.size()), dv(a.u.size());
  for (std::size_t i = 0; i < du.size(); ++i) {
    du[i] = a.u[i] - b.u[i];
    dv[i] = (a.ut[i] - b.ut[i]) * (a.ut[i] - b.ut[i]);
  }
  return std::sqrt(gradient_energy(du, grid) + integrate_ball(dv, grid));
}

constexpr double kLambdas[] = {0.0, 1.0, -1.0};
constexpr double kRefinement[] = {0.04, 0.02, 0.01};

}  // namespace exp_detail

// ---------------------------------------------------------------------------

inline ExperimentReport run_energy_conservation(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kDriftTol = 1e-4;
  ExperimentReport rep;
  rep.anchor = "conservation of the energy is satisfied";
  const double T = cfg.t_max;
  for (double lambda : kLambdas) {
    const SolverConfig sc =
        solver_config(cfg, lambda, cfg.dr, T, run_extent(cfg, effective_support(cfg), T));
    const RadialGrid grid = sc.grid();
    const InitialData data = make_data(cfg, grid);
    const std::string ltag = lambda_tag(lambda);
    if (lambda < 0) {
      const ThresholdReport th = kenig_merle_check(data, grid);
      rep.check("focusing data below the ground-state threshold", th.verdict ==
                ThresholdVerdict::subthreshold_global, th.energy_lhs, th.energy_rhs,
                "threshold_energy");
      rep.point("threshold_energy", 0.0, th.energy_lhs);
      rep.point("threshold_energy", 1.0, th.energy_rhs);
    }
    const Trajectory tr = evolve(data, sc);
    watch_boundary(rep, tr, grid);
    const std::string label = "relative_drift[" + ltag + "]";
    const double scale = std::max(std::abs(tr.energy0), 1e-300);
    for (std::size_t i = 0; i < tr.energy_t.size(); ++i) {
      rep.point(label, tr.energy_t[i], std::abs(tr.energy_value[i] - tr.energy0) / scale);
    }
    if (blew_up(rep, tr, ltag)) continue;
    rep.at_most("max relative energy drift " + ltag, tr.max_drift, kDriftTol, label);
  }
  return rep;
}

inline ExperimentReport run_morawetz_identity(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kResidualTol = 1e-3;
  constexpr double kMinOrder = 1.8;
  constexpr double kResidualT = 20.0;
  constexpr double kFreeLimitTol = 0.05;
  constexpr double kNonlinearLimitTol = 0.08;
  // Trend wiggles below the identity residual tolerance are discretization noise.
  constexpr double kTrendNoise = kResidualTol;
  const std::vector<double> limit_T = {10.0, 20.0, 30.0, 50.0};
  ExperimentReport rep;
  rep.anchor = "Then we have the following identity:";

  std::vector<RadialWeight> weights;
  for (const auto& name : cfg.weights) {
    RadialWeight w = make_weight(name, cfg);
    const AuditReport a = audit_morawetz(w, cfg.r_max);
    rep.point("audit[" + name + "]", 0.0, a.pass ? 1.0 : 0.0);
    rep.check("hypothesis audit " + name + (a.pass ? "" : ": " + a.reason), a.pass,
              a.pass ? 1.0 : 0.0, 1.0, "audit[" + name + "]");
    weights.push_back(std::move(w));
  }
  if (!rep.passed()) return rep;

  // Finite-T identity under refinement.
  for (double lambda : kLambdas) {
    std::map<std::string, std::vector<double>> residuals;
    std::vector<double> drs;
    for (double dr : kRefinement) {
      const SolverConfig sc = solver_config(cfg, lambda, dr, kResidualT,
                                            run_extent(cfg, effective_support(cfg), kResidualT));
      const RadialGrid grid = sc.grid();
      const InitialData data = make_data(cfg, grid);
      std::vector<MorawetzObserver> obs;
      obs.reserve(weights.size());
      for (const auto& w : weights) obs.emplace_back(w, lambda, grid);
      std::vector<Observer*> ptrs;
      for (auto& o : obs) ptrs.push_back(&o);
      auto [fwd, bwd] = evolve_two_sided(data, sc, ptrs);
      watch_boundary(rep, fwd, grid);
      watch_boundary(rep, bwd, grid);
      if (blew_up(rep, fwd, lambda_tag(lambda)) || blew_up(rep, bwd, lambda_tag(lambda))) break;
      drs.push_back(dr);
      for (std::size_t j = 0; j < obs.size(); ++j) {
        obs[j].finish(fwd.final_state, time_reflect(bwd.final_state), fwd.energy0);
        const auto& L = obs[j].ledger();
        const double rel = std::abs(L.residual()) / (fwd.energy0 * weights[j].d1_at_infinity);
        const std::string label = "residual[" + weights[j].name + "," + lambda_tag(lambda) + "]";
        rep.point(label, dr, rel);
        residuals[weights[j].name].push_back(rel);
      }
    }
    if (drs.size() != std::size(kRefinement)) continue;
    for (const auto& w : weights) {
      const auto& r = residuals[w.name];
      const std::string label = "residual[" + w.name + "," + lambda_tag(lambda) + "]";
      rep.at_most("finite-T residual " + w.name + " " + lambda_tag(lambda) + " at dr=0.01",
                  r.back(), kResidualTol, label);
      const double order = loglog_slope(drs, r);
      rep.point("order[" + w.name + "]", lambda, order);
      rep.check("refinement order " + w.name + " " + lambda_tag(lambda), order >= kMinOrder,
                order, kMinOrder, "order[" + w.name + "]");
    }
  }

  // Boundary sum against psi'(inf) E(0) as T grows: free compact data on the oracle.
  {
    RunConfig bump = cfg;
    bump.data = "bump";
    bump.mode = "displacement";
    bump.amplitude = 1.0;
    const double Tmax = limit_T.back();
    const RadialGrid grid(cfg.n_dim == 3 ? 3 : cfg.n_dim, cfg.dr,
                          run_extent(cfg, cfg.rho, Tmax));
    if (cfg.n_dim != 3) {
      throw ConfigError("n_dim", "the d'Alembert oracle legs require n_dim = 3");
    }
    const InitialData data = make_data(bump, grid);
    const Dalembert3D oracle(data, grid);
    const double E = data_energy(data, 0.0, grid).total;
    for (const auto& w : weights) {
      const WeightSamples ws = sample_weight(w, grid);
      const std::string label = "boundary_gap[" + w.name + ",oracle]";
      std::vector<double> gaps;
      for (double T : limit_T) {
        const double sum = morawetz_boundary(oracle.state(T), ws, grid, +1) +
                           morawetz_boundary(oracle.state(-T), ws, grid, -1);
        const double target = w.d1_at_infinity * E;
        gaps.push_back((sum - target) / target);
        rep.point(label, T, gaps.back());
      }
      rep.at_most("boundary sum vs psi'(inf)E at T=50 " + w.name + " (oracle)",
                  std::abs(gaps.back()), kFreeLimitTol, label);
      rep.check("monotone approach " + w.name + " (oracle)", monotone_approach(gaps, kTrendNoise),
                std::abs(gaps.back()), kFreeLimitTol, label);
    }
  }

  // Same limit on small-data nonlinear runs.
  for (double lambda : {1.0, -1.0}) {
    const double Tmax = limit_T.back();
    SolverConfig sc = solver_config(cfg, lambda, cfg.dr, Tmax,
                                    run_extent(cfg, effective_support(cfg), Tmax));
    sc.sample_stride = static_cast<std::size_t>(std::llround(10.0 / sc.dt));
    const RadialGrid grid = sc.grid();
    const InitialData data = make_data(cfg, grid);
    auto [fwd, bwd] = evolve_two_sided(data, sc);
    watch_boundary(rep, fwd, grid);
    watch_boundary(rep, bwd, grid);
    if (blew_up(rep, fwd, lambda_tag(lambda)) || blew_up(rep, bwd, lambda_tag(lambda))) continue;
    for (const auto& w : weights) {
      const WeightSamples ws = sample_weight(w, grid);
      const std::string label = "boundary_gap[" + w.name + "," + lambda_tag(lambda) + "]";
      std::vector<double> gaps;
      for (double T : limit_T) {
        const FieldState plus = trajectory_state_at(fwd, T);
        const FieldState minus = time_reflect(trajectory_state_at(bwd, T));
        const double sum = morawetz_boundary(plus, ws, grid, +1) +
                           morawetz_boundary(minus, ws, grid, -1);
        const double target = w.d1_at_infinity * fwd.energy0;
        gaps.push_back((sum - target) / target);
        rep.point(label, T, gaps.back());
      }
      rep.at_most("boundary sum vs psi'(inf)E at T=50 " + w.name + " " + lambda_tag(lambda),
                  std::abs(gaps.back()), kNonlinearLimitTol, label);
      rep.check("monotone approach " + w.name + " " + lambda_tag(lambda),
                monotone_approach(gaps, kTrendNoise),
                std::abs(gaps.back()), kNonlinearLimitTol, label);
    }
  }
  return rep;
}

inline ExperimentReport run_localized_limits(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kRadialTol = 0.05;
  constexpr double kDecayRatio = 0.25;
  constexpr double kCheckR = 20.0;
  ExperimentReport rep;
  rep.anchor = "the radial derivative and the tangential part";
  const double Rmax = *std::max_element(cfg.radii.begin(), cfg.radii.end());
  const double Rmin = *std::min_element(cfg.radii.begin(), cfg.radii.end());
  const double T = Rmax + cfg.t_margin;
  auto index_of = [&](double R) -> std::size_t {
    for (std::size_t j = 0; j < cfg.radii.size(); ++j) {
      if (cfg.radii[j] == R) return j;
    }
    throw ConfigError("radii", "must include R = " + tag(R));
  };

  // Oracle free data: (1/R) int int_{B_R} |d_r u|^2 -> E(0).
  {
    if (cfg.n_dim != 3) throw ConfigError("n_dim", "the oracle legs require n_dim = 3");
    const RadialGrid grid(3, cfg.dr, std::max(Rmax + 1.0, 10.0 * cfg.rho));
    RunConfig bump = cfg;
    bump.data = "bump";
    bump.amplitude = 1.0;
    const InitialData data = make_data(bump, grid);
    const Dalembert3D oracle(data, grid);
    const double E = data_energy(data, 0.0, grid).total;
    LocalizedEnergyAccumulator acc(grid, cfg.radii);
    oracle_evolve(oracle, cfg.dt, T, {&acc}, +1);
    oracle_evolve(oracle, cfg.dt, T, {&acc}, -1);
    for (std::size_t j = 0; j < cfg.radii.size(); ++j) {
      rep.point("radial_grad_over_E[oracle]", cfg.radii[j],
                acc.value(j, LocalizedKind::radial_grad) / E);
      rep.point("mass[oracle]", cfg.radii[j], acc.value(j, LocalizedKind::mass));
    }
    const double v = acc.value(index_of(kCheckR), LocalizedKind::radial_grad);
    rep.within("(1/R) int int |d_r u|^2 vs E(0) at R=20 (oracle)", v / E, 1.0, kRadialTol,
               "radial_grad_over_E[oracle]");
  }

  // Nonlinear defocusing run: (1/R) int int |u|^{2*} -> 0.
  {
    const double lambda = 1.0;
    const SolverConfig sc =
        solver_config(cfg, lambda, cfg.dr, T, run_extent(cfg, effective_support(cfg), T));
    const RadialGrid grid = sc.grid();
    const InitialData data = make_data(cfg, grid);
    LocalizedEnergyAccumulator acc(grid, cfg.radii);
    auto [fwd, bwd] = evolve_two_sided(data, sc, {&acc});
    watch_boundary(rep, fwd, grid);
    watch_boundary(rep, bwd, grid);
    if (!blew_up(rep, fwd, "l2star run") && !blew_up(rep, bwd, "l2star run")) {
      for (std::size_t j = 0; j < cfg.radii.size(); ++j) {
        rep.point("l2star[lambda=+1]", cfg.radii[j], acc.value(j, LocalizedKind::l2star));
        rep.point("radial_grad_over_E[lambda=+1]", cfg.radii[j],
                  acc.value(j, LocalizedKind::radial_grad) / fwd.energy0);
      }
      rep.point("weighted_l2star[lambda=+1]", T, acc.weighted_l2star());
      const double ratio = acc.value(index_of(Rmax), LocalizedKind::l2star) /
                           acc.value(index_of(Rmin), LocalizedKind::l2star);
      rep.at_most("l2star localized ratio R=max/R=min", ratio, kDecayRatio, "l2star[lambda=+1]");
    }
  }

  // Linear l = 1 mode: (1/R) int int |grad_tau u|^2 -> 0.
  {
    SolverConfig sc = solver_config(cfg, 0.0, cfg.dr, T, run_extent(cfg, cfg.rho, T));
    const RadialGrid grid = sc.grid();
    LocalizedEnergyAccumulator acc(grid, cfg.radii);
    const ModeState m0 = mode_bump(grid, 1, cfg.rho);
    auto feed = [&](const ModeState& m, double w) { acc.add_tangential(tangential_density(m, grid), w); };
    evolve_mode(m0, T, sc, feed);
    ModeState back = m0;
    for (double& v : back.at) v = -v;
    evolve_mode(back, T, sc, feed);
    for (std::size_t j = 0; j < cfg.radii.size(); ++j) {
      rep.point("tangential[l=1]", cfg.radii[j], acc.value(j, LocalizedKind::tangential_grad));
    }
    const double ratio = acc.value(index_of(Rmax), LocalizedKind::tangential_grad) /
                         acc.value(index_of(Rmin), LocalizedKind::tangential_grad);
    rep.at_most("tangential localized ratio R=max/R=min (l=1)", ratio, kDecayRatio,
                "tangential[l=1]");
  }
  return rep;
}

inline ExperimentReport run_equipartition(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kResidualTol = 1e-3;
  constexpr double kMinOrder = 1.8;
  constexpr double kResidualT = 20.0;
  constexpr double kDefectTol = 0.05;
  constexpr double kFactorTwoTol = 0.08;
  constexpr double kCheckR = 20.0;
  ExperimentReport rep;
  rep.anchor = "In particular we get:";
  const RadialWeight phi = rescale_virial(cutoff_family(cfg.k), cfg.R, cfg.n_dim);
  {
    const AuditReport a = audit_virial(phi);
    rep.point("audit[" + phi.name + "]", 0.0, a.pass ? 1.0 : 0.0);
    rep.check("virial hypothesis audit " + phi.name + (a.pass ? "" : ": " + a.reason), a.pass,
              a.pass ? 1.0 : 0.0, 1.0, "audit[" + phi.name + "]");
    if (!a.pass) return rep;
  }

  for (double lambda : kLambdas) {
    std::vector<double> drs, res;
    for (double dr : kRefinement) {
      const SolverConfig sc = solver_config(cfg, lambda, dr, kResidualT,
                                            run_extent(cfg, effective_support(cfg), kResidualT));
      const RadialGrid grid = sc.grid();
      const InitialData data = make_data(cfg, grid);
      VirialObserver obs(phi, lambda, grid);
      auto [fwd, bwd] = evolve_two_sided(data, sc, {&obs});
      watch_boundary(rep, fwd, grid);
      watch_boundary(rep, bwd, grid);
      if (blew_up(rep, fwd, lambda_tag(lambda)) || blew_up(rep, bwd, lambda_tag(lambda))) break;
      obs.finish(fwd.final_state, time_reflect(bwd.final_state));
      const double rel = std::abs(obs.ledger().residual()) / fwd.energy0;
      drs.push_back(dr);
      res.push_back(rel);
      rep.point("virial_residual[" + lambda_tag(lambda) + "]", dr, rel);
    }
    if (drs.size() != std::size(kRefinement)) continue;
    const std::string label = "virial_residual[" + lambda_tag(lambda) + "]";
    rep.at_most("finite-T virial residual " + lambda_tag(lambda) + " at dr=0.01", res.back(),
                kResidualTol, label);
    const double order = loglog_slope(drs, res);
    rep.point("virial_order", lambda, order);
    rep.check("virial refinement order " + lambda_tag(lambda), order >= kMinOrder, order,
              kMinOrder, "virial_order");
  }

  const double T = kCheckR + cfg.t_margin;
  std::vector<double> radii = cfg.radii;
  if (std::find(radii.begin(), radii.end(), kCheckR) == radii.end()) radii.push_back(kCheckR);
  std::sort(radii.begin(), radii.end());
  for (double lambda : kLambdas) {
    const SolverConfig sc =
        solver_config(cfg, lambda, cfg.dr, T, run_extent(cfg, effective_support(cfg), T));
    const RadialGrid grid = sc.grid();
    const InitialData data = make_data(cfg, grid);
    std::vector<double> rs;
    for (double R : radii) {
      if (R <= grid.r_max()) rs.push_back(R);
    }
    LocalizedEnergyAccumulator acc(grid, rs);
    auto [fwd, bwd] = evolve_two_sided(data, sc, {&acc});
    watch_boundary(rep, fwd, grid);
    watch_boundary(rep, bwd, grid);
    if (blew_up(rep, fwd, lambda_tag(lambda)) || blew_up(rep, bwd, lambda_tag(lambda))) continue;
    const double E = fwd.energy0;
    const double p = grid.critical_exponent();
    const std::string ltag = lambda_tag(lambda);
    double defect = 0.0, two = 0.0;
    for (std::size_t j = 0; j < rs.size(); ++j) {
      const double d = acc.value(j, LocalizedKind::lagrangian) / E;
      const double f = (acc.value(j, LocalizedKind::spacetime_full) +
                        2.0 * lambda / p * acc.value(j, LocalizedKind::l2star)) /
                       E;
      rep.point("defect_over_E[" + ltag + "]", rs[j], d);
      rep.point("full_over_E[" + ltag + "]", rs[j], f);
      if (rs[j] == kCheckR) {
        defect = d;
        two = f;
      }
    }
    rep.at_most("localized equipartition defect at R=20 " + ltag, std::abs(defect), kDefectTol,
                "defect_over_E[" + ltag + "]");
    rep.within("factor-2 identity at R=20 " + ltag, two / 2.0, 1.0, kFactorTwoTol,
               "full_over_E[" + ltag + "]");
  }
  return rep;
}

inline ExperimentReport run_free_asymptotics(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kDefectTol = 1e-6;
  constexpr double kWaveTol = 1e-6;
  constexpr double kInteriorTol = 1e-10;
  constexpr double kChainSlack = 1e-9;
  constexpr double kTangentialRatio = 0.05;
  constexpr double kModeDrift = 1e-4;
  constexpr double kSlope = -1.0;
  constexpr double kSlopeTol = 0.1;
  const std::vector<double> huygens_t = {2.5, 3.0, 5.0, 10.0, 20.0, 40.0};
  const std::vector<double> conformal_T = {5.0, 10.0, 20.0, 40.0};
  ExperimentReport rep;
  rep.anchor = "the following facts occur";
  if (cfg.n_dim != 3) throw ConfigError("n_dim", "the oracle legs require n_dim = 3");
  const double Tmax = huygens_t.back();
  const RadialGrid grid(3, cfg.dr, run_extent(cfg, cfg.rho, Tmax));
  RunConfig bump = cfg;
  bump.data = "bump";
  bump.mode = "displacement";
  bump.amplitude = 1.0;
  const InitialData data = make_data(bump, grid);
  const Dalembert3D oracle(data, grid);
  const double E = data_energy(data, 0.0, grid).total;

  double worst_defect = 0.0, worst_wave = 0.0, worst_interior = 0.0;
  std::vector<double> ts, norms;
  for (double t : huygens_t) {
    const FieldState s = oracle.state(t);
    const double defect = std::abs(equipartition_defect(s, grid)) / E;
    const double wave = wave_defect(s, grid, +1) / E;
    const ConformalReport c = conformal(s, data, grid);
    rep.point("defect_over_E", t, defect);
    rep.point("plus_defect_over_E", t, wave);
    rep.point("interior_energy", t, c.interior);
    if (t > 2.0 * cfg.rho) {
      worst_defect = std::max(worst_defect, defect);
      worst_wave = std::max(worst_wave, wave);
      worst_interior = std::max(worst_interior, c.interior);
    }
    if (t >= 5.0) {
      ts.push_back(t);
      norms.push_back(std::sqrt(wave * E));
    }
  }
  rep.at_most("post-Huygens |equipartition defect| / E", worst_defect, kDefectTol,
              "defect_over_E");
  rep.at_most("post-Huygens int |u_t + d_r u|^2 / E", worst_wave, kWaveTol, "plus_defect_over_E");
  rep.at_most("post-Huygens interior-cone energy", worst_interior, kInteriorTol,
              "interior_energy");
  const double slope = loglog_slope(ts, norms);
  rep.point("plus_norm_slope", 0.0, slope);
  rep.within("||u_t + d_r u||_2 decay slope", slope, kSlope, kSlopeTol, "plus_norm_slope");

  bool q_ok = true, waves_ok = true, interior_ok = true;
  double q_margin = -1e300, w_margin = -1e300, i_margin = -1e300;
  for (double T : conformal_T) {
    const ConformalReport c = conformal(oracle.state(T), data, grid);
    rep.point("conformal_Q", T, c.Q);
    rep.point("conformal_rhs_cap", T, c.rhs_cap);
    rep.point("plus_minus_waves", T, c.plus_wave + c.minus_wave);
    rep.point("interior_times_T2", T, c.interior * T * T);
    const double slack = kChainSlack * c.rhs_cap;
    q_ok = q_ok && c.Q <= c.rhs_cap + slack;
    waves_ok = waves_ok && c.plus_wave + c.minus_wave <= 4.0 * c.rhs_cap + slack;
    interior_ok = interior_ok && c.interior <= 16.0 * c.rhs_cap / (T * T) + slack;
    q_margin = std::max(q_margin, c.Q / c.rhs_cap);
    w_margin = std::max(w_margin, (c.plus_wave + c.minus_wave) / (4.0 * c.rhs_cap));
    i_margin = std::max(i_margin, c.interior * T * T / (16.0 * c.rhs_cap));
  }
  rep.check("conformal Q <= rhs_cap at every sampled T", q_ok, q_margin, 1.0, "conformal_Q");
  rep.check("plus/minus waves <= 4 rhs_cap", waves_ok, w_margin, 1.0, "plus_minus_waves");
  rep.check("interior <= 16 rhs_cap / T^2", interior_ok, i_margin, 1.0, "interior_times_T2");

  // Tangential decay and mode energy for l = 1.
  {
    constexpr double kModeRho = 4.0;
    const SolverConfig sc = solver_config(cfg, 0.0, cfg.dr, Tmax, run_extent(cfg, kModeRho, Tmax));
    const RadialGrid mg = sc.grid();
    const ModeState m0 = mode_bump(mg, 1, kModeRho);
    const ModeEnergy e0 = mode_energy(m0, mg);
    double drift = 0.0;
    std::size_t k = 0;
    const std::size_t every = static_cast<std::size_t>(std::llround(1.0 / sc.dt));
    const ModeState m = evolve_mode(m0, Tmax, sc, [&](const ModeState& s, double) {
      if (k++ % every != 0) return;
      const ModeEnergy e = mode_energy(s, mg);
      drift = std::max(drift, std::abs(e.total - e0.total) / e0.total);
      rep.point("tangential_energy[l=1]", s.t, e.tangential);
    });
    const double ratio = tangential_energy(m, mg) / e0.tangential;
    rep.at_most("tangential energy ratio t=40 / t=0 (l=1)", ratio, kTangentialRatio,
                "tangential_energy[l=1]");
    rep.point("mode_energy_drift", Tmax, drift);
    rep.at_most("mode energy drift (l=1)", drift, kModeDrift, "mode_energy_drift");
  }
  return rep;
}

inline ExperimentReport run_flux_pairing_limits(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kFluxTol = 0.05;
  constexpr double kNonlinearFluxTol = 0.08;
  constexpr double kPairingTol = 0.02;
  constexpr double kPairingFrom = 40.0;
  const std::vector<double> times = {10.0, 20.0, 30.0, 40.0, 50.0};
  ExperimentReport rep;
  rep.anchor = "Assume moreover that u(t, x) satsifies";
  const RadialWeight psi = weight_bracket(cfg.n_dim);
  const RadialWeight phi = rescale_virial(cutoff_family(1), 1.0, cfg.n_dim);
  {
    const AuditReport a = audit_virial(phi);
    rep.check("pairing weight decay audit", a.pass, a.pass ? 1 : 0, 1, "audit[" + phi.name + "]");
    rep.point("audit[" + phi.name + "]", 0.0, a.pass ? 1 : 0);
    if (!a.pass) return rep;
  }
  const double Tmax = times.back();
  auto assess = [&](const std::string& who, double E, const std::function<FieldState(double)>& at,
                    const RadialGrid& grid, double flux_tol) {
    const WeightSamples ws = sample_weight(psi, grid);
    const WeightSamples ps = sample_weight(phi, grid);
    double worst_pair = 0.0;
    double last_flux = 0.0;
    for (double T : times) {
      const FieldState plus = at(T);
      const FieldState minus = time_reflect(at(-T));
      const double fp = flux(plus, ws, grid) / E;
      const double fm = flux(minus, ws, grid) / E;
      const double pp = pairing(plus, ps, grid) / E;
      rep.point("flux_over_E[" + who + ",+T]", T, fp);
      rep.point("flux_over_E[" + who + ",-T]", T, fm);
      rep.point("pairing_over_E[" + who + "]", T, pp);
      if (T >= kPairingFrom) worst_pair = std::max(worst_pair, std::abs(pp));
      last_flux = fp;
    }
    rep.within("flux(T=50) vs -psi'(inf)E/2 " + who, last_flux, -0.5, flux_tol,
               "flux_over_E[" + who + ",+T]");
    rep.at_most("|pairing(T)| / E for T >= 40 " + who, worst_pair, kPairingTol,
                "pairing_over_E[" + who + "]");
  };

  {
    if (cfg.n_dim != 3) throw ConfigError("n_dim", "the oracle legs require n_dim = 3");
    const RadialGrid grid(3, cfg.dr, run_extent(cfg, cfg.rho, Tmax));
    RunConfig bump = cfg;
    bump.data = "bump";
    bump.amplitude = 1.0;
    const InitialData data = make_data(bump, grid);
    const Dalembert3D oracle(data, grid);
    const double E = data_energy(data, 0.0, grid).total;
    // States of the (f, -g) run read off u(-t): at(-T) must be u(-T) itself.
    assess("oracle", E, [&](double t) { return oracle.state(t); }, grid, kFluxTol);
  }
  for (double lambda : {1.0, -1.0}) {
    SolverConfig sc = solver_config(cfg, lambda, cfg.dr, Tmax,
                                    run_extent(cfg, effective_support(cfg), Tmax));
    sc.sample_stride = static_cast<std::size_t>(std::llround(10.0 / sc.dt));
    const RadialGrid grid = sc.grid();
    const InitialData data = make_data(cfg, grid);
    auto [fwd, bwd] = evolve_two_sided(data, sc);
    watch_boundary(rep, fwd, grid);
    watch_boundary(rep, bwd, grid);
    if (blew_up(rep, fwd, lambda_tag(lambda)) || blew_up(rep, bwd, lambda_tag(lambda))) continue;
    assess(lambda_tag(lambda), fwd.energy0,
           [&](double t) {
             return t >= 0 ? trajectory_state_at(fwd, t)
                           : time_reflect(trajectory_state_at(bwd, -t));
           },
           grid, kNonlinearFluxTol);
  }
  return rep;
}

inline ExperimentReport run_l2star_decay(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kSlope = -2.0 / 3.0;
  constexpr double kSlopeTol = 0.1;
  constexpr double kT0 = 10.0, kT1 = 80.0, kStep = 5.0;
  ExperimentReport rep;
  rep.anchor = "The aim of this appendix is to show";
  if (cfg.n_dim != 3) throw ConfigError("n_dim", "the oracle legs require n_dim = 3");
  const double p = critical_exponent(cfg.n_dim);
  {
    const RadialGrid grid(3, cfg.dr, run_extent(cfg, cfg.rho, kT1));
    RunConfig bump = cfg;
    bump.data = "bump";
    bump.amplitude = 1.0;
    const InitialData data = make_data(bump, grid);
    const Dalembert3D oracle(data, grid);
    std::vector<double> ts, ns;
    for (double t = kT0; t <= kT1 + 1e-9; t += kStep) {
      const double n = lp_norm(oracle.state(t).u, grid, p);
      ts.push_back(t);
      ns.push_back(n);
      rep.point("l2star_norm[oracle]", t, n);
    }
    const double slope = loglog_slope(ts, ns);
    rep.point("l2star_slope[oracle]", 0.0, slope);
    rep.within("L^{2*} log-log slope on [10, 80] (oracle)", slope, kSlope, kSlopeTol,
               "l2star_slope[oracle]");
  }
  {
    SolverConfig sc =
        solver_config(cfg, 1.0, cfg.dr, kT1, run_extent(cfg, effective_support(cfg), kT1));
    sc.sample_stride = static_cast<std::size_t>(std::llround(kStep / sc.dt));
    const RadialGrid grid = sc.grid();
    const Trajectory tr = evolve(make_data(cfg, grid), sc);
    watch_boundary(rep, tr, grid);
    if (!blew_up(rep, tr, "lambda=+1")) {
      std::vector<double> ns;
      for (const auto& s : tr.samples) {
        const double n = lp_norm(s.u, grid, p);
        rep.point("l2star_norm[lambda=+1]", s.t, n);
        if (s.t >= kT0 - 1e-9) ns.push_back(n);
      }
      rep.check("L^{2*} norm decreasing on [10, 80] (lambda=+1)", monotone_approach(ns),
                ns.back() / ns.front(), 1.0, "l2star_norm[lambda=+1]");
    }
  }
  return rep;
}

inline ExperimentReport run_no_rate_scaling(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kRatioTol = 0.01;
  const std::vector<double> eps_list = {0.5, 0.25};
  ExperimentReport rep;
  rep.anchor = "there cannot exist a--priori any rate";
  if (cfg.n_dim != 3) throw ConfigError("n_dim", "the oracle legs require n_dim = 3");
  const RadialGrid grid(3, cfg.dr, cfg.r_max);
  const double p = critical_exponent(3);
  const InitialData base = gaussian_bump(grid, cfg.amplitude, cfg.width, DataMode::velocity);
  const double ref = lp_norm(dalembert_3d(base, 1.0, grid).u, grid, p);
  rep.point("reference_norm", 1.0, ref);
  for (double eps : eps_list) {
    InitialData d;
    d.f = grid.zeros();
    d.g = rescale_data(base.g, eps, grid);
    d.label = "rescaled";
    const double n = lp_norm(dalembert_3d(d, 1.0 / eps, grid).u, grid, p);
    const InitialData exact = rescale_energy_invariant(grid, base, eps);
    const double ne = lp_norm(dalembert_3d(exact, 1.0 / eps, grid).u, grid, p);
    rep.point("ratio[interpolated]", eps, n / ref);
    rep.point("ratio[closed_form]", eps, ne / ref);
    rep.within("||S(1/eps) h_eps|| / ||S(1) h|| eps=" + tag(eps), n / ref, 1.0,
               kRatioTol, "ratio[interpolated]");
  }
  return rep;
}

inline ExperimentReport run_kenig_merle_dichotomy(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kDr = 0.01;
  constexpr double kRmax = 100.0;
  constexpr double kT = 20.0;
  constexpr double kBoundFactor = 2.0;
  constexpr double kPohozaevTol = 1e-2;
  ExperimentReport rep;
  rep.anchor = "blow--up occur provided";
  RunConfig local = cfg;
  local.dr = kDr;
  local.dt = cfg.dt / cfg.dr * kDr;
  const SolverConfig base = solver_config(local, -1.0, kDr, kT, kRmax);
  const RadialGrid grid = base.grid();
  const int n = grid.n_dim();
  const double p = grid.critical_exponent();

  // Pohozaev identity for W with analytic tails beyond r_max.
  const Field W = ground_state_W(grid);
  const auto wp = ground_state_profile(n);
  Field g2(W.size()), wp2(W.size());
  for (std::size_t i = 0; i < W.size(); ++i) {
    const double d = wp.d1(grid.r(i));
    g2[i] = d * d;
    wp2[i] = abs_pow(W[i], p);
  }
  const double tail_grad = ground_state_gradient_tail(n, grid.r_max());
  const double A = integrate_ball(g2, grid) + tail_grad;
  boost::math::quadrature::exp_sinh<double> tail;
  const double B =
      integrate_ball(wp2, grid) +
      grid.sphere_area() * tail.integrate(
                               [&](double s) {
                                 const double r = grid.r_max() + s;
                                 return abs_pow(wp.value(r), p) * std::pow(r, n - 1);
                               },
                               0.0, std::numeric_limits<double>::infinity());
  rep.point("pohozaev", 0.0, A);
  rep.point("pohozaev", 1.0, B);
  rep.at_most("Pohozaev |int|grad W|^2 - int W^{2*}| / int|grad W|^2", std::abs(A - B) / A,
              kPohozaevTol, "pohozaev");

  const double supW = 1.0;
  for (double alpha : {0.9, 1.1}) {
    const std::string ltag = "alpha=" + tag(alpha);
    const InitialData data = scaled_ground_state(grid, alpha);
    const ThresholdReport th = kenig_merle_check(data, grid);
    rep.point("threshold_energy[" + ltag + "]", 0.0, th.energy_lhs);
    rep.point("threshold_energy[" + ltag + "]", 1.0, th.energy_rhs);
    rep.point("threshold_gradient[" + ltag + "]", 0.0, th.grad_f);
    rep.point("threshold_gradient[" + ltag + "]", 1.0, th.grad_W);
    // Closed form along the ray: E(alpha W) = alpha^2 A - (2/2*) alpha^{2*} A.
    const double closed = alpha * alpha * A - 2.0 / p * std::pow(alpha, p) * A;
    const double closed_W = A - 2.0 / p * A;
    rep.point("ray_energy[" + ltag + "]", alpha, closed / closed_W);
    const ThresholdVerdict expected =
        alpha < 1.0 ? ThresholdVerdict::subthreshold_global : ThresholdVerdict::superthreshold_blowup;
    rep.check("threshold verdict " + ltag + " = " + to_string(expected), th.verdict == expected,
              th.energy_lhs / th.energy_rhs, 1.0, "threshold_energy[" + ltag + "]");
    rep.check("closed-form ray energy below E(W) " + ltag, closed < closed_W, closed / closed_W,
              1.0, "ray_energy[" + ltag + "]");

    SolverConfig sc = base;
    const Trajectory tr = evolve(data, sc);
    rep.point("max_amplitude[" + ltag + "]", tr.blew_up ? tr.blowup_time : kT, tr.max_amplitude);
    if (alpha < 1.0) {
      if (blew_up(rep, tr, ltag)) continue;
      rep.at_most("bounded run sup|u| / sup W " + ltag, tr.max_amplitude / supW, kBoundFactor,
                  "max_amplitude[" + ltag + "]");
    } else {
      rep.point("blowup_time[" + ltag + "]", alpha, tr.blowup_time);
      if (tr.blew_up) rep.point("blowup_reason_is_amplitude[" + ltag + "]", alpha,
                                tr.blowup_reason == "amplitude" ? 1.0 : 0.0);
      rep.check(std::string("blow-up expected: ") + (tr.blew_up ? "observed" : "not observed"),
                tr.blew_up && tr.blowup_time < kT, tr.blew_up ? tr.blowup_time : kT, kT,
                "blowup_time[" + ltag + "]");
    }
  }
  return rep;
}

inline ExperimentReport run_scattering_profile(const RunConfig& cfg) {
  using namespace exp_detail;
  const std::vector<double> times = {10.0, 20.0, 30.0, 40.0};
  ExperimentReport rep;
  rep.anchor = "is asymptotically free";
  const double Tmax = times.back();
  const double extent = run_extent(cfg, effective_support(cfg), 2.0 * Tmax);
  SolverConfig sc = solver_config(cfg, 1.0, cfg.dr, Tmax, extent);
  sc.sample_stride = static_cast<std::size_t>(std::llround(10.0 / sc.dt));
  const RadialGrid grid = sc.grid();
  const InitialData data = make_data(cfg, grid);
  const Trajectory tr = evolve(data, sc);
  watch_boundary(rep, tr, grid);
  if (blew_up(rep, tr, "lambda=+1")) return rep;
  // Candidate free data at t = 0: pull the state at T back with the free flow.
  std::vector<FieldState> candidates;
  for (double T : times) {
    const FieldState s = trajectory_state_at(tr, T);
    SolverConfig back = solver_config(cfg, 0.0, cfg.dr, T, extent);
    const Trajectory b = evolve(data_from_state(time_reflect(s)), back);
    FieldState c = time_reflect(b.final_state);
    c.t = 0.0;
    candidates.push_back(std::move(c));
  }
  const double E = std::sqrt(tr.energy0);
  std::vector<double> gaps;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double d = energy_distance(candidates[i], candidates[i - 1], grid) / E;
    gaps.push_back(d);
    rep.point("candidate_gap", times[i], d);
  }
  rep.check("candidate free data converge (gaps decrease)", monotone_approach(gaps),
            gaps.back() / gaps.front(), 1.0, "candidate_gap");
  return rep;
}

inline ExperimentReport run_convergence_study(const RunConfig& cfg) {
  using namespace exp_detail;
  constexpr double kOrderLo = 1.8, kOrderHi = 2.2;
  constexpr double kRho = 3.0;
  constexpr double kT = 5.0;
  constexpr double kReversibility = 10.0;
  constexpr double kSpeedTol = 1e-12;
  ExperimentReport rep;
  rep.anchor = "artifact plumbing";
  if (cfg.n_dim != 3) throw ConfigError("n_dim", "the oracle legs require n_dim = 3");
  std::vector<double> drs, errs;
  for (double dr : kRefinement) {
    RunConfig bump = cfg;
    bump.data = "bump";
    bump.mode = "displacement";
    bump.rho = kRho;
    bump.amplitude = 1.0;
    const SolverConfig sc = solver_config(cfg, 0.0, dr, kT, kRho + kT + cfg.boundary_margin);
    const RadialGrid grid = sc.grid();
    const InitialData data = make_data(bump, grid);
    const Trajectory tr = evolve(data, sc);
    watch_boundary(rep, tr, grid);
    if (blew_up(rep, tr, "dr=" + tag(dr))) return rep;
    const FieldState exact = dalembert_3d(data, kT, grid);
    double err = 0.0;
    for (std::size_t i = 0; i < exact.u.size(); ++i) {
      err = std::max(err, std::abs(exact.u[i] - tr.final_state.u[i]));
    }
    drs.push_back(dr);
    errs.push_back(err);
    rep.point("sup_error", dr, err);
  }
  const double order = loglog_slope(drs, errs);
  rep.point("order", 0.0, order);
  rep.check("solver-oracle order (fit)", order >= kOrderLo && order <= kOrderHi, order, kOrderHi,
            "order");
  for (std::size_t i = 1; i < drs.size(); ++i) {
    const double o = std::log(errs[i - 1] / errs[i]) / std::log(drs[i - 1] / drs[i]);
    rep.point("order", static_cast<double>(i), o);
    rep.check("solver-oracle order dr=" + tag(drs[i - 1]) + "->" +
                  tag(drs[i]),
              o >= kOrderLo && o <= kOrderHi, o, kOrderHi, "order");
  }

  // Time reversibility.
  {
    const double T = 10.0;
    const SolverConfig sc = solver_config(cfg, 1.0, cfg.dr, T,
                                          run_extent(cfg, effective_support(cfg), T));
    const RadialGrid grid = sc.grid();
    const InitialData data = make_data(cfg, grid);
    const Trajectory fwd = evolve(data, sc);
    watch_boundary(rep, fwd, grid);
    const Trajectory back = evolve(data_from_state(time_reflect(fwd.final_state)), sc);
    const FieldState recovered = time_reflect(back.final_state);
    const FieldState initial{data.f, data.g, 0.0, {}};
    const double rel = energy_distance(recovered, initial, grid) /
                       energy_distance(initial, zero_state(grid), grid);
    rep.point("reversibility_error", cfg.dr, rel);
    rep.at_most("time reversibility (relative energy-norm error)", rel,
                kReversibility * cfg.dr * cfg.dr, "reversibility_error");
  }

  // Finite speed of propagation.
  {
    const double rho = cfg.rho;
    const SolverConfig sc = solver_config(cfg, 0.0, cfg.dr, kT, rho + 2.0 * kT + cfg.boundary_margin);
    const RadialGrid grid = sc.grid();
    RunConfig bump = cfg;
    bump.data = "bump";
    bump.amplitude = 1.0;
    const Trajectory tr = evolve(make_data(bump, grid), sc);
    watch_boundary(rep, tr, grid);
    const double outside = outer_amplitude(tr.final_state, grid, rho + kT + 2.0 * cfg.dr);
    rep.point("outside_cone", kT, outside);
    rep.at_most("amplitude outside the light cone", outside, kSpeedTol, "outside_cone");
  }
  return rep;
}

using ExperimentFn = std::function<ExperimentReport(const RunConfig&)>;

inline const std::map<std::string, ExperimentFn>& experiment_registry() {
  static const std::map<std::string, ExperimentFn> reg = {
      {"energy_conservation", run_energy_conservation},
      {"morawetz_identity", run_morawetz_identity},
      {"localized_limits", run_localized_limits},
      {"equipartition", run_equipartition},
      {"free_asymptotics", run_free_asymptotics},
      {"flux_pairing_limits", run_flux_pairing_limits},
      {"l2star_decay", run_l2star_decay},
      {"no_rate_scaling", run_no_rate_scaling},
      {"kenig_merle_dichotomy", run_kenig_merle_dichotomy},
      {"scattering_profile", run_scattering_profile},
      {"convergence_study", run_convergence_study},
  };
  return reg;
}

class UnknownExperiment : public std::invalid_argument {
 public:
  explicit UnknownExperiment(const std::string& name)
      : std::invalid_argument("unknown experiment '" + name + "'; registered: " +
                              registry_listing()) {}
};

/// Runs a registered experiment with `name` taken from the config.
inline ExperimentReport run(const std::string& name, const RunConfig& cfg) {
  const auto& reg = experiment_registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw UnknownExperiment(name);
  RunConfig c = cfg;
  c.experiment = name;
  validate_config(c);
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep = it->second(c);
  if (const Series* b = rep.find_series("boundary_amplitude")) {
    rep.at_most("solution numerically zero near r_max",
                *std::max_element(b->y.begin(), b->y.end()), 1e-12, b->label);
  }
  rep.name = name;
  rep.params.clear();
  for (const auto& key : config_keys()) rep.params.emplace_back(key, get_key(c, key));
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline ExperimentReport run(const RunConfig& cfg) { return run(cfg.experiment, cfg); }

}  // namespace nlwm
