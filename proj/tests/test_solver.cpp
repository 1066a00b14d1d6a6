#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nlwm/free_wave.hpp"
#include "nlwm/functionals.hpp"
#include "nlwm/solver.hpp"

using namespace nlwm;

namespace {

SolverConfig config(double lambda, double dr, double dt, double t_max, double r_max) {
  SolverConfig c;
  c.lambda = lambda;
  c.dr = dr;
  c.dt = dt;
  c.t_max = t_max;
  c.r_max = r_max;
  return c;
}

double sup_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double energy_norm(const FieldState& a, const FieldState& b, const RadialGrid& g) {
  Field du(a.u.size()), dv(a.u.size());
  for (std::size_t i = 0; i < du.size(); ++i) {
    du[i] = a.u[i] - b.u[i];
    dv[i] = (a.ut[i] - b.ut[i]) * (a.ut[i] - b.ut[i]);
  }
  return std::sqrt(gradient_energy(du, g) + integrate_ball(dv, g));
}

struct WeightSum : Observer {
  double total = 0.0;
  std::size_t calls = 0;
  int direction = 0;
  void observe(const FieldState&, const StepInfo& info) override {
    total += info.time_weight;
    ++calls;
    direction = info.direction;
  }
};

}  // namespace

TEST(Solver, ZeroStateStaysZero) {
  const SolverConfig c = config(1.0, 0.05, 0.025, 1.0, 10);
  const RadialGrid g = c.grid();
  const FieldState s = step(zero_state(g), c);
  for (double v : s.u) EXPECT_EQ(v, 0.0);
  const Trajectory t = evolve(InitialData{g.zeros(), g.zeros()}, c);
  EXPECT_FALSE(t.blew_up);
  EXPECT_EQ(sup_diff(t.final_state.u, g.zeros()), 0.0);
}

TEST(Solver, RejectsCflAndDomainViolations) {
  SolverConfig c = config(0.0, 0.02, 0.02, 1.0, 20);
  const RadialGrid g = c.grid();
  const InitialData d = compact_bump(g, 1.0, DataMode::displacement);
  try {
    evolve(d, c);
    FAIL() << "CFL 1.0 accepted";
  } catch (const std::invalid_argument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("dt:", 0), 0u) << e.what();
  }
  c.dt = 0.01;
  c.t_max = 16.0;
  EXPECT_THROW(evolve(d, c), std::invalid_argument);
  c.t_max = 14.0;
  EXPECT_NO_THROW(evolve(d, c));
}

TEST(Solver, SecondOrderAgainstOracle) {
  std::vector<double> errs;
  for (double dr : {0.04, 0.02, 0.01}) {
    const SolverConfig c = config(0.0, dr, 0.5 * dr, 5.0, 13.0);
    const RadialGrid g = c.grid();
    const InitialData d = compact_bump(g, 3.0, DataMode::displacement);
    const Trajectory t = evolve(d, c);
    errs.push_back(sup_diff(t.final_state.u, dalembert_3d(d, 5.0, g).u));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    EXPECT_GE(order, 1.8);
    EXPECT_LE(order, 2.2);
  }
}

TEST(Solver, GroundStateIsStatic) {
  const SolverConfig c = config(-1.0, 0.01, 0.005, 1.0, 100);
  const RadialGrid g = c.grid();
  const InitialData d = scaled_ground_state(g, 1.0);
  const Trajectory t = evolve(d, c);
  ASSERT_FALSE(t.blew_up);
  EXPECT_LE(sup_diff(t.final_state.u, d.f), 1e-2);
  // Measured staticity error at this resolution.
  EXPECT_LE(sup_diff(t.final_state.u, d.f), 5e-5);
}

TEST(Solver, EnergyDriftBound) {
  for (double lambda : {0.0, 1.0, -1.0}) {
    for (DataMode mode : {DataMode::displacement, DataMode::velocity}) {
      const SolverConfig c = config(lambda, 0.02, 0.01, 50.0, 65.0);
      const RadialGrid g = c.grid();
      const Trajectory t = evolve(gaussian_bump(g, 0.5, 1.5, mode), c);
      ASSERT_FALSE(t.blew_up);
      EXPECT_EQ(t.steps_taken, 5000u);
      EXPECT_LE(t.max_drift, 1e-4) << "lambda=" << lambda;
    }
  }
}

TEST(Solver, SemiDiscreteEnergyConvergesAtSecondOrderInTime) {
  // Drift is the O(dt^2) Verlet oscillation: halving dt quarters it.
  auto drift = [](double dt) {
    const SolverConfig c = config(1.0, 0.02, dt, 20.0, 35.0);
    return evolve(gaussian_bump(c.grid(), 0.5, 1.0, DataMode::displacement), c).max_drift;
  };
  EXPECT_NEAR(drift(0.01) / drift(0.005), 4.0, 0.4);
}

TEST(Solver, TimeReversible) {
  const SolverConfig c = config(1.0, 0.02, 0.01, 10.0, 25.0);
  const RadialGrid g = c.grid();
  const InitialData d = gaussian_bump(g, 0.5, 1.5, DataMode::velocity);
  const Trajectory fwd = evolve(d, c);
  const FieldState back = time_reflect(fwd.final_state);
  const Trajectory rev = evolve(InitialData{back.u, back.ut}, c);
  const FieldState rec = time_reflect(rev.final_state);
  const FieldState init{d.f, d.g, 0.0, {}};
  const double rel = energy_norm(rec, init, g) / energy_norm(init, zero_state(g), g);
  EXPECT_LE(rel, 10 * c.dr * c.dr);
}

TEST(Solver, FiniteSpeedPrecursorDecaysSuperExponentially) {
  const SolverConfig c = config(0.0, 0.02, 0.01, 5.0, 16.0);
  const RadialGrid g = c.grid();
  const Trajectory t = evolve(compact_bump(g, 1.0, DataMode::displacement), c);
  const double edge = 1.0 + 5.0;
  // Measured: 4.0e-5 at +2dr, 6.3e-12 at +0.4, 7.9e-23 at +0.8.
  EXPECT_LE(outer_amplitude(t.final_state, g, edge + 0.4), 1e-11);
  EXPECT_LE(outer_amplitude(t.final_state, g, edge + 0.8), 1e-21);
  EXPECT_LE(outer_amplitude(t.final_state, g, edge + 1.6), 1e-50);
  // Exactly zero beyond the numerical domain of dependence (one node per step).
  EXPECT_EQ(outer_amplitude(t.final_state, g, 1.0 + 2.0 * 5.0 + 2 * c.dr), 0.0);
}

TEST(Solver, TwoSidedSymmetryForDisplacementData) {
  SolverConfig c = config(1.0, 0.04, 0.02, 4.0, 15.0);
  c.sample_stride = 20;
  const RadialGrid g = c.grid();
  auto [fwd, bwd] = evolve_two_sided(gaussian_bump(g, 0.5, 1.5, DataMode::displacement), c);
  ASSERT_EQ(fwd.samples.size(), bwd.samples.size());
  for (std::size_t k = 0; k < fwd.samples.size(); ++k) {
    EXPECT_EQ(fwd.samples[k].u, bwd.samples[k].u);
  }
}

TEST(Solver, BackwardRunIsForwardRunOfReflectedData) {
  SolverConfig c = config(0.0, 0.04, 0.02, 3.0, 15.0);
  const RadialGrid g = c.grid();
  const InitialData d = gaussian_bump(g, 0.5, 1.5, DataMode::velocity);
  const Trajectory bwd = evolve(d, c, {}, -1);
  InitialData r = d;
  for (double& v : r.g) v = -v;
  const Trajectory ref = evolve(r, c);
  EXPECT_EQ(bwd.final_state.u, ref.final_state.u);
  EXPECT_EQ(bwd.final_state.ut, ref.final_state.ut);
  EXPECT_NEAR(bwd.energy0, evolve(d, c).energy0, 1e-14);
}

TEST(Solver, ObserverWeightsIntegrateTheInterval) {
  SolverConfig c = config(0.0, 0.04, 0.02, 3.0, 15.0);
  const RadialGrid g = c.grid();
  WeightSum fw, bw;
  evolve(gaussian_bump(g, 0.5, 1.5, DataMode::velocity), c, {&fw}, +1);
  evolve(gaussian_bump(g, 0.5, 1.5, DataMode::velocity), c, {&bw}, -1);
  EXPECT_NEAR(fw.total, 3.0, 1e-12);
  EXPECT_EQ(fw.calls, 151u);
  EXPECT_EQ(fw.direction, 1);
  EXPECT_EQ(bw.direction, -1);
}

TEST(Solver, SuperthresholdGroundStateBlowsUp) {
  const SolverConfig c = config(-1.0, 0.01, 0.005, 20.0, 100);
  const RadialGrid g = c.grid();
  const Trajectory t = evolve(scaled_ground_state(g, 1.1), c);
  ASSERT_TRUE(t.blew_up);
  EXPECT_LT(t.blowup_time, 20.0);
  EXPECT_FALSE(t.blowup_reason.empty());
}

TEST(Solver, SuperthresholdAmplitudeCrossesThreshold) {
  SolverConfig c = config(-1.0, 0.01, 0.005, 20.0, 100);
  c.drift_bound = 1e6;
  const Trajectory t = evolve(scaled_ground_state(c.grid(), 1.1), c);
  ASSERT_TRUE(t.blew_up);
  EXPECT_EQ(t.blowup_reason, "amplitude");
  EXPECT_LT(t.blowup_time, 2.0);
}

TEST(Solver, SubthresholdGroundStateStaysBounded) {
  const SolverConfig c = config(-1.0, 0.01, 0.005, 20.0, 100);
  const Trajectory t = evolve(scaled_ground_state(c.grid(), 0.9), c);
  EXPECT_FALSE(t.blew_up);
  EXPECT_LE(t.max_amplitude, 2.0);
}

TEST(Solver, CheckpointFormat) {
  const RadialGrid g(3, 0.5, 10);
  FieldState s = zero_state(g, 1.25);
  s.u[1] = 0.5;
  const auto path = std::filesystem::temp_directory_path() / "nlwm_checkpoint_test.csv";
  write_checkpoint(s, g, path.string());
  std::ifstream in(path);
  std::string l1, l2, l3, l4;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  std::getline(in, l4);
  EXPECT_EQ(l1, "# t=1.25");
  EXPECT_EQ(l2, "r,u,ut");
  EXPECT_EQ(l3, "0,0,0");
  EXPECT_EQ(l4, "0.5,0.5,0");
  std::filesystem::remove(path);
}
