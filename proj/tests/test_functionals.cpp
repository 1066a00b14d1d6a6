#include <gtest/gtest.h>

#include <cmath>

#include "nlwm/free_wave.hpp"
#include "nlwm/functionals.hpp"
#include "nlwm/weights.hpp"

using namespace nlwm;

namespace {

constexpr double kPi = 3.14159265358979323846;

FieldState exact_data_state(const InitialData& d, const RadialGrid& g) {
  return FieldState{d.f, d.g, 0.0, g.sample(d.f_exact.d1)};
}

double ball_integral_of_square(const Field& f, const RadialGrid& g) {
  Field q(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) q[i] = f[i] * f[i];
  return integrate_ball(q, g);
}

}  // namespace

TEST(Functionals, ZeroStateGivesZero) {
  const RadialGrid g(3, 0.05, 20);
  const FieldState z = zero_state(g);
  const WeightSamples psi = sample_weight(weight_bracket(3), g);
  const WeightSamples phi = sample_weight(rescale_virial(cutoff_family(4), 5.0, 3), g);
  EXPECT_EQ(energy(z, 1.0, g).total, 0.0);
  EXPECT_EQ(morawetz_integrand(z, psi, 1.0, g), 0.0);
  EXPECT_EQ(morawetz_action(z, psi, g), 0.0);
  EXPECT_EQ(virial_integrand(z, phi, 1.0, g), 0.0);
  EXPECT_EQ(pairing(z, phi, g), 0.0);
  EXPECT_EQ(flux(z, psi, g), 0.0);
  EXPECT_EQ(equipartition_defect(z, g), 0.0);
  EXPECT_EQ(wave_defect(z, g, +1), 0.0);
  EXPECT_EQ(sup_sphere_norm(z, g), 0.0);
}

TEST(Functionals, ConstantWeightHasNoIntegrand) {
  const RadialGrid g(3, 0.05, 20);
  const InitialData d = gaussian_bump(g, 0.5, 1.5, DataMode::displacement);
  const WeightSamples c = sample_weight(weight_constant(3, 2.5), g);
  EXPECT_EQ(morawetz_integrand(exact_data_state(d, g), c, 1.0, g), 0.0);
}

TEST(Functionals, DisplacementDataHasNoTimeDerivativeTerms) {
  const RadialGrid g(3, 0.05, 20);
  const InitialData d = gaussian_bump(g, 0.5, 1.5, DataMode::displacement);
  const FieldState s = exact_data_state(d, g);
  EXPECT_EQ(morawetz_action(s, sample_weight(weight_bracket(3), g), g), 0.0);
  EXPECT_EQ(pairing(s, rescale_virial(cutoff_family(4), 5.0, 3), g), 0.0);
  EXPECT_EQ(flux(s, weight_bracket(3), g), 0.0);
}

TEST(Functionals, FluxAndPairingFlipUnderTimeReflection) {
  const RadialGrid g(3, 0.05, 20);
  const FieldState s = dalembert_3d(gaussian_bump(g, 0.5, 1.5, DataMode::velocity), 2.0, g);
  const FieldState r = time_reflect(s);
  const auto psi = weight_bracket(3);
  const auto phi = rescale_virial(cutoff_family(4), 5.0, 3);
  EXPECT_NE(flux(s, psi, g), 0.0);
  EXPECT_DOUBLE_EQ(flux(r, psi, g), -flux(s, psi, g));
  EXPECT_DOUBLE_EQ(pairing(r, phi, g), -pairing(s, phi, g));
  EXPECT_DOUBLE_EQ(morawetz_boundary(s, psi, g, -1), -morawetz_boundary(s, psi, g, +1));
}

TEST(Functionals, VelocityDataDefects) {
  const RadialGrid g(3, 0.02, 20);
  const InitialData d = gaussian_bump(g, 0.5, 1.5, DataMode::velocity);
  const FieldState s = exact_data_state(d, g);
  const double g2 = ball_integral_of_square(d.g, g);
  EXPECT_NEAR(equipartition_defect(s, g), g2, 1e-14 * g2);
  EXPECT_NEAR(wave_defect(s, g, +1), g2, 1e-14 * g2);
  EXPECT_NEAR(wave_defect(s, g, -1), g2, 1e-14 * g2);
}

TEST(Functionals, ConformalEnergyAtTimeZeroIsTheCap) {
  const RadialGrid g(3, 0.02, 20);
  for (DataMode mode : {DataMode::displacement, DataMode::velocity}) {
    const InitialData d = gaussian_bump(g, 0.5, 1.5, mode);
    const ConformalReport c = conformal(exact_data_state(d, g), d, g);
    EXPECT_EQ(c.T, 0.0);
    EXPECT_GT(c.rhs_cap, 0.0);
    EXPECT_NEAR(c.Q, c.rhs_cap, 1e-13 * c.rhs_cap);
    EXPECT_EQ(c.interior, 0.0);
  }
}

TEST(Functionals, ConformalQuantityFreezesOnceTheWaveIsOutgoing) {
  const RadialGrid g(3, 0.01, 40);
  const InitialData d = compact_bump(g, 2.0, DataMode::displacement);
  const Dalembert3D oracle(d, g);
  const ConformalReport early = conformal(oracle.state(3.0), d, g);
  const ConformalReport late = conformal(oracle.state(10.0), d, g);
  EXPECT_NEAR(late.Q / early.Q, 1.0, 1e-6);
  EXPECT_LE(late.Q, late.rhs_cap);
  EXPECT_NEAR(late.plus_wave + late.minus_wave, 2.0 * late.Q, 1e-9 * late.Q);
}

TEST(Functionals, LpNormOfGaussian) {
  const RadialGrid g(3, 0.01, 12);
  const Field u = g.sample([](double r) { return std::exp(-r * r); });
  EXPECT_NEAR(lp_norm(u, g, 2.0), std::pow(kPi / 2.0, 0.75), 1e-5);
  EXPECT_NEAR(lp_norm(u, g, 6.0), std::pow(std::pow(kPi / 6.0, 1.5), 1.0 / 6.0), 1e-5);
}

TEST(Functionals, SupSphereNorm) {
  const RadialGrid g(3, 0.05, 10);
  FieldState s = zero_state(g);
  s.u[7] = -0.25;
  EXPECT_EQ(sup_sphere_norm(s, g), 0.25);
  EXPECT_NEAR(sup_sphere_norm(s, g, 2.0), std::sqrt(4.0 * kPi) * 0.25, 1e-15);
}

TEST(Functionals, EnergyQuadraturesAgree) {
  const RadialGrid g(3, 0.01, 20);
  const InitialData d = gaussian_bump(g, 0.5, 1.5, DataMode::displacement);
  const double exact = data_energy(d, 1.0, g).total;
  const double discrete = energy(FieldState{d.f, d.g, 0.0, {}}, 1.0, g).total;
  EXPECT_NEAR(discrete / exact, 1.0, 1e-4);
  EXPECT_GT(data_energy(d, 1.0, g).potential, 0.0);
  EXPECT_LT(data_energy(d, -1.0, g).potential, 0.0);
}

TEST(Functionals, StaticGroundStateHasNoVirialIntegrand) {
  const RadialGrid g(3, 0.01, 100);
  const InitialData w = scaled_ground_state(g, 1.0);
  const FieldState s = exact_data_state(w, g);
  for (double R : {2.0, 10.0}) {
    const WeightSamples phi = sample_weight(rescale_virial(cutoff_family(4), R, 3), g);
    const double scale = energy(s, 0.0, g).gradient;
    EXPECT_LE(std::abs(virial_integrand(s, phi, -1.0, g)) / scale, 1e-5) << "R=" << R;
  }
}

TEST(Functionals, MorawetzLedgerClosesOnExactFreeWave) {
  const RadialGrid g(3, 0.01, 40);
  const InitialData d = compact_bump(g, 2.0, DataMode::velocity);
  const Dalembert3D oracle(d, g);
  MorawetzObserver obs(rescale_morawetz(cutoff_family(4), 10.0, 3), 0.0, g);
  const FieldState plus = oracle_evolve(oracle, 0.005, 10.0, {&obs}, +1);
  const FieldState minus = oracle_evolve(oracle, 0.005, 10.0, {&obs}, -1);
  const double e0 = data_energy(d, 0.0, g).total;
  obs.finish(plus, time_reflect(minus), e0);
  EXPECT_LE(std::abs(obs.ledger().residual()) / e0, 1e-5);
}

TEST(Functionals, ObserversRejectInadmissibleWeights) {
  const RadialGrid g(3, 0.05, 20);
  EXPECT_THROW(MorawetzObserver(weight_abs(3), 0.0, g), std::invalid_argument);
  EXPECT_THROW(VirialObserver(weight_bracket(3), 0.0, g), std::invalid_argument);
}

TEST(Localized, MonotoneInRadiusAndRadialReduction) {
  SolverConfig c;
  c.lambda = 1.0;
  c.dr = 0.02;
  c.dt = 0.01;
  c.t_max = 5.0;
  c.r_max = 20.0;
  const RadialGrid g = c.grid();
  LocalizedEnergyAccumulator acc(g, {1.0, 2.0, 4.0, 8.0});
  evolve(gaussian_bump(g, 0.5, 1.5, DataMode::velocity), c, {&acc});
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(acc.raw(j, LocalizedKind::tangential_grad), 0.0);
    EXPECT_EQ(acc.raw(j, LocalizedKind::full_grad), acc.raw(j, LocalizedKind::radial_grad));
    EXPECT_NEAR(acc.raw(j, LocalizedKind::spacetime_full) - acc.raw(j, LocalizedKind::lagrangian),
                2.0 * acc.raw(j, LocalizedKind::radial_grad),
                1e-12 * acc.raw(j, LocalizedKind::spacetime_full));
    if (j > 0) {
      for (auto k : {LocalizedKind::radial_grad, LocalizedKind::spacetime_full,
                     LocalizedKind::l2star, LocalizedKind::mass}) {
        EXPECT_GE(acc.raw(j, k), acc.raw(j - 1, k)) << to_string(k);
      }
    }
  }
  EXPECT_DOUBLE_EQ(localized_energy(acc, 4.0, LocalizedKind::radial_grad),
                   acc.raw(2, LocalizedKind::radial_grad) / 4.0);
  EXPECT_DOUBLE_EQ(localized_energy(acc, 2.0, LocalizedKind::mass),
                   acc.raw(1, LocalizedKind::mass) / 8.0);
  EXPECT_THROW(localized_energy(acc, 3.0, LocalizedKind::mass), std::invalid_argument);
  EXPECT_THROW(LocalizedEnergyAccumulator(g, {25.0}), std::invalid_argument);
}

TEST(Localized, MassAverageDecaysForLargeRadii) {
  const RadialGrid g(3, 0.02, 60);
  const Dalembert3D oracle(compact_bump(g, 2.0, DataMode::velocity), g);
  LocalizedEnergyAccumulator acc(g, {10.0, 20.0, 40.0});
  oracle_evolve(oracle, 0.02, 10.0, {&acc});
  EXPECT_GT(acc.value(0, LocalizedKind::mass), acc.value(1, LocalizedKind::mass));
  EXPECT_GT(acc.value(1, LocalizedKind::mass), acc.value(2, LocalizedKind::mass));
}

TEST(MixedNorm, StrichartzNormSaturates) {
  const RadialGrid g(3, 0.02, 60);
  const Dalembert3D oracle(compact_bump(g, 2.0, DataMode::velocity), g);
  MixedNormAccumulator n20(g, 5.0, 10.0), n40(g, 5.0, 10.0);
  oracle_evolve(oracle, 0.02, 20.0, {&n20});
  oracle_evolve(oracle, 0.02, 40.0, {&n40});
  EXPECT_GT(n40.value(), n20.value());
  EXPECT_NEAR(n40.value() / n20.value(), 1.0, 0.02);
  EXPECT_THROW(MixedNormAccumulator(g, 0.5, 2.0), std::invalid_argument);
}
