#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sep/diagnostics.hpp"
#include "sep/integrator.hpp"

using namespace sep;
using std::numbers::pi;

namespace {

Problem cosine_problem(int dim, int n, double amp = 0.1) {
  const Grid g = Grid::uniform(dim, n);
  const PressureLaw law = PressureLaw::gamma_law(1.0, 2.0);
  DopingProfile b = DopingProfile::cosine(g, 1.0, amp);
  SteadyState s = solve_steady(g, law, b, 1e-10, 2000);
  return Problem{law, std::move(b), std::move(s), 1.0};
}

// Problem whose doping is the constant with the same mass as rho, so that
// arbitrary positive densities are admissible.
Problem matched_problem(const ScalarField& rho) {
  const Grid& g = rho.grid;
  DopingProfile b = DopingProfile::constant(g, mean(rho));
  SteadyState s;
  s.rho_bar = b.b;
  s.phi_bar = ScalarField(g);
  return Problem{PressureLaw::gamma_law(1.0, 2.0), std::move(b), std::move(s), 1.0};
}

State random_state(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> r(0.8, 1.2), v(-0.1, 0.1);
  State s;
  s.rho = ScalarField(g);
  for (auto& x : s.rho.values) x = r(rng);
  s.u = VectorField(g);
  for (int a = 0; a < g.dim; ++a)
    for (auto& x : s.u[a]) x = v(rng);
  project_normal(s.u);
  s.phi = ScalarField(g);
  return s;
}

}  // namespace

// Values from tests/oracles/single_step.py.
TEST(Integrator, SingleStepOracle) {
  const Grid g = Grid::uniform(1, 4);
  State s;
  s.rho = ScalarField(g);
  s.rho.values = {1.10, 0.95, 1.02, 0.93};
  s.u = VectorField(g);
  s.u[0] = {0.0, 0.05, -0.03, 0.0};
  s.phi = ScalarField(g);
  const Problem p = matched_problem(s.rho);
  const NoiseModel noise = NoiseModel::geometric(1, YKind::quadratic, 0.5, 1);
  const Integrator it(p, noise, StepConfig{.dt = 0.01});
  const auto next = it.advance(s, 0.01, NoiseIncrement{{0.0123}, 0.01});
  ASSERT_TRUE(next);

  const double rho[4] = {1.098575, 0.9504589999999999, 1.0207125, 0.9290820000000001};
  const double u[4] = {0.0, 0.05197137125000001, -0.029008535133333336, 0.0};
  const double phi[4] = {-0.0058080740740740515, -5.390740740741969e-05, 0.0007512592592592434,
                         0.004413370370370403};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(next->rho[i], rho[i], 1e-14);
    EXPECT_NEAR(next->u[0][i], u[i], 1e-14);
    EXPECT_NEAR(next->phi[i], phi[i], 1e-14);
  }
  EXPECT_DOUBLE_EQ(next->t, 0.01);
}

TEST(Integrator, MassConservedOnRandomStates) {
  std::mt19937_64 rng(21);
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = Grid::uniform(dim, dim == 1 ? 33 : 9);
    for (int trial = 0; trial < 20; ++trial) {
      const State s = random_state(g, rng);
      const Problem p = matched_problem(s.rho);
      const Integrator it(p, NoiseModel::geometric(8, YKind::quadratic, 0.5, dim),
                          StepConfig{.dt = 1e-3});
      Rng stream = stream_rng(trial, 0);
      const State next = it.step(s, stream).state;
      const double m0 = integral(s.rho);
      EXPECT_LE(std::abs(integral(next.rho) - m0), 1e-12 * m0);
      EXPECT_LE(boundary_normal_max(next.u), 1e-12);
    }
  }
}

TEST(Integrator, SteadyStateIsFixedPoint) {
  const Problem p = cosine_problem(1, 65);
  for (Scheme scheme : {Scheme::euler_maruyama, Scheme::heun_drift}) {
    const Integrator it(p, NoiseModel::geometric(8, YKind::quadratic, 0.5, 1),
                        StepConfig{.dt = 1e-3, .scheme = scheme});
    State s = initial_state(p, Perturbation{}, 1e-6);
    Rng rng = stream_rng(3, 0);
    for (int k = 0; k < 50; ++k) s = it.step(s, rng).state;
    EXPECT_LE(max_abs(s.rho - p.steady.rho_bar), 1e-11);
    EXPECT_EQ(max_abs(s.u), 0.0);
  }
}

TEST(Integrator, InitialStateZeroPerturbation) {
  const Problem p = cosine_problem(1, 33);
  const State s = initial_state(p, Perturbation{}, 1e-6);
  EXPECT_EQ(s.rho.values, p.steady.rho_bar.values);
  EXPECT_EQ(s.phi.values, p.steady.phi_bar.values);
  EXPECT_EQ(max_abs(s.u), 0.0);
}

TEST(Integrator, InitialStateCosine) {
  const double eps = 0.01;
  const Problem p = cosine_problem(1, 257);
  const State s = initial_state(p, Perturbation{PerturbationKind::cosine, eps}, 1e-6);
  EXPECT_LE(std::abs(integral(s.rho) - integral(p.steady.rho_bar)), 1e-15);
  const PerturbationNorms n = perturbation_norms(s, p.steady);
  const double sigma3 = 0.5 * eps * eps * (1 + pi * pi + std::pow(pi, 4) + std::pow(pi, 6));
  const double exact = sigma3 + eps * eps / (2 * pi * pi);
  EXPECT_NEAR(n.combined, exact, 0.01 * exact);
}

TEST(Integrator, InitialStateRejectsFloorViolation) {
  const Problem p = cosine_problem(1, 33);
  EXPECT_THROW(initial_state(p, Perturbation{PerturbationKind::cosine, 2.0}, 1e-6), domain_error);
}

TEST(Integrator, InitialStateVelocityPerturbation) {
  const Problem p = cosine_problem(2, 9);
  const State s = initial_state(p, Perturbation{PerturbationKind::velocity, 0.05}, 1e-6);
  EXPECT_EQ(boundary_normal_max(s.u), 0.0);
  EXPECT_GT(max_abs(s.u), 0.0);
}

TEST(Simulate, ZeroHorizon) {
  const Problem p = cosine_problem(1, 33);
  const Integrator it(p, NoiseModel::off(1), StepConfig{.dt = 1e-3});
  Rng rng = stream_rng(0, 0);
  const Trajectory tr = it.simulate(initial_state(p, Perturbation{}, 1e-6), 0.0, rng, 10);
  EXPECT_EQ(tr.records.size(), 1u);
  EXPECT_EQ(tr.steps, 0);
}

TEST(Simulate, RecordsLandOnMultiplesOfStride) {
  const Problem p = cosine_problem(1, 33);
  const Integrator it(p, NoiseModel::off(1), StepConfig{.dt = 1e-3});
  Rng rng = stream_rng(0, 0);
  const Trajectory tr =
      it.simulate(initial_state(p, Perturbation{PerturbationKind::cosine, 0.01}, 1e-6), 0.105, rng, 20);
  ASSERT_EQ(tr.records.size(), 7u);
  for (std::size_t k = 0; k + 1 < tr.records.size(); ++k)
    EXPECT_NEAR(tr.records[k].t(), 0.02 * static_cast<double>(k), 1e-14);
  EXPECT_EQ(tr.records.back().t(), 0.105);
}

TEST(Simulate, DeterministicDecay) {
  const Problem p = cosine_problem(1, 65);
  const Integrator it(p, NoiseModel::off(1), StepConfig{.dt = 2e-3});
  Rng rng = stream_rng(0, 0);
  const Trajectory tr =
      it.simulate(initial_state(p, Perturbation{PerturbationKind::cosine, 0.01}, 1e-6), 5.0, rng, 100);
  EXPECT_LT(tr.records.back().norms.combined, tr.records.front().norms.combined);
  EXPECT_EQ(tr.subsonic_violations, 0);
  for (const auto& r : tr.records)
    EXPECT_LE(std::abs(r.mass - tr.records.front().mass), 1e-12 * tr.records.front().mass);
}

TEST(Simulate, EqualSeedsBitIdentical) {
  const Problem p = cosine_problem(1, 33);
  const Integrator it(p, NoiseModel::geometric(8, YKind::quadratic, 0.5, 1), StepConfig{.dt = 2e-3});
  const State init = initial_state(p, Perturbation{PerturbationKind::cosine, 0.05}, 1e-6);
  Rng a = stream_rng(12, 3), b = stream_rng(12, 3);
  const Trajectory ta = it.simulate(init, 0.5, a, 10), tb = it.simulate(init, 0.5, b, 10);
  ASSERT_EQ(ta.records.size(), tb.records.size());
  for (std::size_t k = 0; k < ta.records.size(); ++k)
    EXPECT_EQ(ta.records[k].norms.combined, tb.records[k].norms.combined);
  EXPECT_EQ(ta.final_state.rho.values, tb.final_state.rho.values);
}

TEST(Simulate, FirstOrderInTime) {
  const Problem p = cosine_problem(1, 33);
  const State init = initial_state(p, Perturbation{PerturbationKind::cosine, 0.05}, 1e-6);
  auto final_rho = [&](double dt) {
    const Integrator it(p, NoiseModel::off(1), StepConfig{.dt = dt});
    Rng rng = stream_rng(0, 0);
    return it.simulate(init, 0.5, rng, 1000000).final_state.rho;
  };
  const ScalarField ref = final_rho(0.002 / 8);
  const double e1 = max_abs(final_rho(0.004) - ref);
  const double e2 = max_abs(final_rho(0.002) - ref);
  EXPECT_GT(e1 / e2, 1.6);
  EXPECT_LT(e1 / e2, 2.6);
}

TEST(Step, CflClamp) {
  const Problem p = cosine_problem(1, 33);
  const Integrator it(p, NoiseModel::off(1), StepConfig{.dt = 1.0});
  const State s = initial_state(p, Perturbation{PerturbationKind::cosine, 0.01}, 1e-6);
  Rng rng = stream_rng(0, 0);
  const StepResult r = it.step(s, rng);
  EXPECT_TRUE(r.cfl_reduced);
  EXPECT_LE(r.dt, it.cfl_limit(s));
}

namespace {

// Uniform density with a compressive flow toward x = 1: the density at the
// left end drops for every dt > 0.
State draining_state(const Grid& g) {
  State s;
  s.rho = ScalarField(g, 1.0);
  s.u = VectorField::sample(g, [](auto x) { return std::array<double, 3>{0.1 * std::sin(pi * x[0]), 0, 0}; });
  project_normal(s.u);
  s.phi = ScalarField(g);
  return s;
}

}  // namespace

TEST(Step, HalvesDtOnFloorViolation) {
  const Grid g = Grid::uniform(1, 17);
  const State s = draining_state(g);
  const Integrator it(matched_problem(s.rho), NoiseModel::off(1),
                      StepConfig{.dt = 0.01, .rho_floor = 1.0 - 0.002});
  Rng rng = stream_rng(0, 0);
  const StepResult r = it.step(s, rng);
  EXPECT_EQ(r.halvings, 1);
  EXPECT_DOUBLE_EQ(r.dt, 0.005);
  EXPECT_GE(min_value(r.state.rho), 1.0 - 0.002);
}

TEST(Step, BlowUpAfterMaxHalvings) {
  const Grid g = Grid::uniform(1, 17);
  State s = draining_state(g);
  s.t = 0.25;
  const Integrator it(matched_problem(s.rho), NoiseModel::off(1),
                      StepConfig{.dt = 0.01, .rho_floor = 1.0});
  Rng rng = stream_rng(0, 0);
  try {
    it.step(s, rng);
    FAIL() << "expected blow_up_error";
  } catch (const blow_up_error& e) {
    EXPECT_EQ(e.time(), 0.25);
    EXPECT_EQ(e.snapshot().rho.values, s.rho.values);
    EXPECT_EQ(e.code(), "blow_up");
  }
}

TEST(Step, TwoAndThreeDimensionalSmoke) {
  for (int dim : {2, 3}) {
    const Problem p = cosine_problem(dim, 9);
    const Integrator it(p, NoiseModel::geometric(8, YKind::bounded, 0.5, dim),
                        StepConfig{.dt = 5e-3, .scheme = Scheme::heun_drift});
    Rng rng = stream_rng(4, 0);
    const Trajectory tr =
        it.simulate(initial_state(p, Perturbation{PerturbationKind::velocity, 0.05}, 1e-6), 0.2, rng, 5);
    EXPECT_LE(std::abs(tr.records.back().mass - tr.records.front().mass),
              1e-12 * tr.records.front().mass);
    EXPECT_LE(boundary_normal_max(tr.final_state.u), 1e-12);
    EXPECT_EQ(tr.subsonic_violations, 0);
  }
}

TEST(Step, ParseScheme) {
  EXPECT_EQ(parse_scheme("heun_drift"), Scheme::heun_drift);
  EXPECT_THROW(parse_scheme("rk4"), config_error);
}
