#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sep/diagnostics.hpp"
#include "sep/equation_of_state.hpp"
#include "sep/error.hpp"
#include "sep/grid.hpp"
#include "sep/noise.hpp"
#include "sep/poisson.hpp"
#include "sep/state.hpp"
#include "sep/steady_state.hpp"

namespace sep {

enum class Scheme { euler_maruyama, heun_drift };

inline Scheme parse_scheme(const std::string& s) {
  if (s == "euler_maruyama") return Scheme::euler_maruyama;
  if (s == "heun_drift") return Scheme::heun_drift;
  throw config_error("step.scheme must be euler_maruyama or heun_drift; got '" + s + "'");
}

struct StepConfig {
  double dt = 1e-3;
  double cfl = 0.4;
  double rho_floor = 1e-6;
  Scheme scheme = Scheme::euler_maruyama;
  int max_halvings = 10;
  double poisson_tol = 1e-10;
};

/// Raised when a step cannot keep the density above the floor.
class blow_up_error : public error {
 public:
  blow_up_error(const std::string& what, double time, std::shared_ptr<const State> snapshot)
      : error("blow_up", what), time_(time), snapshot_(std::move(snapshot)) {}

  double time() const noexcept { return time_; }
  const State& snapshot() const { return *snapshot_; }

 private:
  double time_;
  std::shared_ptr<const State> snapshot_;
};

enum class PerturbationKind { none, cosine, velocity };

inline PerturbationKind parse_perturbation_kind(const std::string& s) {
  if (s == "none") return PerturbationKind::none;
  if (s == "cosine") return PerturbationKind::cosine;
  if (s == "velocity") return PerturbationKind::velocity;
  throw config_error("perturbation.kind must be none, cosine or velocity; got '" + s + "'");
}

/// Initial perturbation: `cosine` sets sigma_0 = eps prod_a cos(pi x_a / L_a)
/// with u_0 = 0; `velocity` sets u_0,a = eps sin(pi x_a / L_a) with sigma_0 = 0.
struct Perturbation {
  PerturbationKind kind = PerturbationKind::none;
  double eps = 0.0;

  ScalarField density(const Grid& g) const {
    if (kind != PerturbationKind::cosine) return ScalarField(g);
    ScalarField s = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
      double c = eps;
      for (int a = 0; a < g.dim; ++a) c *= std::cos(std::numbers::pi * x[a] / g.length[a]);
      return c;
    });
    const double m = mean(s);
    for (auto& v : s.values) v -= m;
    return s;
  }

  VectorField velocity(const Grid& g) const {
    if (kind != PerturbationKind::velocity) return VectorField(g);
    VectorField u = VectorField::sample(g, [&](const std::array<double, 3>& x) {
      std::array<double, 3> v{0.0, 0.0, 0.0};
      for (int a = 0; a < g.dim; ++a) v[a] = eps * std::sin(std::numbers::pi * x[a] / g.length[a]);
      return v;
    });
    project_normal(u);
    return u;
  }
};

/// Everything one trajectory needs that does not change along it.
struct Problem {
  PressureLaw law;
  DopingProfile doping;
  SteadyState steady;
  double tau = 1.0;

  const Grid& grid() const { return steady.grid(); }
};

inline State initial_state(const Problem& problem, const Perturbation& perturbation,
                           double rho_floor, double poisson_tol = 1e-10) {
  const Grid& g = problem.grid();
  const ScalarField sigma = perturbation.density(g);
  if (std::abs(integral(sigma)) > 1e-12 * std::max(1.0, l2_norm(sigma)))
    throw domain_error("initial_state: density perturbation must have zero mass");
  State s;
  s.t = 0.0;
  s.tau = problem.tau;
  s.rho = problem.steady.rho_bar + sigma;
  if (min_value(s.rho) < rho_floor)
    throw domain_error("initial_state: perturbation drives the density below the floor");
  s.u = perturbation.velocity(g);
  if (perturbation.kind == PerturbationKind::none) {
    s.phi = problem.steady.phi_bar;
  } else {
    s.phi = PoissonSolver(g).solve(s.rho - problem.doping.b, poisson_tol).first;
  }
  return s;
}

struct StepResult {
  State state;
  double dt = 0.0;
  int halvings = 0;
  bool cfl_reduced = false;
};

struct TrajectoryRecord {
  PerturbationNorms norms;
  double energy = 0.0;
  double mass = 0.0;
  double min_rho = 0.0;
  bool subsonic = true;

  double t() const { return norms.t; }
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  long steps = 0;
  long halvings = 0;
  long cfl_reductions = 0;
  long subsonic_violations = 0;
  State final_state;

  std::vector<double> times() const {
    std::vector<double> t;
    t.reserve(records.size());
    for (const auto& r : records) t.push_back(r.t());
    return t;
  }
  std::vector<double> combined() const {
    std::vector<double> c;
    c.reserve(records.size());
    for (const auto& r : records) c.push_back(r.norms.combined);
    return c;
  }
};

/// Ito time stepper for the insulating Euler-Poisson system in velocity form.
///
/// The drift uses a forward-backward split: continuity first, then the
/// Poisson solve and the velocity update with the new density and potential.
/// The pressure-field force is measured against the discrete steady state,
/// so (rho_bar, 0, Phi_bar) is stationary to the last bit.
/// The diffusion is evaluated at the pre-step state.
class Integrator {
 public:
  Integrator(Problem problem, NoiseModel noise, StepConfig config)
      : problem_(std::move(problem)),
        noise_(std::move(noise)),
        config_(config),
        poisson_(problem_.grid()),
        balance_(steady_force(problem_)) {
    if (!(config_.dt > 0.0)) throw domain_error("step: dt must be positive");
    if (!(config_.cfl > 0.0 && config_.cfl <= 1.0)) throw domain_error("step: cfl must be in (0,1]");
    if (!(config_.rho_floor > 0.0)) throw domain_error("step: rho_floor must be positive");
  }

  const Problem& problem() const { return problem_; }
  const NoiseModel& noise() const { return noise_; }
  const StepConfig& config() const { return config_; }

  /// Largest dt allowed by cfl * h / max(|u| + sqrt(P'(rho))).
  double cfl_limit(const State& s) const {
    double speed = 0.0;
    for (std::size_t i = 0; i < s.rho.size(); ++i)
      speed = std::max(speed, std::sqrt(s.u.squared_magnitude(i)) +
                                  std::sqrt(problem_.law.Pprime(s.rho[i])));
    return config_.cfl * problem_.grid().min_spacing() / speed;
  }

  StepResult step(const State& s, Rng& rng,
                  double dt_cap = std::numeric_limits<double>::infinity()) const {
    StepResult out;
    const double cfl_dt = cfl_limit(s);
    double dt = std::min(config_.dt, dt_cap);
    if (cfl_dt < dt) {
      dt = cfl_dt;
      out.cfl_reduced = true;
    }
    for (int attempt = 0; attempt <= config_.max_halvings; ++attempt) {
      const NoiseIncrement inc = noise_.kind == YKind::off
                                     ? NoiseIncrement{std::vector<double>(noise_.a.size()), dt}
                                     : sample_increment(noise_, dt, rng);
      if (try_step(s, dt, inc, out.state)) {
        out.dt = dt;
        out.halvings = attempt;
        return out;
      }
      dt *= 0.5;
    }
    std::ostringstream msg;
    msg << "step: density fell below floor " << config_.rho_floor << " after "
        << config_.max_halvings << " halvings at t = " << s.t;
    throw blow_up_error(msg.str(), s.t, std::make_shared<const State>(s));
  }

  /// Steps to t_end, recording diagnostics at the multiples of
  /// record_stride * dt (and at t_end). Steps are trimmed to land on record times.
  Trajectory simulate(const State& init, double t_end, Rng& rng, int record_stride) const {
    if (record_stride < 1) throw domain_error("simulate: record_stride must be >= 1");
    if (t_end < init.t) throw domain_error("simulate: t_end precedes the initial time");
    Trajectory traj;
    const double interval = record_stride * config_.dt;
    State state = init;
    record(state, traj);
    long k = 1;
    while (state.t < t_end) {
      const double target = std::min(init.t + k * interval, t_end);
      StepResult r = step(state, rng, target - state.t);
      ++traj.steps;
      traj.halvings += r.halvings;
      traj.cfl_reductions += r.cfl_reduced ? 1 : 0;
      const bool landed = r.dt == target - state.t;
      state = std::move(r.state);
      if (landed) state.t = target;
      if (state.t >= target) {
        record(state, traj);
        ++k;
      }
    }
    traj.final_state = std::move(state);
    return traj;
  }

  /// One step of exactly dt with a given noise increment; no CFL clamp and
  /// no retry. Empty if the density would fall below the floor.
  std::optional<State> advance(const State& s, double dt, const NoiseIncrement& inc) const {
    State next;
    if (!try_step(s, dt, inc, next)) return std::nullopt;
    return next;
  }

  TrajectoryRecord diagnose(const State& s) const {
    TrajectoryRecord rec;
    rec.norms = perturbation_norms(s, problem_.steady);
    rec.energy = energy(s, problem_.steady, problem_.law).E;
    rec.mass = integral(s.rho);
    rec.min_rho = min_value(s.rho);
    std::array<double, 3> local{};
    const int dim = s.grid().dim;
    for (std::size_t i = 0; i < s.rho.size() && rec.subsonic; ++i) {
      for (int a = 0; a < dim; ++a) local[a] = s.u[a][i];
      rec.subsonic = problem_.law.is_subsonic(s.rho[i], std::span<const double>(local.data(), dim));
    }
    return rec;
  }

 private:
  void record(const State& s, Trajectory& traj) const {
    traj.records.push_back(diagnose(s));
    if (!traj.records.back().subsonic) ++traj.subsonic_violations;
  }

  // grad Q(rho_bar) - grad Phi_bar: zero up to the steady solver tolerance.
  // Subtracting it makes the steady state an exact fixed point of the drift.
  static VectorField steady_force(const Problem& p) {
    const Grid& g = p.grid();
    ScalarField q(g);
    for (std::size_t i = 0; i < g.size(); ++i) q[i] = p.law.Q(p.steady.rho_bar[i]);
    VectorField f = gradient(q);
    const VectorField gp = gradient(p.steady.phi_bar);
    for (int a = 0; a < g.dim; ++a)
      for (std::size_t i = 0; i < g.size(); ++i) f[a][i] -= gp[a][i];
    return f;
  }

  struct Drift {
    ScalarField rho;
    VectorField u;
    ScalarField phi;
  };

  // One forward-backward drift step; false if the density drops below the floor.
  bool drift(const ScalarField& rho, const VectorField& u, double tau, double dt,
             Drift& out) const {
    const Grid& g = rho.grid;
    const int dim = g.dim;
    VectorField flux(g);
    for (int a = 0; a < dim; ++a)
      for (std::size_t i = 0; i < g.size(); ++i) flux[a][i] = rho[i] * u[a][i];
    const ScalarField div = divergence(flux);
    out.rho = rho;
    for (std::size_t i = 0; i < g.size(); ++i) out.rho[i] -= dt * div[i];
    if (!(min_value(out.rho) >= config_.rho_floor)) return false;

    out.phi = poisson_.solve(out.rho - problem_.doping.b, config_.poisson_tol).first;
    ScalarField q(g);
    for (std::size_t i = 0; i < g.size(); ++i) q[i] = problem_.law.Q(out.rho[i]);
    const VectorField grad_q = gradient(q);
    const VectorField grad_phi = gradient(out.phi);
    std::array<VectorField, 3> grad_u;
    for (int a = 0; a < dim; ++a) {
      ScalarField comp(g);
      comp.values = u[a];
      grad_u[a] = gradient(comp);
    }
    out.u = u;
    const double inv_tau = 1.0 / tau;
    for (int a = 0; a < dim; ++a) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        double advection = 0.0;
        for (int b = 0; b < dim; ++b) advection += u[b][i] * grad_u[a][b][i];
        const double force = grad_q[a][i] - grad_phi[a][i] - balance_[a][i];
        out.u[a][i] -= dt * (advection + force + u[a][i] * inv_tau);
      }
    }
    project_normal(out.u);
    return true;
  }

  bool try_step(const State& s, double dt, const NoiseIncrement& inc, State& next) const {
    Drift d;
    if (!drift(s.rho, s.u, s.tau, dt, d)) return false;
    if (config_.scheme == Scheme::heun_drift) {
      Drift d2;
      if (!drift(d.rho, d.u, s.tau, dt, d2)) return false;
      for (std::size_t i = 0; i < s.rho.size(); ++i) d.rho[i] = 0.5 * (s.rho[i] + d2.rho[i]);
      for (int a = 0; a < s.grid().dim; ++a)
        for (std::size_t i = 0; i < s.rho.size(); ++i) d.u[a][i] = 0.5 * (s.u[a][i] + d2.u[a][i]);
      if (!(min_value(d.rho) >= config_.rho_floor)) return false;
      d.phi = poisson_.solve(d.rho - problem_.doping.b, config_.poisson_tol).first;
    }
    if (noise_.kind != YKind::off) {
      const VectorField dn = velocity_noise_term(noise_, s.rho, s.u, inc);
      for (int a = 0; a < s.grid().dim; ++a)
        for (std::size_t i = 0; i < s.rho.size(); ++i) d.u[a][i] += dn[a][i];
      project_normal(d.u);
    }
    next.t = s.t + dt;
    next.tau = s.tau;
    next.rho = std::move(d.rho);
    next.u = std::move(d.u);
    next.phi = std::move(d.phi);
    return true;
  }

  Problem problem_;
  NoiseModel noise_;
  StepConfig config_;
  PoissonSolver poisson_;
  VectorField balance_;
};

}  // namespace sep
