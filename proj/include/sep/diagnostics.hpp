#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "sep/equation_of_state.hpp"
#include "sep/error.hpp"
#include "sep/grid.hpp"
#include "sep/state.hpp"
#include "sep/steady_state.hpp"

namespace sep {

/// Sobolev norms of the perturbation (sigma, u, phi) = (rho - rho_bar, u, Phi - Phi_bar).
struct PerturbationNorms {
  double t = 0.0;
  std::array<double, 4> sigma_h{};  ///< ||sigma||_k, k = 0..3
  std::array<double, 4> u_h{};      ///< ||u||_k, k = 0..3
  double grad_phi = 0.0;            ///< ||grad phi||
  double combined = 0.0;            ///< ||sigma||_3^2 + ||u||_3^2 + ||grad phi||^2
};

inline PerturbationNorms perturbation_norms(const State& state, const SteadyState& steady) {
  require_same_grid(state.grid(), steady.grid(), "perturbation_norms");
  PerturbationNorms out;
  out.t = state.t;
  const ScalarField sigma = state.rho - steady.rho_bar;
  const ScalarField phi = state.phi - steady.phi_bar;
  for (int k = 0; k <= 3; ++k) {
    out.sigma_h[k] = sobolev_norm(sigma, k);
    out.u_h[k] = sobolev_norm(state.u, k);
  }
  out.grad_phi = l2_norm(gradient(phi));
  out.combined = out.sigma_h[3] * out.sigma_h[3] + out.u_h[3] * out.u_h[3] +
                 out.grad_phi * out.grad_phi;
  return out;
}

struct EnergyValue {
  double t = 0.0;
  double E = 0.0;
};

/// E = int 1/2 (rho_bar |u|^2 + Q'(rho_bar) sigma^2 + |grad phi|^2), the
/// quadratic form of the symmetriser frozen at the steady state.
inline EnergyValue energy(const State& state, const SteadyState& steady, const PressureLaw& law) {
  require_same_grid(state.grid(), steady.grid(), "energy");
  const Grid& g = state.grid();
  const VectorField grad_phi = gradient(state.phi - steady.phi_bar);
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double rb = steady.rho_bar[i];
    const double sigma = state.rho[i] - rb;
    e += g.weight(i) * (rb * state.u.squared_magnitude(i) + law.Qprime(rb) * sigma * sigma +
                        grad_phi.squared_magnitude(i));
  }
  return {state.t, 0.5 * e};
}

/// Constants c1, c2 with c1 (||sigma||^2 + ||u||^2 + ||grad phi||^2) <= E <= c2 (...).
inline std::pair<double, double> energy_equivalence_constants(const SteadyState& steady,
                                                              const PressureLaw& law) {
  double rmin = HUGE_VAL, rmax = 0.0, qmin = HUGE_VAL, qmax = 0.0;
  for (double r : steady.rho_bar.values) {
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    qmin = std::min(qmin, law.Qprime(r));
    qmax = std::max(qmax, law.Qprime(r));
  }
  return {0.5 * std::min({rmin, qmin, 1.0}), 0.5 * std::max({rmax, qmax, 1.0})};
}

/// e^{alpha t} * combined(t), pointwise.
inline std::vector<double> weighted_series(std::span<const double> times,
                                           std::span<const double> combined, double alpha) {
  if (!(alpha >= 0.0)) throw domain_error("weighted_series: alpha must be nonnegative");
  if (times.size() != combined.size())
    throw domain_error("weighted_series: time and value series differ in length");
  std::vector<double> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = std::exp(alpha * times[i]) * combined[i];
  return out;
}

}  // namespace sep
