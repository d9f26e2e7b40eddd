#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "sep/equation_of_state.hpp"
#include "sep/error.hpp"
#include "sep/grid.hpp"
#include "sep/poisson.hpp"

namespace sep {

/// Immobile background charge b(x); strictly positive.
struct DopingProfile {
  ScalarField b;

  explicit DopingProfile(ScalarField field) : b(std::move(field)) {
    if (!(min_value(b) > 0.0)) throw domain_error("doping profile must be strictly positive");
  }

  static DopingProfile constant(const Grid& g, double base) {
    return DopingProfile(ScalarField(g, base));
  }

  /// base + amp * prod_a cos(pi x_a / L_a)
  static DopingProfile cosine(const Grid& g, double base, double amp) {
    return DopingProfile(ScalarField::sample(g, [&](const std::array<double, 3>& x) {
      double c = 1.0;
      for (int a = 0; a < g.dim; ++a) c *= std::cos(std::numbers::pi * x[a] / g.length[a]);
      return base + amp * c;
    }));
  }

  const Grid& grid() const { return b.grid; }
};

struct SteadyState {
  ScalarField rho_bar;
  ScalarField phi_bar;
  double residual = 0.0;
  int iterations = 0;
  double mass_defect = 0.0;
  std::vector<double> residual_history;

  const Grid& grid() const { return rho_bar.grid; }
};

/// ||Lap_h Q(rho) - (rho - b)||_h
inline double steady_residual(const PressureLaw& law, const DopingProfile& doping,
                              const ScalarField& rho) {
  ScalarField q(rho.grid);
  for (std::size_t i = 0; i < rho.size(); ++i) q[i] = law.Q(rho[i]);
  ScalarField r = laplacian(q);
  for (std::size_t i = 0; i < rho.size(); ++i) r[i] -= rho[i] - doping.b[i];
  return l2_norm(r);
}

namespace detail {

inline ScalarField density_from_enthalpy(const PressureLaw& law, const ScalarField& phi,
                                         double shift) {
  ScalarField rho(phi.grid);
  const double floor = law.Q_lower_bound();
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double q = phi[i] + shift;
    rho[i] = q > floor ? law.Qinverse(q) : 0.0;
  }
  return rho;
}

// Shift c with <Qinverse(phi + c) - b, 1>_h = 0.
inline double mass_matching_shift(const PressureLaw& law, const ScalarField& phi,
                                  const DopingProfile& doping) {
  const double target = integral(doping.b);
  auto defect = [&](double c) { return integral(density_from_enthalpy(law, phi, c)) - target; };

  const double guess = law.Q(target / phi.grid.volume());
  const double lowest = law.isothermal() ? -HUGE_VAL : -min_value(phi);
  double step = 0.1 * std::max(1.0, std::abs(guess));

  double lo = std::max(guess - step, lowest);
  double flo = defect(lo);
  while (flo > 0.0) {
    if (lo == lowest)
      throw convergence_error("steady state: no enthalpy shift matches the doping mass");
    step *= 2.0;
    lo = std::max(guess - step, lowest);
    flo = defect(lo);
  }
  step = 0.1 * std::max(1.0, std::abs(guess));
  double hi = guess + step;
  double fhi = defect(hi);
  for (int k = 0; fhi < 0.0; ++k) {
    if (k > 200) throw convergence_error("steady state: cannot bracket enthalpy shift");
    step *= 2.0;
    hi = guess + step;
    fhi = defect(hi);
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;

  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      defect, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

}  // namespace detail

/// One damped fixed-point sweep: Poisson solve, mass-matching enthalpy
/// shift, relaxation towards Qinverse(Phi + c).
inline ScalarField steady_iteration(const PoissonSolver& poisson, const PressureLaw& law,
                                    const DopingProfile& doping, const ScalarField& rho,
                                    double theta) {
  auto [phi, report] = poisson.solve(rho - doping.b);
  const double shift = detail::mass_matching_shift(law, phi, doping);
  ScalarField target = detail::density_from_enthalpy(law, phi, shift);
  ScalarField next(rho.grid);
  for (std::size_t i = 0; i < rho.size(); ++i)
    next[i] = (1.0 - theta) * rho[i] + theta * target[i];
  return next;
}

/// Subsonic steady state (rho_bar, 0, Phi_bar) of the insulating problem:
/// Lap_h Q(rho_bar) = rho_bar - b with <rho_bar - b, 1>_h = 0.
inline SteadyState solve_steady(const Grid& grid, const PressureLaw& law,
                                const DopingProfile& doping, double tol, int max_iter,
                                double theta = 0.5) {
  require_same_grid(grid, doping.grid(), "solve_steady");
  if (!(tol > 0.0)) throw domain_error("solve_steady: tolerance must be positive");
  if (!(theta > 0.0 && theta <= 1.0)) throw domain_error("solve_steady: damping must be in (0,1]");

  const PoissonSolver poisson(grid);
  SteadyState out;
  ScalarField rho = doping.b;
  double previous = HUGE_VAL;
  bool converged = false;

  for (int j = 0; j < max_iter; ++j) {
    const double res = steady_residual(law, doping, rho);
    out.residual_history.push_back(res);
    out.iterations = j + 1;
    if (res <= tol) {
      converged = true;
      break;
    }
    if (res > previous * (1.0 + 1e-3)) theta = std::max(0.5 * theta, 1.0 / 1024.0);
    previous = res;

    rho = steady_iteration(poisson, law, doping, rho, theta);
    const double lowest = min_value(rho);
    if (!(lowest > 0.0)) {
      std::ostringstream msg;
      msg << "steady state: density lost positivity (min " << lowest << ") at iteration "
          << j + 1 << "; reduce the damping factor or the doping variation";
      throw convergence_error(msg.str());
    }
  }

  if (!converged) {
    std::ostringstream msg;
    const auto& h = out.residual_history;
    msg << "steady state: no convergence after " << max_iter << " iterations (tol " << tol
        << "); residual history, last " << std::min<std::size_t>(h.size(), 8) << " of " << h.size()
        << ":";
    for (std::size_t k = h.size() - std::min<std::size_t>(h.size(), 8); k < h.size(); ++k)
      msg << ' ' << h[k];
    throw convergence_error(msg.str());
  }

  out.residual = out.residual_history.back();
  out.mass_defect = std::abs(integral(rho) - integral(doping.b));
  out.phi_bar = poisson.solve(rho - doping.b).first;
  out.rho_bar = std::move(rho);
  return out;
}

}  // namespace sep
