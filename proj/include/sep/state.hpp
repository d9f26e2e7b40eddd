#pragma once

#include "sep/grid.hpp"

namespace sep {

/// Density, velocity and potential at one time instant.
struct State {
  double t = 0.0;
  ScalarField rho;
  VectorField u;
  ScalarField phi;
  double tau = 1.0;  ///< momentum relaxation time

  const Grid& grid() const { return rho.grid; }
};

}  // namespace sep
