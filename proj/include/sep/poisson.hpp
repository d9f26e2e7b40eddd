#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "sep/error.hpp"
#include "sep/grid.hpp"

namespace sep {

struct PoissonReport {
  double residual = 0.0;       ///< ||Lap_h Phi - rhs||_h / ||rhs||_h
  double compat_defect = 0.0;  ///< |<rhs, 1>_h| before projection
};

/// Neumann Poisson solver for Lap_h Phi = rhs with the mean-zero gauge.
///
/// 1-D uses the tridiagonal system directly (one end pinned, then the mean
/// removed). 2-D and 3-D diagonalise the ghost-reflection Laplacian with the
/// type-I cosine basis, one dense transform per axis.
class PoissonSolver {
 public:
  static constexpr double compatibility_gate = 1e-8;

  explicit PoissonSolver(const Grid& grid) : grid_(grid) {
    if (grid.dim > 1) {
      for (int a = 0; a < grid.dim; ++a) axes_[a] = make_axis(grid.n[a], grid.h[a]);
    }
  }

  const Grid& grid() const { return grid_; }

  std::pair<ScalarField, PoissonReport> solve(const ScalarField& rhs, double tol = 1e-10) const {
    require_same_grid(grid_, rhs.grid, "poisson solve");
    PoissonReport report;
    const double total = integral(rhs);
    const double rhs_norm = l2_norm(rhs);
    report.compat_defect = std::abs(total);
    if (report.compat_defect > compatibility_gate * rhs_norm)
      throw compatibility_error("poisson: compatibility defect " +
                                std::to_string(report.compat_defect) +
                                " exceeds gate (mass leakage upstream?)");

    ScalarField projected = rhs;
    const double shift = total / grid_.volume();
    for (auto& v : projected.values) v -= shift;

    ScalarField phi = grid_.dim == 1 ? solve_tridiagonal(projected) : solve_cosine(projected);
    remove_mean(phi);

    if (rhs_norm > 0.0) {
      ScalarField r = laplacian(phi);
      r -= projected;
      report.residual = l2_norm(r) / rhs_norm;
      if (report.residual > tol)
        throw convergence_error("poisson: relative residual " + std::to_string(report.residual) +
                                " above tolerance " + std::to_string(tol));
    }
    return {std::move(phi), report};
  }

 private:
  struct Axis {
    int n = 0;
    std::vector<double> forward;  // n x n, row k: w_j cos(pi j k / (n-1))
    std::vector<double> inverse;  // n x n, row j: (2/(n-1)) w_k cos(pi j k / (n-1))
    std::vector<double> eigen;    // eigenvalues of the 1-D Neumann Laplacian
  };

  static Axis make_axis(int n, double h) {
    Axis ax;
    ax.n = n;
    const int m = n - 1;
    ax.forward.resize(static_cast<std::size_t>(n) * n);
    ax.inverse.resize(static_cast<std::size_t>(n) * n);
    ax.eigen.resize(n);
    auto end_weight = [m](int j) { return (j == 0 || j == m) ? 0.5 : 1.0; };
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < n; ++j) {
        const double c = std::cos(std::numbers::pi * j * k / m);
        ax.forward[static_cast<std::size_t>(k) * n + j] = end_weight(j) * c;
        ax.inverse[static_cast<std::size_t>(j) * n + k] = 2.0 / m * end_weight(k) * c;
      }
      const double s = std::sin(std::numbers::pi * k / (2.0 * m));
      ax.eigen[k] = -4.0 * s * s / (h * h);
    }
    return ax;
  }

  void remove_mean(ScalarField& phi) const {
    const double m = mean(phi);
    for (auto& v : phi.values) v -= m;
  }

  ScalarField solve_tridiagonal(const ScalarField& rhs) const {
    const int n = grid_.n[0];
    const double h2 = grid_.h[0] * grid_.h[0];
    // Unknowns f_1..f_{n-1} with f_0 = 0; row 0 follows from compatibility.
    const int m = n - 1;
    std::vector<double> lower(m), diag(m), upper(m), d(m);
    for (int r = 0; r < m; ++r) {
      const int i = r + 1;
      d[r] = h2 * rhs[i];
      if (i < n - 1) {
        lower[r] = 1.0;
        diag[r] = -2.0;
        upper[r] = 1.0;
      } else {
        lower[r] = 2.0;
        diag[r] = -2.0;
        upper[r] = 0.0;
      }
    }
    for (int r = 1; r < m; ++r) {
      const double w = lower[r] / diag[r - 1];
      diag[r] -= w * upper[r - 1];
      d[r] -= w * d[r - 1];
    }
    ScalarField phi(grid_);
    phi[n - 1] = d[m - 1] / diag[m - 1];
    for (int r = m - 2; r >= 0; --r) phi[r + 1] = (d[r] - upper[r] * phi[r + 2]) / diag[r];
    phi[0] = 0.0;
    return phi;
  }

  static void transform(const Grid& g, std::vector<double>& f, int axis,
                        const std::vector<double>& matrix, int n) {
    std::vector<double> line(n);
    for_each_line(g, axis, [&](std::size_t start, std::size_t s, int count) {
      for (int j = 0; j < count; ++j) line[j] = f[start + s * j];
      for (int k = 0; k < count; ++k) {
        double acc = 0.0;
        const double* row = matrix.data() + static_cast<std::size_t>(k) * n;
        for (int j = 0; j < count; ++j) acc += row[j] * line[j];
        f[start + s * k] = acc;
      }
    });
  }

  ScalarField solve_cosine(const ScalarField& rhs) const {
    std::vector<double> c = rhs.values;
    for (int a = 0; a < grid_.dim; ++a) transform(grid_, c, a, axes_[a].forward, axes_[a].n);
    for (std::size_t node = 0; node < c.size(); ++node) {
      double lambda = 0.0;
      for (int a = 0; a < grid_.dim; ++a) lambda += axes_[a].eigen[grid_.index(node, a)];
      c[node] = (node == 0) ? 0.0 : c[node] / lambda;
    }
    for (int a = 0; a < grid_.dim; ++a) transform(grid_, c, a, axes_[a].inverse, axes_[a].n);
    ScalarField phi(grid_);
    phi.values = std::move(c);
    return phi;
  }

  Grid grid_;
  std::array<Axis, 3> axes_{};
};

inline std::pair<ScalarField, PoissonReport> solve_poisson(const ScalarField& rhs,
                                                           double tol = 1e-10) {
  return PoissonSolver(rhs.grid).solve(rhs, tol);
}

}  // namespace sep
