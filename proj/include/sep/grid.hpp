#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sep/error.hpp"

namespace sep {

/// Uniform node-centred tensor grid over the box [0, L_0] x ... x [0, L_{dim-1}].
///
/// `n[a]` counts every node on axis `a`, boundary nodes included, so the
/// spacing is `L_a / (n[a] - 1)`. Unused axes carry a single node. Axis 0 is
/// the fastest-varying index in the flat node numbering.
struct Grid {
  int dim = 1;
  std::array<int, 3> n{1, 1, 1};
  std::array<double, 3> length{1.0, 1.0, 1.0};
  std::array<double, 3> h{1.0, 1.0, 1.0};

  static Grid uniform(int dim, int nodes, double side = 1.0) {
    return box(dim, {nodes, nodes, nodes}, {side, side, side});
  }

  static Grid box(int dim, std::array<int, 3> nodes, std::array<double, 3> sides) {
    if (dim < 1 || dim > 3)
      throw domain_error("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
    Grid g;
    g.dim = dim;
    for (int a = 0; a < 3; ++a) {
      if (a < dim) {
        if (nodes[a] < 4)
          throw domain_error("grid needs at least 4 nodes per axis, got " +
                             std::to_string(nodes[a]));
        if (!(sides[a] > 0.0)) throw domain_error("grid side length must be positive");
        g.n[a] = nodes[a];
        g.length[a] = sides[a];
        g.h[a] = sides[a] / (nodes[a] - 1);
      } else {
        g.n[a] = 1;
        g.length[a] = 0.0;
        g.h[a] = 1.0;
      }
    }
    return g;
  }

  std::size_t size() const {
    return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
           static_cast<std::size_t>(n[2]);
  }

  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(n[a]);
    return s;
  }

  int index(std::size_t node, int axis) const {
    return static_cast<int>((node / stride(axis)) % static_cast<std::size_t>(n[axis]));
  }

  double coordinate(std::size_t node, int axis) const { return index(node, axis) * h[axis]; }

  std::array<double, 3> point(std::size_t node) const {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) x[a] = coordinate(node, a);
    return x;
  }

  /// Trapezoidal quadrature weight of a node (product over axes).
  double weight(std::size_t node) const {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      const int i = index(node, a);
      w *= (i == 0 || i == n[a] - 1) ? 0.5 * h[a] : h[a];
    }
    return w;
  }

  double min_spacing() const { return *std::min_element(h.begin(), h.begin() + dim); }

  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= length[a];
    return v;
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Calls `f(start, stride, count)` for every grid line parallel to `axis`.
template <class F>
void for_each_line(const Grid& g, int axis, F&& f) {
  const std::size_t s = g.stride(axis);
  const auto count = static_cast<std::size_t>(g.n[axis]);
  const std::size_t block = s * count;
  for (std::size_t outer = 0; outer < g.size(); outer += block)
    for (std::size_t inner = 0; inner < s; ++inner) f(outer + inner, s, g.n[axis]);
}

struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

  template <class Fn>
  static ScalarField sample(const Grid& g, Fn&& fn) {
    ScalarField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = fn(g.point(i));
    return f;
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (auto& v : values) v *= s;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
};

/// One component array per axis; components beyond `grid.dim` stay empty.
struct VectorField {
  Grid grid;
  std::array<std::vector<double>, 3> components;

  VectorField() = default;
  explicit VectorField(const Grid& g, double fill = 0.0) : grid(g) {
    for (int a = 0; a < g.dim; ++a) components[a].assign(g.size(), fill);
  }

  template <class Fn>
  static VectorField sample(const Grid& g, Fn&& fn) {
    VectorField v(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::array<double, 3> value = fn(g.point(i));
      for (int a = 0; a < g.dim; ++a) v.components[a][i] = value[a];
    }
    return v;
  }

  int dim() const { return grid.dim; }
  std::size_t size() const { return grid.size(); }
  std::vector<double>& operator[](int a) { return components[a]; }
  const std::vector<double>& operator[](int a) const { return components[a]; }

  double squared_magnitude(std::size_t node) const {
    double s = 0.0;
    for (int a = 0; a < grid.dim; ++a) s += components[a][node] * components[a][node];
    return s;
  }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) throw grid_mismatch(std::string(where) + ": fields live on different grids");
}

// Inner products and norms, all weighted by the trapezoidal rule.

inline double inner(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f.grid, g.grid, "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.grid.weight(i) * f[i] * g[i];
  return s;
}

inline double inner(const VectorField& v, const VectorField& w) {
  require_same_grid(v.grid, w.grid, "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double dot = 0.0;
    for (int a = 0; a < v.dim(); ++a) dot += v[a][i] * w[a][i];
    s += v.grid.weight(i) * dot;
  }
  return s;
}

inline double integral(const ScalarField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.grid.weight(i) * f[i];
  return s;
}

inline double mean(const ScalarField& f) { return integral(f) / f.grid.volume(); }

inline double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }
inline double l2_norm(const VectorField& v) { return std::sqrt(inner(v, v)); }

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.values) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs(const VectorField& v) {
  double m = 0.0;
  for (int a = 0; a < v.dim(); ++a)
    for (double x : v[a]) m = std::max(m, std::abs(x));
  return m;
}

inline double min_value(const ScalarField& f) {
  return *std::min_element(f.values.begin(), f.values.end());
}

/// Largest |v_a| over boundary nodes whose outward normal is along axis a.
inline double boundary_normal_max(const VectorField& v) {
  double m = 0.0;
  for (int a = 0; a < v.dim(); ++a) {
    for_each_line(v.grid, a, [&](std::size_t start, std::size_t s, int count) {
      m = std::max(m, std::abs(v[a][start]));
      m = std::max(m, std::abs(v[a][start + s * (count - 1)]));
    });
  }
  return m;
}

/// Zeroes the normal component on every boundary face (u . nu = 0).
inline void project_normal(VectorField& v) {
  for (int a = 0; a < v.dim(); ++a) {
    for_each_line(v.grid, a, [&](std::size_t start, std::size_t s, int count) {
      v[a][start] = 0.0;
      v[a][start + s * (count - 1)] = 0.0;
    });
  }
}

/// Centred differences; the even ghost reflection f_{-1} = f_1 makes the
/// normal derivative vanish exactly on boundary nodes.
inline VectorField gradient(const ScalarField& f) {
  const Grid& g = f.grid;
  VectorField out(g);
  for (int a = 0; a < g.dim; ++a) {
    const double inv2h = 0.5 / g.h[a];
    auto& d = out[a];
    for_each_line(g, a, [&](std::size_t start, std::size_t s, int count) {
      d[start] = 0.0;
      d[start + s * (count - 1)] = 0.0;
      for (int i = 1; i < count - 1; ++i) {
        const std::size_t k = start + s * i;
        d[k] = (f[k + s] - f[k - s]) * inv2h;
      }
    });
  }
  return out;
}

/// Negative trapezoid-weighted adjoint of `gradient` on fields with zero
/// boundary normal component: centred differences with the odd ghost
/// reflection v_{-1} = -v_1.
inline ScalarField divergence(const VectorField& v, double boundary_tol = 1e-12) {
  const Grid& g = v.grid;
  const double leak = boundary_normal_max(v);
  if (leak > boundary_tol)
    throw boundary_violation("divergence: boundary normal component " + std::to_string(leak) +
                             " exceeds tolerance");
  ScalarField out(g);
  for (int a = 0; a < g.dim; ++a) {
    const double inv2h = 0.5 / g.h[a];
    const double invh = 1.0 / g.h[a];
    const auto& c = v[a];
    for_each_line(g, a, [&](std::size_t start, std::size_t s, int count) {
      const std::size_t last = start + s * (count - 1);
      out[start] += c[start + s] * invh;
      out[last] -= c[last - s] * invh;
      for (int i = 1; i < count - 1; ++i) {
        const std::size_t k = start + s * i;
        out[k] += (c[k + s] - c[k - s]) * inv2h;
      }
    });
  }
  return out;
}

/// Compact (2 dim + 1)-point Laplacian with even ghost reflection.
inline ScalarField laplacian(const ScalarField& f) {
  const Grid& g = f.grid;
  ScalarField out(g);
  for (int a = 0; a < g.dim; ++a) {
    const double invh2 = 1.0 / (g.h[a] * g.h[a]);
    for_each_line(g, a, [&](std::size_t start, std::size_t s, int count) {
      const std::size_t last = start + s * (count - 1);
      out[start] += 2.0 * (f[start + s] - f[start]) * invh2;
      out[last] += 2.0 * (f[last - s] - f[last]) * invh2;
      for (int i = 1; i < count - 1; ++i) {
        const std::size_t k = start + s * i;
        out[k] += (f[k + s] - 2.0 * f[k] + f[k - s]) * invh2;
      }
    });
  }
  return out;
}

namespace detail {

// p-th difference at node i of a line: centred where the stencil fits,
// forward near the lower end, backward near the upper end.
inline double line_difference(const double* f, std::size_t s, int count, int i, int p,
                              double h) {
  const int radius = (p == 3) ? 2 : 1;
  auto at = [&](int j) { return f[s * static_cast<std::size_t>(j)]; };
  if (i - radius >= 0 && i + radius < count) {
    switch (p) {
      case 1: return (at(i + 1) - at(i - 1)) / (2.0 * h);
      case 2: return (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h);
      default:
        return (at(i + 2) - 2.0 * at(i + 1) + 2.0 * at(i - 1) - at(i - 2)) / (2.0 * h * h * h);
    }
  }
  static constexpr int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  double acc = 0.0;
  if (i + p < count) {
    for (int j = 0; j <= p; ++j) acc += (((p - j) % 2) ? -1.0 : 1.0) * binom[p][j] * at(i + j);
  } else {
    for (int j = 0; j <= p; ++j) acc += ((j % 2) ? -1.0 : 1.0) * binom[p][j] * at(i - j);
  }
  return acc / std::pow(h, p);
}

inline std::vector<double> axis_difference(const Grid& g, const std::vector<double>& f, int axis,
                                           int order) {
  std::vector<double> out(f.size());
  for_each_line(g, axis, [&](std::size_t start, std::size_t s, int count) {
    for (int i = 0; i < count; ++i)
      out[start + s * i] = line_difference(f.data() + start, s, count, i, order, g.h[axis]);
  });
  return out;
}

inline double sobolev_squared(const Grid& g, const std::vector<double>& f, int k) {
  double total = 0.0;
  std::array<int, 3> beta{0, 0, 0};
  const int b1max = g.dim > 1 ? k : 0;
  const int b2max = g.dim > 2 ? k : 0;
  for (beta[2] = 0; beta[2] <= b2max; ++beta[2])
    for (beta[1] = 0; beta[1] <= b1max - beta[2]; ++beta[1])
      for (beta[0] = 0; beta[0] <= k - beta[1] - beta[2]; ++beta[0]) {
        std::vector<double> d = f;
        for (int a = 0; a < g.dim; ++a)
          if (beta[a] > 0) d = axis_difference(g, d, a, beta[a]);
        for (std::size_t i = 0; i < d.size(); ++i) total += g.weight(i) * d[i] * d[i];
      }
  return total;
}

inline void check_sobolev_order(const Grid& g, int k) {
  if (k < 0 || k > 3)
    throw domain_error("sobolev_norm: order must be in 0..3, got " + std::to_string(k));
  for (int a = 0; a < g.dim; ++a)
    if (g.n[a] < k + 2)
      throw domain_error("sobolev_norm: grid too coarse for order " + std::to_string(k));
}

}  // namespace detail

/// Discrete H^k norm: sqrt of the sum over |beta| <= k of ||D^beta f||_h^2.
inline double sobolev_norm(const ScalarField& f, int k) {
  detail::check_sobolev_order(f.grid, k);
  return std::sqrt(detail::sobolev_squared(f.grid, f.values, k));
}

inline double sobolev_norm(const VectorField& v, int k) {
  detail::check_sobolev_order(v.grid, k);
  double total = 0.0;
  for (int a = 0; a < v.dim(); ++a) total += detail::sobolev_squared(v.grid, v[a], k);
  return std::sqrt(total);
}

}  // namespace sep
