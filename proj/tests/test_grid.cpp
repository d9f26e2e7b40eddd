#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sep/grid.hpp"

using namespace sep;
using std::numbers::pi;

namespace {

ScalarField random_field(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  ScalarField f(g);
  for (auto& v : f.values) v = n01(rng);
  return f;
}

VectorField random_admissible(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  VectorField v(g);
  for (int a = 0; a < g.dim; ++a)
    for (auto& x : v[a]) x = n01(rng);
  project_normal(v);
  return v;
}

double max_interior_gradient_error(int n) {
  const Grid g = Grid::uniform(1, n);
  const auto f = ScalarField::sample(g, [](auto x) { return std::cos(pi * x[0]); });
  const VectorField d = gradient(f);
  double err = 0.0;
  for (std::size_t i = 1; i + 1 < g.size(); ++i)
    err = std::max(err, std::abs(d[0][i] + pi * std::sin(pi * g.coordinate(i, 0))));
  return err;
}

}  // namespace

TEST(Grid, SpacingAndSize) {
  const Grid g = Grid::box(2, {5, 9, 1}, {1.0, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(g.h[0], 0.25);
  EXPECT_DOUBLE_EQ(g.h[1], 0.25);
  EXPECT_EQ(g.size(), 45u);
  EXPECT_THROW(Grid::uniform(1, 3), domain_error);
  EXPECT_THROW(Grid::uniform(4, 8), domain_error);
}

TEST(Grid, TrapezoidWeightsIntegrateConstants) {
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = Grid::uniform(dim, 7, 2.0);
    EXPECT_NEAR(integral(ScalarField(g, 3.0)), 3.0 * std::pow(2.0, dim), 1e-12);
  }
}

TEST(Gradient, ConstantIsZero) {
  const Grid g = Grid::uniform(2, 9);
  const VectorField d = gradient(ScalarField(g, 4.2));
  EXPECT_EQ(max_abs(d), 0.0);
}

TEST(Gradient, QuadraticAtMidpoint) {
  const Grid g = Grid::uniform(1, 5);
  const auto f = ScalarField::sample(g, [](auto x) { return x[0] * x[0]; });
  EXPECT_EQ(gradient(f)[0][2], 1.0);
}

TEST(Gradient, SecondOrderConvergence) {
  const double e1 = max_interior_gradient_error(257);
  const double e2 = max_interior_gradient_error(513);
  EXPECT_LT(e1, 1e-4);
  EXPECT_GE(e1 / e2, 3.6);
  EXPECT_LE(e1 / e2, 4.4);
}

TEST(Gradient, BoundaryNormalIsZero) {
  std::mt19937_64 rng(3);
  const Grid g = Grid::uniform(3, 6);
  EXPECT_EQ(boundary_normal_max(gradient(random_field(g, rng))), 0.0);
}

TEST(Divergence, ZeroField) {
  const Grid g = Grid::uniform(2, 8);
  EXPECT_EQ(max_abs(divergence(VectorField(g))), 0.0);
}

TEST(Divergence, SineConverges) {
  double prev = 0.0;
  for (int n : {257, 513}) {
    const Grid g = Grid::uniform(1, n);
    const auto v = VectorField::sample(g, [](auto x) {
      return std::array<double, 3>{std::sin(pi * x[0]), 0.0, 0.0};
    });
    VectorField p = v;
    project_normal(p);  // sin(0) and sin(pi) are round-off away from zero
    const ScalarField d = divergence(p);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      err = std::max(err, std::abs(d[i] - pi * std::cos(pi * g.coordinate(i, 0))));
    EXPECT_LT(err, 1e-4);
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 4.0, 0.4);
    }
    prev = err;
  }
}

TEST(Divergence, RejectsNormalComponent) {
  const Grid g = Grid::uniform(1, 9);
  VectorField v(g, 0.0);
  v[0][0] = 1e-6;
  EXPECT_THROW(divergence(v), boundary_violation);
  v[0][0] = 5e-13;
  EXPECT_NO_THROW(divergence(v));
}

TEST(Divergence, RejectsMismatchedGrids) {
  const Grid g = Grid::uniform(1, 9);
  EXPECT_THROW(inner(ScalarField(g), ScalarField(Grid::uniform(1, 10))), grid_mismatch);
}

TEST(SummationByParts, RandomPairsAllDimensions) {
  std::mt19937_64 rng(11);
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = Grid::box(dim, {9, 7, 5}, {1.0, 1.3, 0.7});
    for (int trial = 0; trial < 100; ++trial) {
      const ScalarField f = random_field(g, rng);
      const VectorField v = random_admissible(g, rng);
      const double lhs = inner(gradient(f), v);
      const double rhs = -inner(f, divergence(v));
      EXPECT_LE(std::abs(lhs - rhs), 1e-12 * l2_norm(f) * l2_norm(v)) << "dim " << dim;
    }
  }
}

TEST(Laplacian, ConstantIsZero) {
  const Grid g = Grid::uniform(3, 5);
  EXPECT_EQ(max_abs(laplacian(ScalarField(g, 2.0))), 0.0);
}

TEST(Laplacian, CosineConvergesSecondOrder) {
  double prev = 0.0;
  for (int n : {129, 257}) {
    const Grid g = Grid::uniform(1, n);
    const auto f = ScalarField::sample(g, [](auto x) { return std::cos(pi * x[0]); });
    const ScalarField l = laplacian(f);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      err = std::max(err, std::abs(l[i] + pi * pi * f[i]));
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 4.0, 0.4);
    }
    prev = err;
  }
}

// The compact stencil and the composition of the centred operators are two
// consistent discretisations of the same operator; they agree to O(h^2) on
// smooth Neumann data, not to round-off.
TEST(Laplacian, AgreesWithDivergenceOfGradientOnSmoothData) {
  double prev = 0.0;
  for (int n : {65, 129}) {
    const Grid g = Grid::uniform(1, n);
    const auto f = ScalarField::sample(g, [](auto x) { return std::cos(2 * pi * x[0]); });
    double err = 0.0;
    const ScalarField a = laplacian(f);
    const ScalarField b = divergence(gradient(f));
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 4.0, 0.5);
    }
    prev = err;
  }
}

TEST(Laplacian, SelfAdjointOnTrapezoidInnerProduct) {
  std::mt19937_64 rng(5);
  const Grid g = Grid::box(2, {9, 6, 1}, {1.0, 0.5, 1.0});
  const ScalarField f = random_field(g, rng), k = random_field(g, rng);
  EXPECT_NEAR(inner(laplacian(f), k), inner(f, laplacian(k)), 1e-10 * l2_norm(f) * l2_norm(k));
}

TEST(Sobolev, ZeroAndConstant) {
  const Grid g = Grid::uniform(1, 33);
  for (int k = 0; k <= 3; ++k) EXPECT_EQ(sobolev_norm(ScalarField(g), k), 0.0);
  EXPECT_NEAR(sobolev_norm(ScalarField(g, -2.5), 0), 2.5, 1e-14);
  EXPECT_NEAR(sobolev_norm(ScalarField(g, -2.5), 3), 2.5, 1e-14);
}

TEST(Sobolev, SineFirstOrderNorm) {
  const Grid g = Grid::uniform(1, 257);
  const auto f = ScalarField::sample(g, [](auto x) { return std::sin(pi * x[0]); });
  const double exact = std::sqrt(0.5 + pi * pi / 2);
  EXPECT_NEAR(sobolev_norm(f, 1), exact, 0.01 * exact);
}

TEST(Sobolev, MonotoneInOrder) {
  std::mt19937_64 rng(9);
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = Grid::uniform(dim, 6);
    const ScalarField f = random_field(g, rng);
    const VectorField v = random_admissible(g, rng);
    for (int k = 0; k < 3; ++k) {
      EXPECT_LE(sobolev_norm(f, k), sobolev_norm(f, k + 1));
      EXPECT_LE(sobolev_norm(v, k), sobolev_norm(v, k + 1));
    }
  }
}

TEST(Sobolev, RejectsHighOrder) {
  const Grid g = Grid::uniform(1, 9);
  EXPECT_THROW(sobolev_norm(ScalarField(g), 4), domain_error);
  EXPECT_THROW(sobolev_norm(ScalarField(g), -1), domain_error);
}
