#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sep/error.hpp"
#include "sep/grid.hpp"

namespace sep {

/// Generator type owned by each trajectory.
using Rng = std::mt19937_64;

/// Independent stream for trajectory `index` of an ensemble seeded by `master`.
inline Rng stream_rng(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x5e9u};
  return Rng(seq);
}

enum class YKind { quadratic, bounded, off };

inline YKind parse_y_kind(const std::string& s) {
  if (s == "quadratic") return YKind::quadratic;
  if (s == "bounded") return YKind::bounded;
  if (s == "off") return YKind::off;
  throw config_error("noise.kind must be one of quadratic, bounded, off; got '" + s + "'");
}

inline const char* to_string(YKind k) {
  switch (k) {
    case YKind::quadratic: return "quadratic";
    case YKind::bounded: return "bounded";
    default: return "off";
  }
}

/// Truncated cylindrical Wiener forcing sum_k F_k d beta_k with
/// F_k(rho, u) = a_k rho u Y(rho, u).
struct NoiseModel {
  std::vector<double> a;
  YKind kind = YKind::off;
  double eps = 0.0;
  std::array<double, 3> direction{1.0, 0.0, 0.0};

  /// Weights a_k proportional to 2^{-k/2}, k = 1..K, normalised to sum a_k^2 = 1.
  /// The direction vector defaults to the normalised diagonal of the box.
  static NoiseModel geometric(int K, YKind kind, double eps, int dim) {
    if (K < 1) throw domain_error("noise: mode count must be >= 1");
    std::vector<double> w(K);
    for (int k = 1; k <= K; ++k) w[k - 1] = std::pow(2.0, -0.5 * k);
    std::array<double, 3> d{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) d[i] = 1.0 / std::sqrt(static_cast<double>(dim));
    return with_weights(std::move(w), kind, eps, d);
  }

  static NoiseModel with_weights(std::vector<double> weights, YKind kind, double eps,
                                 std::array<double, 3> direction) {
    if (weights.empty()) throw domain_error("noise: mode count must be >= 1");
    if (!(eps >= 0.0)) throw domain_error("noise: amplitude must be nonnegative");
    double s = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw domain_error("noise: weights must be positive");
      s += w * w;
    }
    for (auto& w : weights) w /= std::sqrt(s);
    const double dn = std::sqrt(direction[0] * direction[0] + direction[1] * direction[1] +
                                direction[2] * direction[2]);
    if (!(dn > 0.0)) throw domain_error("noise: direction vector must be nonzero");
    for (auto& c : direction) c /= dn;
    NoiseModel m;
    m.a = std::move(weights);
    m.kind = kind;
    m.eps = eps;
    m.direction = direction;
    return m;
  }

  static NoiseModel off(int dim = 1) { return geometric(1, YKind::off, 0.0, dim); }

  int modes() const { return static_cast<int>(a.size()); }
};

struct NoiseIncrement {
  std::vector<double> dBeta;
  double dt = 0.0;

  /// sum_k a_k dBeta_k
  double combined(const NoiseModel& model) const {
    return std::inner_product(model.a.begin(), model.a.end(), dBeta.begin(), 0.0);
  }
};

/// K independent N(0, dt) draws.
inline NoiseIncrement sample_increment(const NoiseModel& model, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw domain_error("sample_increment: dt must be positive");
  NoiseIncrement inc;
  inc.dt = dt;
  inc.dBeta.resize(model.a.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(dt);
  for (auto& x : inc.dBeta) x = scale * normal(rng);
  return inc;
}

inline double Y(const NoiseModel& model, double rho, std::span<const double> u) {
  double ud = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) ud += u[i] * model.direction[i];
  switch (model.kind) {
    case YKind::quadratic: return model.eps * rho * ud;
    case YKind::bounded: return model.eps * std::tanh(rho * ud);
    default: return 0.0;
  }
}

/// Per-node diffusion term F/rho dW = u Y(rho, u) sum_k a_k dBeta_k.
/// Parallel to u, so a zero boundary normal component is preserved.
inline VectorField velocity_noise_term(const NoiseModel& model, const ScalarField& rho,
                                       const VectorField& u, const NoiseIncrement& inc) {
  require_same_grid(rho.grid, u.grid, "velocity_noise_term");
  if (inc.dBeta.size() != model.a.size())
    throw domain_error("velocity_noise_term: increment has wrong mode count");
  VectorField out(u.grid);
  if (model.kind == YKind::off) return out;
  const double xi = inc.combined(model);
  const int dim = u.dim();
  std::array<double, 3> local{};
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (int a = 0; a < dim; ++a) local[a] = u[a][i];
    const double y = Y(model, rho[i], std::span<const double>(local.data(), dim));
    for (int a = 0; a < dim; ++a) out[a][i] = local[a] * y * xi;
  }
  return out;
}

}  // namespace sep
