#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sep/ensemble.hpp"
#include "sep/error.hpp"
#include "sep/integrator.hpp"
#include "sep/noise.hpp"
#include "sep/steady_state.hpp"

namespace sep {

enum class OutputFormat { csv, json };

/// Parsed and validated experiment description. Keys are dotted paths into
/// the JSON config (`grid.n` is `{"grid": {"n": ...}}`).
struct ExperimentConfig {
  int dim = 1;
  int n = 0;
  double length = 1.0;

  double pressure_K = 1.0;
  double pressure_gamma = 2.0;

  std::string doping_kind = "constant";
  double doping_base = 1.0;
  double doping_amp = 0.0;

  double steady_tol = 1e-10;
  int steady_max_iter = 1000;
  double steady_theta = 0.5;

  int noise_K = 8;
  YKind noise_kind = YKind::off;
  double noise_eps = 0.0;
  std::uint64_t noise_seed = 0;

  std::optional<double> dt;
  double cfl = 0.4;
  std::optional<double> rho_floor;
  Scheme scheme = Scheme::euler_maruyama;
  int max_halvings = 10;
  double poisson_tol = 1e-10;
  double tau = 1.0;

  std::optional<double> t_end;
  int record_stride = 10;

  PerturbationKind perturbation_kind = PerturbationKind::none;
  double perturbation_eps = 0.0;

  std::uint64_t seed = 0;

  int ensemble_M = 64;
  std::vector<int> ensemble_moments{1, 2};
  std::optional<std::array<double, 2>> ensemble_window;
  int ensemble_bootstrap = 200;
  MomentSeries ensemble_fit_series = MomentSeries::pointwise;

  double measure_T = 25.0;
  int measure_doublings = 2;

  std::optional<int> workers;

  std::string output_dir = ".";
  OutputFormat output_format = OutputFormat::csv;

  Grid grid() const { return Grid::uniform(dim, n, length); }
  PressureLaw law() const { return PressureLaw::gamma_law(pressure_K, pressure_gamma); }

  DopingProfile doping(const Grid& g) const {
    if (doping_kind == "constant") return DopingProfile::constant(g, doping_base);
    return DopingProfile::cosine(g, doping_base, doping_amp);
  }

  NoiseModel noise() const { return NoiseModel::geometric(noise_K, noise_kind, noise_eps, dim); }

  Perturbation perturbation() const { return {perturbation_kind, perturbation_eps}; }

  /// Step settings; the density floor defaults to 1e-6 min(rho_bar).
  StepConfig step(const SteadyState& steady) const {
    StepConfig s;
    s.dt = require_dt();
    s.cfl = cfl;
    s.rho_floor = rho_floor.value_or(1e-6 * min_value(steady.rho_bar));
    s.scheme = scheme;
    s.max_halvings = max_halvings;
    s.poisson_tol = poisson_tol;
    return s;
  }

  double require_dt() const {
    if (!dt) throw config_error("missing required key 'step.dt'");
    return *dt;
  }
  double require_t_end() const {
    if (!t_end) throw config_error("missing required key 't_end'");
    return *t_end;
  }
};

namespace detail {

inline void flatten(const nlohmann::json& j, const std::string& prefix,
                    std::vector<std::pair<std::string, nlohmann::json>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      flatten(*it, key, out);
    else
      out.emplace_back(key, *it);
  }
}

class KeyReader {
 public:
  explicit KeyReader(const nlohmann::json& root) {
    if (!root.is_object()) throw config_error("config root must be a JSON object");
    std::vector<std::pair<std::string, nlohmann::json>> flat;
    flatten(root, "", flat);
    for (auto& [k, v] : flat) values_[k] = std::move(v);
  }

  template <class T>
  std::optional<T> get(const std::string& key) {
    known_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    try {
      return it->second.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw config_error("key '" + key + "' has the wrong type");
    }
  }

  template <class T>
  T required(const std::string& key) {
    auto v = get<T>(key);
    if (!v) throw config_error("missing required key '" + key + "'");
    return *v;
  }

  template <class T>
  void optional(const std::string& key, T& target) {
    if (auto v = get<T>(key)) target = *v;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : values_)
      if (!known_.count(k)) throw config_error("unknown config key '" + k + "'");
  }

 private:
  std::map<std::string, nlohmann::json> values_;
  std::set<std::string> known_;
};

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& root) {
  detail::KeyReader r(root);
  ExperimentConfig c;

  c.dim = r.required<int>("grid.dim");
  c.n = r.required<int>("grid.n");
  r.optional("grid.length", c.length);

  c.pressure_K = r.required<double>("pressure.K");
  c.pressure_gamma = r.required<double>("pressure.gamma");

  c.doping_kind = r.required<std::string>("doping.kind");
  c.doping_base = r.required<double>("doping.base");
  r.optional("doping.amp", c.doping_amp);

  r.optional("steady.tol", c.steady_tol);
  r.optional("steady.max_iter", c.steady_max_iter);
  r.optional("steady.theta", c.steady_theta);

  r.optional("noise.K", c.noise_K);
  if (auto k = r.get<std::string>("noise.kind")) c.noise_kind = parse_y_kind(*k);
  r.optional("noise.eps", c.noise_eps);
  r.optional("noise.seed", c.noise_seed);

  c.dt = r.get<double>("step.dt");
  r.optional("step.cfl", c.cfl);
  c.rho_floor = r.get<double>("step.rho_floor");
  if (auto s = r.get<std::string>("step.scheme")) c.scheme = parse_scheme(*s);
  r.optional("step.max_halvings", c.max_halvings);
  r.optional("step.poisson_tol", c.poisson_tol);
  r.optional("tau", c.tau);

  c.t_end = r.get<double>("t_end");
  r.optional("record_stride", c.record_stride);

  if (auto k = r.get<std::string>("perturbation.kind"))
    c.perturbation_kind = parse_perturbation_kind(*k);
  r.optional("perturbation.eps", c.perturbation_eps);

  r.optional("seed", c.seed);

  r.optional("ensemble.M", c.ensemble_M);
  r.optional("ensemble.moments", c.ensemble_moments);
  c.ensemble_window = r.get<std::array<double, 2>>("ensemble.window");
  r.optional("ensemble.bootstrap", c.ensemble_bootstrap);
  if (auto s = r.get<std::string>("ensemble.fit_series")) {
    if (s == "pointwise")
      c.ensemble_fit_series = MomentSeries::pointwise;
    else if (s == "running_sup")
      c.ensemble_fit_series = MomentSeries::running_sup;
    else
      throw config_error("ensemble.fit_series must be pointwise or running_sup");
  }

  r.optional("measure.T", c.measure_T);
  r.optional("measure.doublings", c.measure_doublings);

  c.workers = r.get<int>("workers");

  r.optional("output.dir", c.output_dir);
  if (auto f = r.get<std::string>("output.format")) {
    if (*f == "csv")
      c.output_format = OutputFormat::csv;
    else if (*f == "json")
      c.output_format = OutputFormat::json;
    else
      throw config_error("output.format must be csv or json; got '" + *f + "'");
  }

  r.reject_unknown();

  if (c.dim < 1 || c.dim > 3) throw config_error("grid.dim must be 1, 2 or 3");
  if (c.n < 4) throw config_error("grid.n must be at least 4");
  if (!(c.length > 0.0)) throw config_error("grid.length must be positive");
  if (!(c.pressure_K > 0.0)) throw config_error("pressure.K must be positive");
  if (!(c.pressure_gamma >= 1.0)) throw config_error("pressure.gamma must be >= 1");
  if (c.doping_kind != "constant" && c.doping_kind != "cosine")
    throw config_error("doping.kind must be constant or cosine");
  if (!(c.doping_base > 0.0)) throw config_error("doping.base must be positive");
  if (!(std::abs(c.doping_amp) < c.doping_base))
    throw config_error("doping.amp must be smaller than doping.base in magnitude");
  if (c.noise_K < 1) throw config_error("noise.K must be >= 1");
  if (!(c.noise_eps >= 0.0)) throw config_error("noise.eps must be nonnegative");
  if (c.dt && !(*c.dt > 0.0)) throw config_error("step.dt must be positive");
  if (!(c.cfl > 0.0 && c.cfl <= 1.0)) throw config_error("step.cfl must be in (0, 1]");
  if (c.rho_floor && !(*c.rho_floor > 0.0)) throw config_error("step.rho_floor must be positive");
  if (!(c.tau > 0.0)) throw config_error("tau must be positive");
  if (c.t_end && !(*c.t_end >= 0.0)) throw config_error("t_end must be nonnegative");
  if (c.record_stride < 1) throw config_error("record_stride must be >= 1");
  if (c.ensemble_M < 2) throw config_error("ensemble.M must be >= 2");
  for (int m : c.ensemble_moments)
    if (m < 1) throw config_error("ensemble.moments entries must be >= 1");
  if (!(c.measure_T > 0.0)) throw config_error("measure.T must be positive");
  if (c.measure_doublings < 0) throw config_error("measure.doublings must be >= 0");
  if (c.workers && *c.workers < 1) throw config_error("workers must be >= 1");
  return c;
}

}  // namespace sep
