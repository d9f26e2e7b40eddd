#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "sep/config.hpp"
#include "sep/diagnostics.hpp"
#include "sep/ensemble.hpp"
#include "sep/integrator.hpp"
#include "sep/io.hpp"
#include "sep/steady_state.hpp"

namespace sep {

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

inline void apply(ExperimentConfig& c, const Overrides& o) {
  if (o.seed) {
    c.seed = *o.seed;
    c.noise_seed = *o.seed;
  }
  if (o.workers) {
    if (*o.workers < 1) throw config_error("--workers must be >= 1");
    c.workers = *o.workers;
  }
  if (o.out) c.output_dir = *o.out;
}

inline Table trajectory_table(const Trajectory& tr) {
  Table t;
  t.columns = {"t",      "sigma_h0", "sigma_h1", "sigma_h2",    "sigma_h3", "u_h0",
               "u_h1",   "u_h2",     "u_h3",     "grad_phi_l2", "energy",   "mass",
               "min_rho", "subsonic", "combined"};
  for (const auto& r : tr.records) {
    const auto& n = r.norms;
    t.add({n.t, n.sigma_h[0], n.sigma_h[1], n.sigma_h[2], n.sigma_h[3], n.u_h[0], n.u_h[1],
           n.u_h[2], n.u_h[3], n.grad_phi, r.energy, r.mass, r.min_rho,
           std::int64_t{r.subsonic ? 1 : 0}, n.combined});
  }
  return t;
}

inline nlohmann::json fit_json(const DecayFit& f, int m, MomentSeries series) {
  nlohmann::json j;
  j["m"] = m;
  j["series"] = to_string(series);
  j["alpha_hat"] = f.alpha_hat;
  j["log_C"] = f.log_C;
  j["r2"] = f.r2;  // NaN serialises as null when degenerate
  j["window"] = {f.window[0], f.window[1]};
  j["points"] = f.points;
  j["degenerate"] = f.degenerate;
  return j;
}

inline Problem build_problem(const ExperimentConfig& c) {
  const Grid g = c.grid();
  const PressureLaw law = c.law();
  DopingProfile doping = c.doping(g);
  SteadyState steady = solve_steady(g, law, doping, c.steady_tol, c.steady_max_iter, c.steady_theta);
  return Problem{law, std::move(doping), std::move(steady), c.tau};
}

/// `steady`: steady fields (x..., rho, phi) and a JSON summary.
inline nlohmann::json cmd_steady(const ExperimentConfig& c) {
  const Problem p = build_problem(c);
  const Grid& g = p.grid();
  Table t;
  static const char* axis_names[3] = {"x", "y", "z"};
  for (int a = 0; a < g.dim; ++a) t.columns.emplace_back(axis_names[a]);
  t.columns.emplace_back("rho");
  t.columns.emplace_back("phi");
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<Cell> row;
    for (int a = 0; a < g.dim; ++a) row.emplace_back(g.coordinate(i, a));
    row.emplace_back(p.steady.rho_bar[i]);
    row.emplace_back(p.steady.phi_bar[i]);
    t.add(std::move(row));
  }
  write_table(c.output_dir, "steady", t, c.output_format);
  nlohmann::json summary;
  summary["residual"] = p.steady.residual;
  summary["iterations"] = p.steady.iterations;
  summary["mass_defect"] = p.steady.mass_defect;
  summary["min_rho"] = min_value(p.steady.rho_bar);
  write_json(c.output_dir, "steady_summary.json", summary);
  return summary;
}

/// `run`: one trajectory.
inline nlohmann::json cmd_run(const ExperimentConfig& c) {
  const Problem p = build_problem(c);
  const Integrator integrator(p, c.noise(), c.step(p.steady));
  const State init = initial_state(p, c.perturbation(), integrator.config().rho_floor,
                                   c.poisson_tol);
  Rng rng = stream_rng(c.noise_seed, 0);
  const Trajectory tr = integrator.simulate(init, c.require_t_end(), rng, c.record_stride);
  write_table(c.output_dir, "trajectory", trajectory_table(tr), c.output_format);
  nlohmann::json summary;
  summary["records"] = tr.records.size();
  summary["steps"] = tr.steps;
  summary["halvings"] = tr.halvings;
  summary["cfl_reductions"] = tr.cfl_reductions;
  summary["subsonic_violations"] = tr.subsonic_violations;
  summary["final_combined"] = tr.records.back().norms.combined;
  write_json(c.output_dir, "run_summary.json", summary);
  return summary;
}

inline EnsembleConfig ensemble_config(const ExperimentConfig& c, Problem p) {
  const StepConfig step = c.step(p.steady);
  return EnsembleConfig{
      .problem = std::move(p),
      .noise = c.noise(),
      .step = step,
      .perturbation = c.perturbation(),
      .t_end = c.require_t_end(),
      .record_stride = c.record_stride,
      .trajectories = c.ensemble_M,
      .master_seed = c.seed,
      .orders = c.ensemble_moments,
      .workers = c.workers.value_or(
          static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))),
      .bootstrap_resamples = c.ensemble_bootstrap,
  };
}

inline Table moments_table(const EnsembleStats& st, MomentSeries series) {
  Table t;
  t.columns = {"t", "m", "estimate", "stderr"};
  for (int m : st.orders) {
    const auto& est = st.series(m, series);
    const auto& se = st.series_stderr(m, series);
    for (std::size_t k = 0; k < st.times.size(); ++k)
      t.add({st.times[k], std::int64_t{m}, est[k], se[k]});
  }
  return t;
}

/// `ensemble`: moments of the running supremum (and of the pointwise
/// norm), decay fits and the Chebyshev exceedance check.
inline nlohmann::json cmd_ensemble(const ExperimentConfig& c) {
  const EnsembleConfig e = ensemble_config(c, build_problem(c));
  const EnsembleStats st = run_ensemble(e);
  write_table(c.output_dir, "moments", moments_table(st, MomentSeries::running_sup),
              c.output_format);
  write_table(c.output_dir, "moments_pointwise", moments_table(st, MomentSeries::pointwise),
              c.output_format);

  const std::array<double, 2> window = c.ensemble_window.value_or(
      std::array<double, 2>{std::min(2.0, 0.1 * e.t_end), e.t_end});
  nlohmann::json fits = nlohmann::json::array();
  for (int m : st.orders) {
    nlohmann::json entry;
    try {
      entry = fit_json(fit_decay(st, m, window, c.ensemble_fit_series), m, c.ensemble_fit_series);
    } catch (const domain_error& err) {
      entry = {{"m", m}, {"series", to_string(c.ensemble_fit_series)}, {"error", err.what()}};
    }
    fits.push_back(std::move(entry));
  }
  write_json(c.output_dir, "fit.json", fits);

  const double threshold = 4.0 * median_sup(st);
  nlohmann::json cheb = nlohmann::json::array();
  if (threshold > 0.0) {
    for (int m : st.orders) {
      const ChebyshevReport r = chebyshev_check(st, threshold, m);
      cheb.push_back({{"m", m},
                      {"threshold", r.threshold},
                      {"empirical", r.empirical},
                      {"bound", r.bound},
                      {"stderr", r.standard_error},
                      {"pass", r.pass}});
    }
  }
  write_json(c.output_dir, "chebyshev.json", cheb);

  nlohmann::json summary;
  summary["M"] = st.M;
  summary["records"] = st.times.size();
  summary["fits"] = fits;
  summary["chebyshev"] = cheb;
  return summary;
}

/// `measure`: one long trajectory and Krylov-Bogoliubov averages at the
/// horizons T, 2T, ..., 2^d T.
inline nlohmann::json cmd_measure(const ExperimentConfig& c) {
  const Problem p = build_problem(c);
  const Integrator integrator(p, c.noise(), c.step(p.steady));
  const State init = initial_state(p, c.perturbation(), integrator.config().rho_floor,
                                   c.poisson_tol);
  const double horizon = c.measure_T * static_cast<double>(1 << c.measure_doublings);
  Rng rng = stream_rng(c.noise_seed, 0);
  const Trajectory tr = integrator.simulate(init, horizon, rng, c.record_stride);
  write_table(c.output_dir, "trajectory", trajectory_table(tr), c.output_format);

  Table kb;
  kb.columns = {"T", "psi_id", "avg", "target", "gap"};
  nlohmann::json rows = nlohmann::json::array();
  for (const Observable& psi : {psi_exp(), psi_tanh()}) {
    double T = c.measure_T;
    for (int d = 0; d <= c.measure_doublings; ++d, T *= 2.0) {
      const KBAverage a = kb_average(tr, psi, T);
      kb.add({a.T, a.psi_id, a.avg, a.target, a.gap});
      rows.push_back({{"T", a.T}, {"psi_id", a.psi_id}, {"gap", a.gap}});
    }
  }
  write_table(c.output_dir, "kb", kb, c.output_format);
  nlohmann::json summary;
  summary["horizon"] = horizon;
  summary["kb"] = rows;
  return summary;
}

}  // namespace sep
