#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sep/diagnostics.hpp"
#include "sep/error.hpp"
#include "sep/integrator.hpp"
#include "sep/noise.hpp"

namespace sep {

struct EnsembleConfig {
  Problem problem;
  NoiseModel noise;
  StepConfig step;
  Perturbation perturbation;
  double t_end = 1.0;
  int record_stride = 10;
  int trajectories = 64;
  std::uint64_t master_seed = 0;
  std::vector<int> orders{1, 2};
  int workers = 1;
  int bootstrap_resamples = 200;
};

enum class MomentSeries {
  running_sup,  ///< E[(sup_{s <= t} combined(s))^m]
  pointwise,    ///< E[combined(t)^m]
};

inline const char* to_string(MomentSeries s) {
  return s == MomentSeries::running_sup ? "running_sup" : "pointwise";
}

struct EnsembleStats {
  std::vector<double> times;
  std::vector<int> orders;
  /// Indexed [order position][time index].
  std::vector<std::vector<double>> moment, standard_error;
  std::vector<std::vector<double>> pointwise, pointwise_standard_error;
  /// sup over the whole run, one per trajectory.
  std::vector<double> trajectory_sup;
  int M = 0;

  std::size_t order_index(int m) const {
    const auto it = std::find(orders.begin(), orders.end(), m);
    if (it == orders.end())
      throw domain_error("ensemble: moment order " + std::to_string(m) + " was not estimated");
    return static_cast<std::size_t>(it - orders.begin());
  }

  const std::vector<double>& series(int m, MomentSeries s) const {
    const auto k = order_index(m);
    return s == MomentSeries::running_sup ? moment[k] : pointwise[k];
  }
  const std::vector<double>& series_stderr(int m, MomentSeries s) const {
    const auto k = order_index(m);
    return s == MomentSeries::running_sup ? standard_error[k] : pointwise_standard_error[k];
  }
};

struct TrajectoryFailure {
  int index = 0;
  std::uint64_t master_seed = 0;
  double time = 0.0;
  std::string message;
};

class ensemble_error : public error {
 public:
  explicit ensemble_error(std::vector<TrajectoryFailure> failures)
      : error("ensemble_failure", describe(failures)), failures_(std::move(failures)) {}
  const std::vector<TrajectoryFailure>& failures() const { return failures_; }

 private:
  static std::string describe(const std::vector<TrajectoryFailure>& f) {
    std::ostringstream msg;
    msg << f.size() << " trajectories failed:";
    for (const auto& x : f)
      msg << " [index " << x.index << ", stream (" << x.master_seed << ", " << x.index
          << "), t = " << x.time << ": " << x.message << "]";
    return msg.str();
  }
  std::vector<TrajectoryFailure> failures_;
};

/// Reserved stream index for the bootstrap resampler.
inline constexpr std::uint64_t bootstrap_stream = std::numeric_limits<std::uint64_t>::max();

namespace detail {

// Runs fn(i) for i in [0, count) on `workers` threads; results go to
// pre-assigned slots so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
}

inline double ipow(double x, int m) {
  double r = 1.0;
  for (int k = 0; k < m; ++k) r *= x;
  return r;
}

// Mean over rows of row[k]^m for every column k, rows chosen by `pick`.
inline std::vector<double> moment_of(const std::vector<std::vector<double>>& rows,
                                     std::span<const int> pick, int m) {
  std::vector<double> out(rows.front().size(), 0.0);
  for (int r : pick)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += ipow(rows[r][k], m);
  for (auto& v : out) v /= static_cast<double>(pick.size());
  return out;
}

inline std::vector<double> bootstrap_stderr(const std::vector<std::vector<double>>& rows, int m,
                                            int resamples, std::uint64_t seed) {
  const int M = static_cast<int>(rows.size());
  const std::size_t T = rows.front().size();
  // Welford accumulation: identical resamples give exactly zero spread.
  std::vector<double> mean(T, 0.0), m2(T, 0.0);
  Rng rng = stream_rng(seed, bootstrap_stream - static_cast<std::uint64_t>(m));
  std::uniform_int_distribution<int> pick_one(0, M - 1);
  std::vector<int> pick(M);
  for (int b = 0; b < resamples; ++b) {
    for (auto& p : pick) p = pick_one(rng);
    const auto est = moment_of(rows, pick, m);
    for (std::size_t k = 0; k < T; ++k) {
      const double d = est[k] - mean[k];
      mean[k] += d / (b + 1);
      m2[k] += d * (est[k] - mean[k]);
    }
  }
  std::vector<double> se(T, 0.0);
  if (resamples < 2) return se;
  for (std::size_t k = 0; k < T; ++k) se[k] = std::sqrt(std::max(m2[k], 0.0) / (resamples - 1));
  return se;
}

}  // namespace detail

/// Builds moment estimates from per-trajectory combined-norm series that
/// share the record times `times`.
inline EnsembleStats moments_from_series(std::vector<double> times,
                                         const std::vector<std::vector<double>>& combined,
                                         std::vector<int> orders, int resamples,
                                         std::uint64_t seed) {
  if (combined.size() < 2) throw domain_error("ensemble: need at least two trajectories");
  for (const auto& row : combined)
    if (row.size() != times.size())
      throw domain_error("ensemble: trajectories recorded at different times");

  EnsembleStats st;
  st.times = std::move(times);
  st.orders = std::move(orders);
  st.M = static_cast<int>(combined.size());

  std::vector<std::vector<double>> sup = combined;
  for (auto& row : sup)
    for (std::size_t k = 1; k < row.size(); ++k) row[k] = std::max(row[k], row[k - 1]);
  for (const auto& row : sup) st.trajectory_sup.push_back(row.back());

  std::vector<int> all(st.M);
  for (int i = 0; i < st.M; ++i) all[i] = i;
  for (int m : st.orders) {
    if (m < 1) throw domain_error("ensemble: moment orders must be >= 1");
    st.moment.push_back(detail::moment_of(sup, all, m));
    st.standard_error.push_back(detail::bootstrap_stderr(sup, m, resamples, seed));
    st.pointwise.push_back(detail::moment_of(combined, all, m));
    st.pointwise_standard_error.push_back(
        detail::bootstrap_stderr(combined, m, resamples, seed ^ 0x9e37));
  }
  return st;
}

/// M independent trajectories on streams (master_seed, i). Output is a
/// function of (config, M, master_seed) only, independent of `workers`.
inline EnsembleStats run_ensemble(const EnsembleConfig& cfg) {
  if (cfg.trajectories < 2) throw domain_error("run_ensemble: need M >= 2 trajectories");
  const Integrator integrator(cfg.problem, cfg.noise, cfg.step);
  const State init = initial_state(cfg.problem, cfg.perturbation, cfg.step.rho_floor,
                                   cfg.step.poisson_tol);

  std::vector<std::vector<double>> combined(cfg.trajectories);
  std::vector<std::vector<double>> times(cfg.trajectories);
  std::vector<std::optional<TrajectoryFailure>> failed(cfg.trajectories);

  detail::parallel_for(cfg.trajectories, cfg.workers, [&](int i) {
    Rng rng = stream_rng(cfg.master_seed, static_cast<std::uint64_t>(i));
    try {
      const Trajectory tr = integrator.simulate(init, cfg.t_end, rng, cfg.record_stride);
      combined[i] = tr.combined();
      times[i] = tr.times();
    } catch (const blow_up_error& e) {
      failed[i] = TrajectoryFailure{i, cfg.master_seed, e.time(), e.what()};
    } catch (const std::exception& e) {
      failed[i] = TrajectoryFailure{i, cfg.master_seed, std::nan(""), e.what()};
    }
  });

  std::vector<TrajectoryFailure> failures;
  for (auto& f : failed)
    if (f) failures.push_back(*f);
  if (!failures.empty()) throw ensemble_error(std::move(failures));

  return moments_from_series(std::move(times.front()), combined, cfg.orders,
                             cfg.bootstrap_resamples, cfg.master_seed);
}

struct DecayFit {
  double alpha_hat = 0.0;
  double log_C = 0.0;
  double r2 = 0.0;
  std::array<double, 2> window{0.0, 0.0};
  int points = 0;
  bool degenerate = false;  ///< r2 undefined: fewer than 3 points or a constant series
};

/// Least squares of log(value) against t over t in [lo, hi].
inline DecayFit fit_log_linear(std::span<const double> times, std::span<const double> values,
                               std::array<double, 2> window) {
  if (times.size() != values.size()) throw domain_error("fit: series lengths differ");
  DecayFit fit;
  fit.window = window;
  double sx = 0.0, sy = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window[0] || times[i] > window[1]) continue;
    if (!(values[i] > 0.0)) {
      std::ostringstream msg;
      msg << "fit: nonpositive value " << values[i] << " at t = " << times[i]
          << " (machine-precision floor reached? shrink the window)";
      throw domain_error(msg.str());
    }
    pts.emplace_back(times[i], std::log(values[i]));
    sx += times[i];
    sy += pts.back().second;
  }
  fit.points = static_cast<int>(pts.size());
  if (fit.points < 2) throw domain_error("fit: fewer than two points in the window");
  const double xm = sx / fit.points, ym = sy / fit.points;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - xm) * (x - xm);
    sxy += (x - xm) * (y - ym);
    syy += (y - ym) * (y - ym);
  }
  if (sxx == 0.0) throw domain_error("fit: window contains a single time");
  const double slope = sxy / sxx;
  fit.alpha_hat = -slope;
  fit.log_C = ym - slope * xm;
  const double scale = std::max(1.0, std::abs(ym));
  if (fit.points < 3 || syy <= 1e-28 * scale * scale * fit.points) {
    fit.degenerate = true;
    fit.r2 = std::numeric_limits<double>::quiet_NaN();
    if (syy <= 1e-28 * scale * scale * fit.points) fit.alpha_hat = 0.0;
  } else {
    fit.r2 = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  }
  return fit;
}

/// Fits log(moment[m]) ~ log C - alpha t over the window.
inline DecayFit fit_decay(const EnsembleStats& stats, int m, std::array<double, 2> window,
                          MomentSeries series) {
  return fit_log_linear(stats.times, stats.series(m, series), window);
}

/// Bounded observable of the perturbation norms.
struct Observable {
  std::string id;
  std::function<double(const PerturbationNorms&)> fn;
};

inline Observable psi_exp() {
  return {"psi_exp", [](const PerturbationNorms& n) { return std::exp(-n.combined); }};
}

inline Observable psi_tanh() {
  return {"psi_tanh", [](const PerturbationNorms& n) { return std::tanh(n.sigma_h[0]); }};
}

struct KBAverage {
  std::string psi_id;
  double T = 0.0;
  double avg = 0.0;
  double target = 0.0;
  double gap = 0.0;
};

/// (1/T) int_0^T psi(state(t)) dt by left-endpoint quadrature over the
/// records; target is psi at the steady state.
inline KBAverage kb_average(const Trajectory& traj, const Observable& psi, double T) {
  const auto& rec = traj.records;
  if (rec.empty()) throw domain_error("kb_average: empty trajectory");
  const double t0 = rec.front().t();
  if (!(T > 0.0) || rec.back().t() < t0 + T * (1.0 - 1e-12))
    throw domain_error("kb_average: trajectory does not reach the horizon");
  KBAverage out;
  out.psi_id = psi.id;
  out.T = T;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size() && rec[i].t() < t0 + T; ++i) {
    const double right = std::min(rec[i + 1].t(), t0 + T);
    acc += psi.fn(rec[i].norms) * (right - rec[i].t());
  }
  out.avg = acc / T;
  out.target = psi.fn(PerturbationNorms{});
  out.gap = std::abs(out.avg - out.target);
  return out;
}

struct ChebyshevReport {
  double threshold = 0.0;
  int m = 1;
  double empirical = 0.0;  ///< fraction of trajectories whose sup exceeds the threshold
  double bound = 0.0;      ///< E[sup^m] / threshold^m
  double standard_error = 0.0;  ///< binomial standard error at p = min(bound, 1)
  bool pass = false;
};

inline ChebyshevReport chebyshev_check(const EnsembleStats& stats, double threshold, int m) {
  if (!(threshold > 0.0)) throw domain_error("chebyshev_check: threshold must be positive");
  ChebyshevReport r;
  r.threshold = threshold;
  r.m = m;
  int exceed = 0;
  for (double s : stats.trajectory_sup) exceed += s > threshold ? 1 : 0;
  r.empirical = static_cast<double>(exceed) / stats.M;
  r.bound = stats.moment[stats.order_index(m)].back() / detail::ipow(threshold, m);
  const double p = std::min(r.bound, 1.0);
  r.standard_error = std::sqrt(p * (1.0 - p) / stats.M);
  r.pass = r.empirical <= r.bound + 3.0 * r.standard_error;
  return r;
}

/// Median of the per-trajectory sups.
inline double median_sup(const EnsembleStats& stats) {
  std::vector<double> s = stats.trajectory_sup;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

}  // namespace sep
