#ifndef SUBRAD_SCENARIOS_HPP
#define SUBRAD_SCENARIOS_HPP

/// \file scenarios.hpp
/// \brief The three experimental protocols (noise-triggered relaxation,
///        seeded decay with pump switching, pump-ratio sweep) and the
///        observables extracted from their trajectories.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "subrad/integrator.hpp"
#include "subrad/model.hpp"
#include "subrad/schedule.hpp"

namespace subrad {

using Window = std::pair<double, double>;

struct PulseInfo {
  double t_peak = 0.0;
  double peak_photons = 0.0;
  double t_half_rise = 0.0;
  /// Separate excursions above half the peak; an excursion ends once the
  /// photon number drops below a quarter of the peak.
  int excursions = 0;
};

struct SteadyInfo {
  double t_detect = 0.0;
  std::vector<double> populations;  // window averages, window order
  double residual_photons = 0.0;
};

/// Global maximum of |a|^2 over samples outside `masked` ([start, end)
/// windows). Returns nullopt when no unmasked sample carries any light.
inline std::optional<PulseInfo> detect_pulse(const Trajectory& traj,
                                             std::span<const Window> masked = {}) {
  if (traj.empty()) throw std::invalid_argument("detect_pulse: empty trajectory");
  auto is_masked = [&](double t) {
    return std::any_of(masked.begin(), masked.end(), [t](const Window& w) {
      return t >= w.first && t < w.second;
    });
  };

  PulseInfo info;
  bool any = false;
  for (const auto& s : traj.samples) {
    if (is_masked(s.t)) continue;
    if (!any || s.photons() > info.peak_photons) {
      info.peak_photons = s.photons();
      info.t_peak = s.t;
      any = true;
    }
  }
  if (!any || !(info.peak_photons > 0.0)) return std::nullopt;

  const double half = 0.5 * info.peak_photons;
  const double quarter = 0.25 * info.peak_photons;
  bool found_rise = false;
  bool above = false;
  for (const auto& s : traj.samples) {
    if (is_masked(s.t)) continue;
    const double n = s.photons();
    if (!found_rise && n >= half) {
      info.t_half_rise = s.t;
      found_rise = true;
    }
    if (!above && n >= half) {
      above = true;
      ++info.excursions;
    } else if (above && n < quarter) {
      above = false;
    }
  }
  return info;
}

/// Earliest sample time t >= not_before such that over [t, t + window] every
/// population varies by less than pop_tol and |a|^2 stays below field_tol.
/// Returns nullopt when no such window exists.
inline std::optional<SteadyInfo> detect_steady(const Trajectory& traj, double window,
                                               double pop_tol, double field_tol,
                                               double not_before = 0.0) {
  if (traj.empty()) throw std::invalid_argument("detect_steady: empty trajectory");
  const auto& s = traj.samples;
  if (!(window > 0.0) || !(window < s.back().t - s.front().t))
    throw std::invalid_argument("detect_steady: window must be shorter than the run");

  const std::size_t K = s.front().modes.size();
  std::vector<double> lo(K), hi(K);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].t < not_before) continue;
    const double t_stop = s[i].t + window;
    if (t_stop > s.back().t * (1.0 + 1e-12)) break;

    bool ok = true;
    std::fill(lo.begin(), lo.end(), 2.0);
    std::fill(hi.begin(), hi.end(), -1.0);
    std::size_t j = i;
    for (; j < s.size() && s[j].t <= t_stop * (1.0 + 1e-12); ++j) {
      if (!(s[j].photons() < field_tol)) {
        ok = false;
        break;
      }
      for (std::size_t k = 0; k < K; ++k) {
        const double p = std::norm(s[j].modes[k]);
        lo[k] = std::min(lo[k], p);
        hi[k] = std::max(hi[k], p);
        if (hi[k] - lo[k] >= pop_tol) ok = false;
      }
      if (!ok) break;
    }
    if (!ok) continue;

    SteadyInfo out;
    out.t_detect = s[i].t;
    out.populations.assign(K, 0.0);
    for (std::size_t m = i; m < j; ++m) {
      for (std::size_t k = 0; k < K; ++k) out.populations[k] += std::norm(s[m].modes[k]);
      out.residual_photons += s[m].photons();
    }
    const double count = static_cast<double>(j - i);
    for (auto& p : out.populations) p /= count;
    out.residual_photons /= count;
    return out;
  }
  return std::nullopt;
}

/// Field slaved to the atomic grating, from da/dt = 0:
/// (g N alpha(t) S + eta) / kappa.
inline cplx adiabatic_field(std::span<const cplx> modes, double eps, double t,
                            const ModelParams& p, double atoms, double eta = 0.0) {
  return (p.g * atoms * alpha(t, eps, p.Delta) * structure_factor(modes) + eta) /
         p.kappa;
}

inline cplx adiabatic_field(const ModeAmplitudes& modes, double eps, double t,
                            const ModelParams& p, double atoms, double eta = 0.0) {
  return adiabatic_field(modes.amps(), eps, t, p, atoms, eta);
}

// ---------------------------------------------------------------------------
// Protocols

struct DetectionSettings {
  double window = 0.3e-3;
  double pop_tol = 0.02;
  double field_frac = 0.01;  // field tolerance as a fraction of the pulse peak
  friend bool operator==(const DetectionSettings&, const DetectionSettings&) = default;
};

struct RelaxationConfig {
  ModelParams model;
  StepControl step;
  double eps = 0.6;
  double t_end = 3.5e-3;
  InitialStateSpec init{InitialKind::noise, -1.0, 1};
  DetectionSettings detect;
};

struct SeededConfig {
  ModelParams model;
  StepControl step;
  double eps_before = 1.8;
  double eps_after = 0.0;
  double switch_time = 0.6e-3;  // >= t_end disables the switch
  std::vector<double> seed_starts{0.0, 0.6e-3};
  double seed_duration = 100e-6;
  std::optional<double> eta;  // nullopt: calibrate from an unseeded run
  double eta_factor = 5.0;
  double calibration_t_end = 3.5e-3;
  double t_end = 1.2e-3;
  InitialStateSpec init{InitialKind::pure, -1.0, 1};
  DetectionSettings detect;
};

/// Populations at the start of a seed pulse and at the start of the next
/// one (or the end of the run).
struct StageSnapshot {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<double> before;
  std::vector<double> after;
};

struct ScenarioResult {
  Trajectory trajectory;
  std::optional<PulseInfo> pulse;
  std::optional<SteadyInfo> steady;
  std::vector<StageSnapshot> stages;
  double eta_used = 0.0;
};

struct SweepRow {
  double eps = 0.0;
  std::vector<double> pop_mean;  // window order
  std::vector<double> pop_std;
  double photons_resid = 0.0;
  int replicas = 0;
};

struct SweepResult {
  int n_min = -5;
  int n_max = 5;
  std::vector<SweepRow> rows;
};

namespace detail {

inline SystemState start_state(const ModelParams& p, const InitialStateSpec& init) {
  return {initial_state(init, p), CavityField{}, 0.0};
}

inline std::optional<SteadyInfo> steady_after_pulse(const Trajectory& traj,
                                                    const std::optional<PulseInfo>& pulse,
                                                    const DetectionSettings& d) {
  const double peak = pulse ? pulse->peak_photons : 0.0;
  const double not_before = pulse ? pulse->t_peak : 0.0;
  if (!(d.window < traj.samples.back().t - not_before)) return std::nullopt;
  return detect_steady(traj, d.window, d.pop_tol, d.field_frac * std::max(peak, 1.0),
                       not_before);
}

}  // namespace detail

/// Noise-triggered relaxation at constant eps without seed light.
inline ScenarioResult run_relaxation(const RelaxationConfig& cfg) {
  cfg.model.validate();
  if (cfg.eps < 0.0) throw std::invalid_argument("eps must be >= 0");
  const auto sched = constant_schedule(cfg.eps, cfg.t_end, cfg.init);
  ScenarioResult r;
  r.trajectory = integrate(detail::start_state(cfg.model, cfg.init), sched, cfg.model,
                           cfg.step, cfg.t_end);
  r.pulse = detect_pulse(r.trajectory);
  r.steady = detail::steady_after_pulse(r.trajectory, r.pulse, cfg.detect);
  return r;
}

/// Seed amplitude giving a quasi-steady photon number (eta / kappa)^2 of
/// `factor` times the peak of the unseeded pulse at the same pump ratio.
inline double calibrate_eta(const ModelParams& model, const StepControl& step,
                            double eps, double factor, double t_end,
                            std::uint64_t rng_seed) {
  RelaxationConfig rc;
  rc.model = model;
  rc.step = step;
  rc.eps = eps;
  rc.t_end = t_end;
  rc.init = {InitialKind::noise, -1.0, rng_seed};
  const auto sched = constant_schedule(eps, t_end, rc.init);
  const auto traj =
      integrate(detail::start_state(model, rc.init), sched, model, step, t_end);
  const auto pulse = detect_pulse(traj);
  if (!pulse)
    throw std::runtime_error("calibrate_eta: unseeded run produced no pulse");
  return model.kappa * std::sqrt(factor * pulse->peak_photons);
}

inline ScenarioResult run_seeded_protocol(const SeededConfig& cfg) {
  cfg.model.validate();
  if (cfg.eps_before < 0.0 || cfg.eps_after < 0.0)
    throw std::invalid_argument("eps must be >= 0");
  const double eta = cfg.eta ? *cfg.eta
                             : calibrate_eta(cfg.model, cfg.step, cfg.eps_before,
                                             cfg.eta_factor, cfg.calibration_t_end,
                                             cfg.init.rng_seed);
  if (eta < 0.0) throw std::invalid_argument("eta must be >= 0");

  const auto sched =
      seeded_schedule(cfg.eps_before, cfg.eps_after, cfg.switch_time, eta,
                      cfg.seed_starts, cfg.seed_duration, cfg.t_end, cfg.init);
  ScenarioResult r;
  r.eta_used = eta;
  r.trajectory = integrate(detail::start_state(cfg.model, cfg.init), sched, cfg.model,
                           cfg.step, cfg.t_end);

  std::vector<Window> masks;
  for (double s : cfg.seed_starts) masks.emplace_back(s, s + cfg.seed_duration);
  r.pulse = detect_pulse(r.trajectory, masks);
  r.steady = detail::steady_after_pulse(r.trajectory, r.pulse, cfg.detect);

  auto pops_at = [&](double t) {
    const auto& smp = r.trajectory.samples;
    auto it = std::lower_bound(smp.begin(), smp.end(), t,
                               [](const Sample& s, double v) { return s.t < v; });
    if (it == smp.end()) --it;
    return it->populations();
  };
  std::vector<double> starts = cfg.seed_starts;
  std::sort(starts.begin(), starts.end());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const double stop = i + 1 < starts.size() ? starts[i + 1] : cfg.t_end;
    r.stages.push_back({starts[i], stop, pops_at(starts[i]), pops_at(stop)});
  }
  return r;
}

/// Runs an arbitrary schedule; seed windows are masked for pulse detection.
inline ScenarioResult run_schedule(const ModelParams& model, const StepControl& step,
                                   const Schedule& schedule, double t_end,
                                   const DetectionSettings& detect = {}) {
  model.validate();
  ScenarioResult r;
  r.trajectory = integrate(detail::start_state(model, schedule.init()), schedule, model,
                           step, t_end);
  const auto masks = schedule.seed_windows();
  r.pulse = detect_pulse(r.trajectory, masks);
  r.steady = detail::steady_after_pulse(r.trajectory, r.pulse, detect);
  for (const auto& s : schedule.eta_segments()) r.eta_used = std::max(r.eta_used, s.value);
  return r;
}

struct SweepConfig {
  SeededConfig base;  // model, step, seed shape, init recipe
  std::vector<double> eps_list;
  double t_hold = 1.5e-3;
  int replicas = 5;
  unsigned workers = 0;  // 0: hardware concurrency
};

namespace detail {

/// Runs job(i) for i in [0, n) on up to `workers` threads. The first
/// exception is rethrown after all threads have joined.
template <class Job>
void parallel_for(std::size_t n, unsigned workers, Job&& job) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// One seeded run (single pulse at t = 0, constant eps) per eps and replica.
/// Replica r uses rng seed base.init.rng_seed + r. Rows are ordered by eps.
inline SweepResult run_epsilon_sweep(const SweepConfig& cfg) {
  cfg.base.model.validate();
  if (cfg.eps_list.empty()) throw std::invalid_argument("eps_list is empty");
  for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
    const double e = cfg.eps_list[i];
    if (!(e >= 0.0 && e <= 3.0)) throw std::invalid_argument("eps outside [0, 3]");
    if (i > 0 && !(e > cfg.eps_list[i - 1]))
      throw std::invalid_argument("eps_list must be strictly increasing");
  }
  if (!(cfg.t_hold > 0.0)) throw std::invalid_argument("t_hold must be > 0");
  if (cfg.replicas < 1) throw std::invalid_argument("replicas must be >= 1");

  const std::size_t n_eps = cfg.eps_list.size();
  const auto n_rep = static_cast<std::size_t>(cfg.replicas);

  std::vector<double> etas(n_eps, cfg.base.eta.value_or(0.0));
  if (!cfg.base.eta) {
    detail::parallel_for(n_eps, cfg.workers, [&](std::size_t i) {
      etas[i] = calibrate_eta(cfg.base.model, cfg.base.step, cfg.eps_list[i],
                              cfg.base.eta_factor, cfg.base.calibration_t_end,
                              cfg.base.init.rng_seed);
    });
  }

  const DetectionSettings& d = cfg.base.detect;
  std::vector<std::vector<double>> pops(n_eps * n_rep);
  std::vector<double> resid(n_eps * n_rep, 0.0);
  detail::parallel_for(n_eps * n_rep, cfg.workers, [&](std::size_t job) {
    const std::size_t ie = job / n_rep;
    const std::size_t ir = job % n_rep;
    SeededConfig sc = cfg.base;
    sc.eps_before = sc.eps_after = cfg.eps_list[ie];
    sc.switch_time = cfg.t_hold;
    sc.seed_starts = {0.0};
    sc.eta = etas[ie];
    sc.t_end = cfg.t_hold;
    sc.init.rng_seed = cfg.base.init.rng_seed + ir;
    const auto sched = seeded_schedule(sc.eps_before, sc.eps_after, sc.switch_time,
                                       *sc.eta, sc.seed_starts, sc.seed_duration,
                                       sc.t_end, sc.init);
    const auto traj = integrate(detail::start_state(sc.model, sc.init), sched,
                                sc.model, sc.step, sc.t_end);
    pops[job] = traj.samples.back().populations();
    const double from = cfg.t_hold - std::min(d.window, cfg.t_hold);
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& s : traj.samples)
      if (s.t >= from) {
        acc += s.photons();
        ++count;
      }
    resid[job] = acc / static_cast<double>(count);
  });

  SweepResult out{cfg.base.model.n_min, cfg.base.model.n_max, {}};
  const std::size_t K = pops.front().size();
  for (std::size_t ie = 0; ie < n_eps; ++ie) {
    SweepRow row;
    row.eps = cfg.eps_list[ie];
    row.replicas = cfg.replicas;
    row.pop_mean.assign(K, 0.0);
    row.pop_std.assign(K, 0.0);
    for (std::size_t ir = 0; ir < n_rep; ++ir) {
      const auto& p = pops[ie * n_rep + ir];
      for (std::size_t k = 0; k < K; ++k) row.pop_mean[k] += p[k];
      row.photons_resid += resid[ie * n_rep + ir];
    }
    for (auto& v : row.pop_mean) v /= static_cast<double>(n_rep);
    row.photons_resid /= static_cast<double>(n_rep);
    if (n_rep > 1) {
      for (std::size_t ir = 0; ir < n_rep; ++ir) {
        const auto& p = pops[ie * n_rep + ir];
        for (std::size_t k = 0; k < K; ++k) {
          const double dv = p[k] - row.pop_mean[k];
          row.pop_std[k] += dv * dv;
        }
      }
      for (auto& v : row.pop_std) v = std::sqrt(v / static_cast<double>(n_rep - 1));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

/// Evenly spaced eps grid from start to stop inclusive, rounded to 1e-12 so
/// that 0 -> 2.1 in steps of 0.1 yields exactly 22 points.
inline std::vector<double> eps_range(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("bad eps range");
  const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  std::vector<double> out;
  for (long long i = 0; i <= n; ++i)
    out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
  return out;
}

}  // namespace subrad

#endif  // SUBRAD_SCENARIOS_HPP
