#ifndef SUBRAD_SCHEDULE_HPP
#define SUBRAD_SCHEDULE_HPP

/// \file schedule.hpp
/// \brief Piecewise-constant pump ratio and seed controls, atom-number decay
///        and the initial condensate state.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "subrad/model.hpp"

namespace subrad {

/// Control value held on [t_start, t_end).
struct Segment {
  double t_start = 0.0;
  double t_end = 0.0;
  double value = 0.0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

enum class InitialKind { pure, noise };

struct InitialStateSpec {
  InitialKind kind = InitialKind::pure;
  /// Amplitude seeded into c_1. Negative means "use 1/sqrt(2 N0)".
  double noise_amp = -1.0;
  std::uint64_t rng_seed = 1;

  double resolved_noise_amp(double N0) const {
    return noise_amp < 0.0 ? 1.0 / std::sqrt(2.0 * N0) : noise_amp;
  }
  friend bool operator==(const InitialStateSpec&, const InitialStateSpec&) = default;
};

struct Controls {
  double eps = 0.0;
  double eta = 0.0;
};

class Schedule {
 public:
  Schedule() = default;

  /// Segments must tile [0, t_end] without gaps or overlap; values >= 0.
  Schedule(std::vector<Segment> eps, std::vector<Segment> eta,
           InitialStateSpec init = {})
      : eps_(std::move(eps)), eta_(std::move(eta)), init_(init) {
    check_tiling(eps_, "eps");
    check_tiling(eta_, "eta");
    if (eps_.back().t_end != eta_.back().t_end)
      throw std::invalid_argument(
          "schedule: eps and eta segments must end at the same time");
  }

  std::span<const Segment> eps_segments() const noexcept { return eps_; }
  std::span<const Segment> eta_segments() const noexcept { return eta_; }
  const InitialStateSpec& init() const noexcept { return init_; }
  InitialStateSpec& init() noexcept { return init_; }
  double t_end() const noexcept { return eps_.empty() ? 0.0 : eps_.back().t_end; }

  /// Control values at t, right-continuous at breakpoints. The closing
  /// instant t_end belongs to the last segment.
  Controls controls_at(double t) const {
    if (eps_.empty()) throw std::logic_error("controls_at: empty schedule");
    if (!(t >= 0.0 && t <= t_end()))
      throw std::out_of_range("controls_at: t = " + std::to_string(t) +
                              " outside schedule coverage");
    return {lookup(eps_, t), lookup(eta_, t)};
  }

  /// Interior times where any control changes, ascending and unique.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (const auto* segs : {&eps_, &eta_})
      for (std::size_t i = 1; i < segs->size(); ++i)
        out.push_back((*segs)[i].t_start);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Times where a seed pulse is on, as [start, end) windows.
  std::vector<std::pair<double, double>> seed_windows() const {
    std::vector<std::pair<double, double>> out;
    for (const auto& s : eta_)
      if (s.value > 0.0) out.emplace_back(s.t_start, s.t_end);
    return out;
  }

 private:
  static double lookup(const std::vector<Segment>& segs, double t) {
    auto it = std::upper_bound(
        segs.begin(), segs.end(), t,
        [](double v, const Segment& s) { return v < s.t_start; });
    return std::prev(it)->value;
  }

  static void check_tiling(const std::vector<Segment>& segs, const char* name) {
    const std::string n = name;
    if (segs.empty()) throw std::invalid_argument("schedule: no " + n + " segments");
    if (segs.front().t_start != 0.0)
      throw std::invalid_argument("schedule: " + n + " segments must start at t = 0");
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& s = segs[i];
      if (!(s.t_end > s.t_start))
        throw std::invalid_argument("schedule: empty or reversed " + n + " segment");
      if (!(s.value >= 0.0) || !std::isfinite(s.value))
        throw std::invalid_argument("schedule: " + n + " must be >= 0");
      if (i > 0 && s.t_start != segs[i - 1].t_end)
        throw std::invalid_argument(
            "schedule: " + n + (s.t_start < segs[i - 1].t_end ? " segments overlap"
                                                              : " segments leave a gap"));
    }
  }

  std::vector<Segment> eps_;
  std::vector<Segment> eta_;
  InitialStateSpec init_;
};

/// N0 exp(-t / tau_loss); tau_loss = inf disables the decay.
inline double atom_number(const ModelParams& p, double t) noexcept {
  if (std::isinf(p.tau_loss)) return p.N0;
  return p.N0 * std::exp(-t / p.tau_loss);
}

/// Uniform phase in [0, 2 pi) drawn from the first output of a seeded
/// mt19937_64. The mapping is spelled out so it is identical on every
/// standard library.
inline double noise_phase(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::uint64_t bits = gen() >> 11;
  return two_pi * static_cast<double>(bits) * 0x1.0p-53;
}

/// Condensate at rest; with kind = noise, c_1 additionally carries
/// noise_amp * exp(i phase) before renormalization.
inline ModeAmplitudes initial_state(const InitialStateSpec& spec, int n_min,
                                    int n_max, double N0) {
  if (!(n_min <= 0 && n_max >= 0))
    throw std::invalid_argument("initial_state: window must contain n = 0");
  ModeAmplitudes m(n_min, n_max);
  m[0] = 1.0;
  if (spec.kind == InitialKind::noise) {
    const double amp = spec.resolved_noise_amp(N0);
    if (amp < 0.0) throw std::invalid_argument("initial_state: noise_amp < 0");
    if (amp > 0.0) {
      if (!m.contains(1))
        throw std::invalid_argument("initial_state: noise needs n = 1 in window");
      m[1] = std::polar(amp, noise_phase(spec.rng_seed));
      const double scale = 1.0 / std::sqrt(m.norm_squared());
      for (auto& c : m.amps()) c *= scale;
    }
  }
  return m;
}

inline ModeAmplitudes initial_state(const InitialStateSpec& spec,
                                    const ModelParams& p) {
  return initial_state(spec, p.n_min, p.n_max, p.N0);
}

/// Constant pump ratio, no seed light.
inline Schedule constant_schedule(double eps, double t_end, InitialStateSpec init = {}) {
  return Schedule({{0.0, t_end, eps}}, {{0.0, t_end, 0.0}}, init);
}

/// Seed pulses of amplitude eta and length `duration` starting at each of
/// `starts`; eps switches from eps_before to eps_after at `switch_time`
/// (pass switch_time >= t_end for no switch).
inline Schedule seeded_schedule(double eps_before, double eps_after,
                                double switch_time, double eta,
                                std::span<const double> starts, double duration,
                                double t_end, InitialStateSpec init = {}) {
  std::vector<Segment> eps;
  if (switch_time > 0.0 && switch_time < t_end) {
    eps = {{0.0, switch_time, eps_before}, {switch_time, t_end, eps_after}};
  } else if (switch_time <= 0.0) {
    eps = {{0.0, t_end, eps_after}};
  } else {
    eps = {{0.0, t_end, eps_before}};
  }

  std::vector<double> sorted(starts.begin(), starts.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Segment> seg;
  double cursor = 0.0;
  for (double s : sorted) {
    const double e = std::min(s + duration, t_end);
    if (s < cursor || s >= t_end)
      throw std::invalid_argument("seeded_schedule: seed pulses overlap or exceed t_end");
    if (s > cursor) seg.push_back({cursor, s, 0.0});
    seg.push_back({s, e, eta});
    cursor = e;
  }
  if (cursor < t_end) seg.push_back({cursor, t_end, 0.0});
  return Schedule(std::move(eps), std::move(seg), init);
}

}  // namespace subrad

#endif  // SUBRAD_SCHEDULE_HPP
