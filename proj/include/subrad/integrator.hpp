#ifndef SUBRAD_INTEGRATOR_HPP
#define SUBRAD_INTEGRATOR_HPP

/// \file integrator.hpp
/// \brief Explicit Runge-Kutta propagation of the mean-field state under a
///        piecewise-constant schedule.
///
/// Two modes are available: classic fixed-step RK4 and Dormand-Prince 5(4)
/// with embedded error control. Steps are shortened so that they end exactly
/// on every sample time and every schedule breakpoint; inside a step only the
/// pump envelope alpha(t) and the atom number N(t) vary.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "subrad/model.hpp"
#include "subrad/schedule.hpp"

namespace subrad {

enum class StepMode { fixed, adaptive };

struct StepControl {
  double dt = 1.0 / (200.0 * 13.6e3);  // ~0.37 us
  StepMode mode = StepMode::adaptive;
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  double sample_every = 1e-6;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw std::invalid_argument("dt must be > 0");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw std::invalid_argument("tolerances must be > 0");
    if (!(sample_every >= dt))
      throw std::invalid_argument("sample_every must be >= dt");
  }
  friend bool operator==(const StepControl&, const StepControl&) = default;
};

/// One recorded instant. Controls are the values in force from t onward.
struct Sample {
  double t = 0.0;
  std::vector<cplx> modes;
  cplx a{};
  double atoms = 0.0;
  double eps = 0.0;
  double eta = 0.0;

  double photons() const noexcept { return std::norm(a); }
  double population(std::size_t i) const { return std::norm(modes.at(i)); }
  std::vector<double> populations() const {
    std::vector<double> p;
    p.reserve(modes.size());
    for (const auto& c : modes) p.push_back(std::norm(c));
    return p;
  }
  double norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& c : modes) s += std::norm(c);
    return s;
  }
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Trajectory {
  int n_min = -5;
  int n_max = 5;
  std::vector<Sample> samples;

  bool empty() const noexcept { return samples.empty(); }
  std::size_t size() const noexcept { return samples.size(); }
  /// Column index of mode n inside Sample::modes.
  std::size_t index_of(int n) const {
    if (n < n_min || n > n_max) throw std::out_of_range("mode outside window");
    return static_cast<std::size_t>(n - n_min);
  }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

class IntegrationError : public std::runtime_error {
 public:
  explicit IntegrationError(double t)
      : std::runtime_error("non-finite state at t = " + std::to_string(t) + " s"),
        t_(t) {}
  double time() const noexcept { return t_; }

 private:
  double t_;
};

namespace detail {

inline std::vector<cplx> pack(const SystemState& s) {
  std::vector<cplx> y(s.modes.amps().begin(), s.modes.amps().end());
  y.push_back(s.field.a);
  return y;
}

inline SystemState unpack(std::span<const cplx> y, int n_min, double t) {
  return {ModeAmplitudes(n_min, std::vector<cplx>(y.begin(), y.end() - 1)),
          CavityField{y.back()}, t};
}

inline bool all_finite(std::span<const cplx> y) noexcept {
  for (const auto& v : y)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

/// Scratch buffers reused across steps.
struct Workspace {
  std::array<std::vector<cplx>, 7> k;
  std::vector<cplx> tmp;
  std::vector<cplx> err;

  explicit Workspace(std::size_t n) : tmp(n), err(n) {
    for (auto& v : k) v.assign(n, cplx{});
  }
};

}  // namespace detail

/// Classic fourth-order Runge-Kutta step of `f(t, y, dy)`.
template <class Rhs>
void rk4_step(Rhs&& f, double t, std::span<const cplx> y, double h,
              std::span<cplx> out, detail::Workspace& ws) {
  const std::size_t n = y.size();
  auto& [k1, k2, k3, k4, k5, k6, k7] = ws.k;
  auto& tmp = ws.tmp;

  f(t, y, std::span<cplx>(k1));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  f(t + 0.5 * h, std::span<const cplx>(tmp), std::span<cplx>(k2));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  f(t + 0.5 * h, std::span<const cplx>(tmp), std::span<cplx>(k3));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(t + h, std::span<const cplx>(tmp), std::span<cplx>(k4));
  for (std::size_t i = 0; i < n; ++i)
    out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// Dormand-Prince 5(4) step. Writes the fifth-order solution to `out` and
/// returns the RMS error norm scaled by abs_tol + rel_tol * |y|.
template <class Rhs>
double dopri5_step(Rhs&& f, double t, std::span<const cplx> y, double h,
                   std::span<cplx> out, double rel_tol, double abs_tol,
                   detail::Workspace& ws) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b*, difference to the embedded fourth-order weights
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t n = y.size();
  auto& [k1, k2, k3, k4, k5, k6, k7] = ws.k;
  auto& tmp = ws.tmp;
  auto in = [&]() { return std::span<const cplx>(tmp); };

  f(t, y, std::span<cplx>(k1));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
  f(t + c2 * h, in(), std::span<cplx>(k2));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  f(t + c3 * h, in(), std::span<cplx>(k3));
  for (std::size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  f(t + c4 * h, in(), std::span<cplx>(k4));
  for (std::size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  f(t + c5 * h, in(), std::span<cplx>(k5));
  for (std::size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                         a65 * k5[i]);
  f(t + h, in(), std::span<cplx>(k6));
  for (std::size_t i = 0; i < n; ++i)
    out[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                         b6 * k6[i]);
  f(t + h, std::span<const cplx>(out), std::span<cplx>(k7));

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const cplx err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                          e6 * k6[i] + e7 * k7[i]);
    const double scale =
        abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(out[i]));
    acc += std::norm(err) / (scale * scale);
  }
  return std::sqrt(acc / static_cast<double>(n));
}

namespace detail {

inline auto make_rhs(const ModelParams& p, Controls c) {
  return [&p, c](double t, std::span<const cplx> y, std::span<cplx> dy) {
    rhs_packed(y, dy, t, p, c.eps, c.eta, atom_number(p, t));
  };
}

}  // namespace detail

/// One RK4 step with eps and eta held fixed; alpha(t) and N(t) are evaluated
/// at the stage times.
inline SystemState step(const SystemState& s, Controls controls,
                        const ModelParams& p, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  auto y = detail::pack(s);
  std::vector<cplx> out(y.size());
  detail::Workspace ws(y.size());
  rk4_step(detail::make_rhs(p, controls), s.t, y, dt, out, ws);
  return detail::unpack(out, s.modes.n_min(), s.t + dt);
}

/// Sample instants: the cadence grid k * sample_every, every breakpoint and
/// t_end. Breakpoints within 1e-9 of a grid point replace it.
inline std::vector<double> sample_times(double t_end, double sample_every,
                                        std::span<const double> breakpoints) {
  const double snap = 1e-9 * sample_every;
  std::vector<double> out;
  const auto count = static_cast<long long>(std::floor(t_end / sample_every + 1e-9));
  out.reserve(static_cast<std::size_t>(count) + breakpoints.size() + 2);
  for (long long k = 0; k <= count; ++k)
    out.push_back(std::min(static_cast<double>(k) * sample_every, t_end));
  for (double b : breakpoints)
    if (b > 0.0 && b < t_end) out.push_back(b);
  out.push_back(t_end);
  std::sort(out.begin(), out.end());

  std::vector<double> merged;
  merged.reserve(out.size());
  auto is_exact = [&](double v) {
    if (v == t_end) return true;
    return std::find(breakpoints.begin(), breakpoints.end(), v) != breakpoints.end();
  };
  for (double v : out) {
    if (!merged.empty() && v - merged.back() <= snap) {
      if (is_exact(v)) merged.back() = v;
      continue;
    }
    merged.push_back(v);
  }
  return merged;
}

/// Propagates `initial` from t = 0 to t_end. Throws IntegrationError when
/// the state stops being finite.
inline Trajectory integrate(const SystemState& initial, const Schedule& schedule,
                            const ModelParams& p, const StepControl& ctrl,
                            double t_end) {
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be > 0");
  if (t_end > schedule.t_end() * (1.0 + 1e-12))
    throw std::invalid_argument("integrate: schedule does not cover t_end");
  if (initial.modes.n_min() != p.n_min || initial.modes.n_max() != p.n_max)
    throw std::invalid_argument("integrate: state window differs from params");
  ctrl.validate();

  Trajectory traj{p.n_min, p.n_max, {}};
  const auto bps = schedule.breakpoints();
  const auto times = sample_times(t_end, ctrl.sample_every, bps);
  traj.samples.reserve(times.size());

  auto y = detail::pack(initial);
  const std::size_t K = y.size() - 1;
  std::vector<cplx> next(y.size());
  detail::Workspace ws(y.size());

  auto record = [&](double t) {
    const Controls c = schedule.controls_at(std::min(t, schedule.t_end()));
    traj.samples.push_back({t, std::vector<cplx>(y.begin(), y.begin() + K), y[K],
                            atom_number(p, t), c.eps, c.eta});
  };

  double t = 0.0;
  double h = ctrl.dt;
  record(t);
  for (std::size_t s = 1; s < times.size(); ++s) {
    const double target = times[s];
    const auto f = detail::make_rhs(p, schedule.controls_at(t));
    while (t < target) {
      const double remaining = target - t;
      double h_try = h;
      bool last = false;
      if (h_try >= remaining * (1.0 - 1e-12)) {
        h_try = remaining;
        last = true;
      }
      if (ctrl.mode == StepMode::fixed) {
        rk4_step(f, t, y, h_try, next, ws);
      } else {
        const double err =
            dopri5_step(f, t, y, h_try, next, ctrl.rel_tol, ctrl.abs_tol, ws);
        if (!std::isfinite(err) || err > 1.0) {
          if (!detail::all_finite(next) && h_try < 1e-15)
            throw IntegrationError(t);
          const double fac = std::isfinite(err) ? 0.9 * std::pow(err, -0.2) : 0.1;
          h = h_try * std::clamp(fac, 0.1, 1.0);
          if (h < 1e-18) throw IntegrationError(t);
          continue;
        }
        const double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
        const double h_new = h_try * std::clamp(fac, 0.2, 5.0);
        // a step cut short to hit an event does not shrink the proposal
        h = last ? std::max(h, h_new) : h_new;
      }
      if (!detail::all_finite(next)) throw IntegrationError(t);
      y.swap(next);
      t = last ? target : t + h_try;
    }
    record(target);
  }
  return traj;
}

}  // namespace subrad

#endif  // SUBRAD_INTEGRATOR_HPP
