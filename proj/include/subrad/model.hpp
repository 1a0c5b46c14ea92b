#ifndef SUBRAD_MODEL_HPP
#define SUBRAD_MODEL_HPP

/// \file model.hpp
/// \brief Mean-field equations of motion for condensate momentum states
///        coupled to a single ring-cavity mode.
///
/// The condensate wave function is expanded in momentum states |n> with
/// amplitudes c_n on a finite window [n_min, n_max]. The cavity field a is
/// normalized so that |a|^2 is the intracavity photon number. All rates are
/// angular frequencies in rad/s, times in seconds.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace subrad {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// CODATA 2018 values plus the atomic data used by the physical helpers.
namespace constants {
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double epsilon0 = 8.8541878128e-12;   // F/m
inline constexpr double c_light = 299792458.0;         // m/s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double mass_rb87 = 86.909180527 * atomic_mass_unit;
/// Reduced D1 dipole matrix element of 87Rb, <J=1/2||er||J'=1/2>.
inline constexpr double dipole_rb87_d1 = 2.537e-29;    // C m
inline constexpr double lambda_rb87_d1 = 794.978851e-9; // m
}  // namespace constants

/// Momentum-state amplitudes c_n for n in [n_min, n_max].
class ModeAmplitudes {
 public:
  ModeAmplitudes() : ModeAmplitudes(-5, 5) {}

  ModeAmplitudes(int n_min, int n_max) : n_min_(n_min), n_max_(n_max) {
    if (n_max < n_min)
      throw std::invalid_argument("ModeAmplitudes: n_max < n_min");
    amps_.assign(static_cast<std::size_t>(n_max - n_min + 1), cplx{0.0, 0.0});
  }

  ModeAmplitudes(int n_min, std::vector<cplx> amps)
      : n_min_(n_min),
        n_max_(n_min + static_cast<int>(amps.size()) - 1),
        amps_(std::move(amps)) {
    if (amps_.empty())
      throw std::invalid_argument("ModeAmplitudes: empty window");
  }

  int n_min() const noexcept { return n_min_; }
  int n_max() const noexcept { return n_max_; }
  std::size_t size() const noexcept { return amps_.size(); }
  bool contains(int n) const noexcept { return n >= n_min_ && n <= n_max_; }

  cplx& operator[](int n) { return amps_[index(n)]; }
  const cplx& operator[](int n) const { return amps_[index(n)]; }

  /// Amplitude at n, zero outside the window (hard truncation).
  cplx at_or_zero(int n) const noexcept {
    return contains(n) ? amps_[static_cast<std::size_t>(n - n_min_)] : cplx{};
  }

  std::span<cplx> amps() noexcept { return amps_; }
  std::span<const cplx> amps() const noexcept { return amps_; }

  double norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& c : amps_) s += std::norm(c);
    return s;
  }

  friend bool operator==(const ModeAmplitudes&, const ModeAmplitudes&) = default;

 private:
  std::size_t index(int n) const {
    if (!contains(n))
      throw std::out_of_range("mode index " + std::to_string(n) +
                              " outside window");
    return static_cast<std::size_t>(n - n_min_);
  }

  int n_min_;
  int n_max_;
  std::vector<cplx> amps_;
};

struct CavityField {
  cplx a{};
  double photon_number() const noexcept { return std::norm(a); }
  friend bool operator==(const CavityField&, const CavityField&) = default;
};

struct ModelParams {
  double omega_r = two_pi * 13.6e3;
  double delta = two_pi * 13.6e3;        // pump-cavity detuning; resonant at omega_r
  double Delta = 2.0 * two_pi * 13.6e3;  // splitting of the two pump components
  // Calibrated against the noise-triggered relaxation at eps = 0.6 with the
  // half-quantum seed 1/sqrt(2 N0): steady |c_1|^2 ~ 0.38, onset ~0.9 ms,
  // sum_{n<0} |c_n|^2 < 0.01. See README "Calibration".
  double g = 38.0;
  double N0 = 250000.0;
  double kappa = two_pi * 5.0e3;
  double tau_loss = 1.0e-3;  // infinity disables atom loss
  int n_min = -5;
  int n_max = 5;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(what);
    };
    require(std::isfinite(omega_r) && omega_r > 0.0, "omega_r must be > 0");
    require(std::isfinite(kappa) && kappa > 0.0, "kappa must be > 0");
    require(std::isfinite(N0) && N0 > 0.0, "N0 must be > 0");
    require(tau_loss > 0.0 && !std::isnan(tau_loss), "tau_loss must be > 0");
    require(std::isfinite(delta), "delta must be finite");
    require(std::isfinite(Delta), "Delta must be finite");
    require(std::isfinite(g), "g must be finite");
    require(n_min <= 0 && n_max >= 0, "window must contain n = 0");
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct SystemState {
  ModeAmplitudes modes;
  CavityField field;
  double t = 0.0;
};

/// Inputs of the closed-form coupling and recoil formulas (SI units).
struct PhysicalInputs {
  double dipole_d = constants::dipole_rb87_d1;
  double E0 = 0.0;
  double omega = two_pi * constants::c_light / constants::lambda_rb87_d1;
  double V = 19.0e-9;
  double Delta_a = -two_pi * 100.0e9;
  double k_p = two_pi / constants::lambda_rb87_d1;
  double phi = 148.0 * std::numbers::pi / 180.0;
  double M = constants::mass_rb87;
};

/// Peak field amplitude of a running wave of intensity I (W/m^2).
inline double field_amplitude_from_intensity(double intensity) {
  return std::sqrt(2.0 * intensity / (constants::c_light * constants::epsilon0));
}

/// Free phase rate of momentum state n in the frame co-moving with the
/// pump-cavity detuning: n (n omega_r - delta).
inline double omega_n(int n, const ModelParams& p) noexcept {
  const double nd = static_cast<double>(n);
  return nd * (nd * p.omega_r - p.delta);
}

/// Two-component pump envelope 1 + eps exp(-i Delta t).
inline cplx alpha(double t, double eps, double Delta) noexcept {
  return 1.0 + eps * std::polar(1.0, -Delta * t);
}

/// Density-grating amplitude sum_n c_n conj(c_{n+1}) over the window.
inline cplx structure_factor(std::span<const cplx> c) noexcept {
  cplx s{};
  for (std::size_t i = 0; i + 1 < c.size(); ++i) s += c[i] * std::conj(c[i + 1]);
  return s;
}

inline cplx structure_factor(const ModeAmplitudes& m) noexcept {
  return structure_factor(m.amps());
}

inline std::vector<double> populations(const ModeAmplitudes& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& c : m.amps()) out.push_back(std::norm(c));
  return out;
}

/// Equations of motion on a packed state y = (c_{n_min}, ..., c_{n_max}, a).
///
///   dc_n/dt = -i omega_n c_n + g (alpha a* c_{n-1} - alpha* a c_{n+1})
///   da/dt   = g N alpha sum_n c_n c_{n+1}* - kappa a + eta
///
/// Amplitudes outside the window are zero. `dy` must have the size of `y`.
inline void rhs_packed(std::span<const cplx> y, std::span<cplx> dy, double t,
                       const ModelParams& p, double eps, double eta,
                       double atoms) noexcept {
  const std::size_t K = y.size() - 1;
  const std::span<const cplx> c = y.first(K);
  const cplx a = y[K];
  const cplx al = alpha(t, eps, p.Delta);
  const cplx up = p.g * al * std::conj(a);   // raises n-1 -> n
  const cplx down = p.g * std::conj(al) * a; // couples n+1 -> n

  for (std::size_t i = 0; i < K; ++i) {
    const int n = p.n_min + static_cast<int>(i);
    const cplx below = i > 0 ? c[i - 1] : cplx{};
    const cplx above = i + 1 < K ? c[i + 1] : cplx{};
    dy[i] = cplx{0.0, -omega_n(n, p)} * c[i] + up * below - down * above;
  }
  dy[K] = p.g * atoms * al * structure_factor(c) - p.kappa * a + eta;
}

/// Time derivative of a SystemState (t of the result is left at 0).
inline SystemState rhs(const SystemState& s, const ModelParams& p, double eps,
                       double eta, double atoms) {
  std::vector<cplx> y(s.modes.amps().begin(), s.modes.amps().end());
  y.push_back(s.field.a);
  std::vector<cplx> dy(y.size());
  rhs_packed(y, dy, s.t, p, eps, eta, atoms);
  SystemState d{ModeAmplitudes(s.modes.n_min(),
                               std::vector<cplx>(dy.begin(), dy.end() - 1)),
                CavityField{dy.back()}, 0.0};
  return d;
}

/// Single-atom two-photon coupling d^2 E0 sqrt(omega / (8 hbar^3 eps0 V)) / Delta_a.
/// The sign follows Delta_a. Note that E0 is the amplitude of the first pump
/// component only; splitting a quoted total intensity between the two
/// components at a given eps is left to the caller.
inline double coupling_g(const PhysicalInputs& ph) {
  if (!(ph.V > 0.0)) throw std::invalid_argument("coupling_g: V must be > 0");
  if (ph.Delta_a == 0.0)
    throw std::invalid_argument("coupling_g: Delta_a must be nonzero");
  using namespace constants;
  const double h3 = hbar * hbar * hbar;
  return ph.dipole_d * ph.dipole_d * ph.E0 *
         std::sqrt(ph.omega / (8.0 * h3 * epsilon0 * ph.V)) / ph.Delta_a;
}

/// Two-photon recoil frequency [2 hbar k_p sin(phi/2)]^2 / (2 hbar M).
inline double recoil_frequency(const PhysicalInputs& ph) {
  if (ph.phi < 0.0 || ph.phi > std::numbers::pi)
    throw std::invalid_argument("recoil_frequency: phi outside [0, pi]");
  const double q = 2.0 * constants::hbar * ph.k_p * std::sin(ph.phi / 2.0);
  return q * q / (2.0 * constants::hbar * ph.M);
}

/// Light shift of a single cavity photon, (d E_photon / hbar)^2 / Delta_a.
/// Only used as a plausibility cross-check on coupling inputs.
inline double single_photon_light_shift(const PhysicalInputs& ph) {
  using namespace constants;
  const double e_photon = std::sqrt(hbar * ph.omega / (2.0 * epsilon0 * ph.V));
  const double g1 = ph.dipole_d * e_photon / hbar;
  return g1 * g1 / ph.Delta_a;
}

}  // namespace subrad

#endif  // SUBRAD_MODEL_HPP
