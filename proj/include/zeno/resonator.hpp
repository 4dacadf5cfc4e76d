#pragma once

// Steady-state coupled-mode theory for an add-drop (two-waveguide)
// travelling-wave microresonator.  Energy-normalised convention:
// |a|^2 is the stored energy in J, |s|^2 a guided power in W, and all
// rates kappa are full energy decay rates in rad/s, so that
//   da/dt = (i*dw - kappa_tot/2) a + sqrt(kappa1) s_in.

#include <cmath>
#include <stdexcept>

#include "constants.hpp"

namespace zeno {

struct ResonatorParams {
  double resonance_frequency_hz = 0.0;  // optical carrier f_c
  double kappa0 = 0.0;                  // intrinsic loss rate, rad/s
  double kappa1 = 0.0;                  // bus (input) coupling rate, rad/s
  double kappa2 = 0.0;                  // drop coupling rate, rad/s
  double mode_volume_cm3 = 0.0;         // cm^3
  double effective_index = 1.0;         // phase index used for V/(lambda/n)^3
  double group_index = 1.0;             // for energy -> circulating intensity

  double kappa_total() const { return kappa0 + kappa1 + kappa2; }
  double loaded_q() const {
    return kTwoPi * resonance_frequency_hz / kappa_total();
  }

  void validate() const {
    if (resonance_frequency_hz <= 0.0)
      throw std::invalid_argument("resonance frequency must be positive");
    if (kappa0 < 0.0 || kappa1 < 0.0 || kappa2 < 0.0)
      throw std::invalid_argument("decay rates must be non-negative");
    if (kappa_total() <= 0.0)
      throw std::invalid_argument("total decay rate must be positive");
    if (mode_volume_cm3 <= 0.0)
      throw std::invalid_argument("mode volume must be positive");
    if (effective_index <= 0.0 || group_index <= 0.0)
      throw std::invalid_argument("indices must be positive");
  }
};

struct PortResponse {
  double through = 0.0;          // transmitted power / input power
  double drop = 0.0;             // dropped power / input power
  double energy_j = 0.0;         // intracavity energy U
  double intensity_w_cm2 = 0.0;  // circulating intensity U*(c/n_g)/V
};

// Full-width decay rate of a mode with quality factor q at carrier f_c.
inline double kappa_from_q(double q, double f_c) {
  if (q <= 0.0) throw std::invalid_argument("quality factor must be positive");
  if (f_c <= 0.0) throw std::invalid_argument("carrier frequency must be positive");
  return kTwoPi * f_c / q;
}

// FWHM of the loaded resonance in ordinary frequency (Hz): f_c/Q.
inline double linewidth_hz(double q, double f_c) {
  return kappa_from_q(q, f_c) / kTwoPi;
}

// Circulating intensity for stored energy U: I = U * (c/n_g) / V.
inline double intensity_from_energy(double energy_j, double mode_volume_cm3,
                                    double group_index) {
  if (energy_j < 0.0) throw std::invalid_argument("energy must be non-negative");
  if (mode_volume_cm3 <= 0.0)
    throw std::invalid_argument("mode volume must be positive");
  if (group_index <= 0.0)
    throw std::invalid_argument("group index must be positive");
  return energy_j * (kSpeedOfLightCm / group_index) / mode_volume_cm3;
}

// Mode volume expressed in units of (lambda/n)^3.
inline double mode_volume_in_cubic_wavelengths(double mode_volume_cm3,
                                               double wavelength_m,
                                               double index) {
  if (mode_volume_cm3 <= 0.0 || wavelength_m <= 0.0 || index <= 0.0)
    throw std::invalid_argument("volume, wavelength and index must be positive");
  const double cell_cm = wavelength_m * 100.0 / index;
  return mode_volume_cm3 / (cell_cm * cell_cm * cell_cm);
}

// kappa1 - (kappa0 + kappa2): zero exactly at critical coupling, where the
// through port nulls on resonance.
inline double critical_coupling_residual(const ResonatorParams& p) {
  return p.kappa1 - (p.kappa0 + p.kappa2);
}

// Steady-state response at detuning dw = w_laser - w_cavity (rad/s) with an
// extra intracavity loss rate kappa_extra (rad/s) and input power in W.
inline PortResponse steady_state(const ResonatorParams& p, double delta_omega,
                                 double kappa_extra, double input_power_w) {
  p.validate();
  if (kappa_extra < 0.0)
    throw std::invalid_argument("extra loss rate must be non-negative");
  if (input_power_w < 0.0)
    throw std::invalid_argument("input power must be non-negative");

  const double ktot = p.kappa_total() + kappa_extra;
  const double half = 0.5 * ktot;
  const double denom = delta_omega * delta_omega + half * half;

  PortResponse r;
  r.energy_j = p.kappa1 * input_power_w / denom;
  r.drop = p.kappa1 * p.kappa2 / denom;
  // |1 - kappa1/(i dw + ktot/2)|^2 expanded over the common denominator.
  const double re = half - p.kappa1;
  r.through = (delta_omega * delta_omega + re * re) / denom;
  r.intensity_w_cm2 =
      intensity_from_energy(r.energy_j, p.mode_volume_cm3, p.group_index);
  return r;
}

// Critically coupled device: kappa_tot = 2*pi*f_c/loaded_q split as
// kappa1 = kappa_tot/2, kappa0 = intrinsic_fraction*kappa_tot and the
// remainder on the drop side, so kappa1 = kappa0 + kappa2 holds exactly.
inline ResonatorParams make_critical_resonator(double wavelength_m,
                                               double loaded_q,
                                               double intrinsic_fraction,
                                               double mode_volume_cm3,
                                               double effective_index,
                                               double group_index) {
  if (wavelength_m <= 0.0)
    throw std::invalid_argument("wavelength must be positive");
  if (intrinsic_fraction < 0.0 || intrinsic_fraction >= 0.5)
    throw std::invalid_argument("intrinsic fraction must lie in [0, 0.5)");
  ResonatorParams p;
  p.resonance_frequency_hz = kSpeedOfLight / wavelength_m;
  const double ktot = kappa_from_q(loaded_q, p.resonance_frequency_hz);
  p.kappa1 = 0.5 * ktot;
  p.kappa0 = intrinsic_fraction * ktot;
  p.kappa2 = 0.5 * ktot - p.kappa0;
  p.mode_volume_cm3 = mode_volume_cm3;
  p.effective_index = effective_index;
  p.group_index = group_index;
  p.validate();
  return p;
}

}  // namespace zeno
