#pragma once

// Non-degenerate two-photon absorption in a warm Rb vapor, expressed as an
// intracavity loss rate kappa_TPA (rad/s) for the field on the second step.
// The spectral model factorises as
//   kappa_TPA = alpha * eta * N * I_pump * g2(delta_2) * L(delta_Rb)
// with g2 a unit-peak Gaussian in the two-photon detuning and L the
// Doppler-averaged intermediate-state lineshape (units 1/Hz^2).

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "constants.hpp"
#include "errors.hpp"
#include "resonator.hpp"

namespace zeno {

// 1-sigma Doppler width of a transition at carrier f: sigma = f*sqrt(kT/m)/c.
inline double doppler_sigma(double temperature_k, double mass_kg,
                            double frequency_hz) {
  if (temperature_k < 0.0)
    throw std::invalid_argument("temperature must be non-negative");
  if (mass_kg <= 0.0 || frequency_hz <= 0.0)
    throw std::invalid_argument("mass and frequency must be positive");
  return frequency_hz * std::sqrt(kBoltzmann * temperature_k / mass_kg) /
         kSpeedOfLight;
}

inline double doppler_fwhm(double temperature_k, double mass_kg,
                           double frequency_hz) {
  constexpr double kSigmaToFwhm = 2.3548200450309493;  // 2*sqrt(2 ln 2)
  return kSigmaToFwhm * doppler_sigma(temperature_k, mass_kg, frequency_hz);
}

// Two-photon linewidth default for counter-propagating unequal colours:
// both steps' Doppler widths add in quadrature.
inline double default_two_photon_fwhm(double temperature_k, double mass_kg,
                                      double lambda1_m, double lambda2_m) {
  if (lambda1_m <= 0.0 || lambda2_m <= 0.0)
    throw std::invalid_argument("wavelengths must be positive");
  return std::hypot(
      doppler_fwhm(temperature_k, mass_kg, kSpeedOfLight / lambda1_m),
      doppler_fwhm(temperature_k, mass_kg, kSpeedOfLight / lambda2_m));
}

// Transit-time width (FWHM-like, Hz) for atoms crossing an interaction
// region of effective extent d_eff at the most probable speed.
inline double transit_broadening_width(double temperature_k, double mass_kg,
                                       double d_eff_m) {
  if (d_eff_m <= 0.0)
    throw std::invalid_argument("interaction extent must be positive");
  if (mass_kg <= 0.0) throw std::invalid_argument("mass must be positive");
  if (temperature_k < 0.0)
    throw std::invalid_argument("temperature must be non-negative");
  const double v_p = std::sqrt(2.0 * kBoltzmann * temperature_k / mass_kg);
  return v_p / (kTwoPi * d_eff_m);
}

struct VaporParams {
  double density_cm3 = 5e11;        // ground-state number density N
  double temperature_k = 353.15;    // cell temperature
  double atomic_mass_kg = kRb85MassKg;
  double lambda1_m = kD2WavelengthM;        // pump step
  double lambda2_m = kUpperStepWavelengthM; // cavity step
  double gamma_intermediate_hz = kD2NaturalLinewidthHz;  // natural FWHM
  double two_photon_fwhm_hz = 0.0;   // 0 -> use the Doppler rule
  double transit_broadening_hz = 0.0;
  double overlap_fraction = 0.1;     // eta: mode/vapor spatial overlap

  // Effective two-photon width: configured (or rule) FWHM plus transit
  // broadening in quadrature.
  double effective_two_photon_fwhm() const {
    const double base =
        two_photon_fwhm_hz > 0.0
            ? two_photon_fwhm_hz
            : default_two_photon_fwhm(temperature_k, atomic_mass_kg, lambda1_m,
                                      lambda2_m);
    return std::hypot(base, transit_broadening_hz);
  }

  void validate() const {
    // density 0 is the explicit "no vapor in the cell" state.
    if (density_cm3 != 0.0 &&
        (density_cm3 < 1e9 || density_cm3 > 1e14))
      throw std::invalid_argument(
          "density must be 0 or within [1e9, 1e14] cm^-3");
    if (temperature_k <= 0.0 || temperature_k > 1000.0)
      throw std::invalid_argument("temperature must lie in (0, 1000] K");
    if (atomic_mass_kg <= 0.0)
      throw std::invalid_argument("atomic mass must be positive");
    if (lambda1_m <= 0.0 || lambda2_m <= 0.0)
      throw std::invalid_argument("wavelengths must be positive");
    if (gamma_intermediate_hz <= 0.0)
      throw std::invalid_argument("intermediate linewidth must be positive");
    if (two_photon_fwhm_hz < 0.0 || transit_broadening_hz < 0.0)
      throw std::invalid_argument("widths must be non-negative");
    if (overlap_fraction <= 0.0 || overlap_fraction > 1.0)
      throw std::invalid_argument("overlap fraction must lie in (0, 1]");
  }
};

inline VaporParams rb85_defaults() {
  VaporParams v;
  v.two_photon_fwhm_hz = default_two_photon_fwhm(
      v.temperature_k, v.atomic_mass_kg, v.lambda1_m, v.lambda2_m);
  v.transit_broadening_hz =
      transit_broadening_width(v.temperature_k, v.atomic_mass_kg, 300e-9);
  return v;
}

// Where the vapor is probed: detuning of the pump from the intermediate
// state, detuning from the two-photon resonance, and the pump intensity.
struct TpaOperatingPoint {
  double intermediate_detuning_hz = 6e9;  // delta_Rb
  double two_photon_detuning_hz = 0.0;    // delta_2
  double pump_intensity_w_cm2 = 470.0;    // I_780
};

// Unit-peak Gaussian in the two-photon detuning.
inline double two_photon_resonance_factor(double delta2_hz, double fwhm_hz) {
  if (fwhm_hz <= 0.0) throw std::invalid_argument("FWHM must be positive");
  constexpr double kFourLn2 = 2.7725887222397812;
  const double u = delta2_hz / fwhm_hz;
  return std::exp(-kFourLn2 * u * u);
}

// Doppler-averaged intermediate lineshape (1/Hz^2):
//   L(delta) = Int G(u; sigma) / ((delta-u)^2 + (gamma/2)^2) du.
// sigma = 0 reduces to the bare Lorentzian-denominator form.
inline double intermediate_lineshape(double delta_hz, double sigma_hz,
                                     double gamma_hz) {
  if (sigma_hz < 0.0) throw std::invalid_argument("sigma must be non-negative");
  if (gamma_hz < 0.0) throw std::invalid_argument("gamma must be non-negative");
  if (sigma_hz == 0.0) {
    const double g = 0.5 * gamma_hz;
    const double denom = delta_hz * delta_hz + g * g;
    if (denom == 0.0)
      throw std::invalid_argument("lineshape singular at zero detuning");
    return 1.0 / denom;
  }
  if (gamma_hz == 0.0)
    throw std::invalid_argument(
        "natural width must be positive under Doppler averaging");

  const double s = sigma_hz;
  const double g = 0.5 * gamma_hz;
  const double norm = 1.0 / (s * std::sqrt(kTwoPi));
  const auto f = [=](double u) {
    const double gauss = norm * std::exp(-0.5 * (u / s) * (u / s));
    if (gauss == 0.0) return 0.0;
    const double d = delta_hz - u;
    return gauss / (d * d + g * g);
  };

  // Segment boundaries: Gaussian bulk plus the narrow Lorentzian core.
  std::vector<double> knots = {-12.0 * s, -6.0 * s, -3.0 * s, -1.0 * s, 0.0,
                               1.0 * s,   3.0 * s,  6.0 * s,  12.0 * s};
  const double lo = std::min(-12.0 * s, delta_hz - 50.0 * g);
  const double hi = std::max(12.0 * s, delta_hz + 50.0 * g);
  for (double k : {delta_hz - 50.0 * g, delta_hz - 5.0 * g, delta_hz,
                   delta_hz + 5.0 * g, delta_hz + 50.0 * g}) {
    if (k > lo && k < hi) knots.push_back(k);
  }
  knots.push_back(lo);
  knots.push_back(hi);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  using quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  double err_total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (knots[i + 1] <= knots[i]) continue;
    double err = 0.0;
    total += quad::integrate(f, knots[i], knots[i + 1], 12, 1e-11, &err);
    err_total += err;
  }
  if (!(total > 0.0) || err_total > 1e-8 * total)
    throw std::runtime_error("lineshape quadrature failed to converge");
  return total;
}

// TPA-induced intracavity loss rate (rad/s).  alpha_cal is the calibrated
// strength absorbing dipole factors and local-field corrections.
inline double tpa_loss_rate(const VaporParams& vapor,
                            const TpaOperatingPoint& op, double alpha_cal) {
  vapor.validate();
  if (alpha_cal < 0.0)
    throw std::invalid_argument("calibration constant must be non-negative");
  if (op.pump_intensity_w_cm2 < 0.0)
    throw std::invalid_argument("pump intensity must be non-negative");
  if (alpha_cal == 0.0 || vapor.density_cm3 == 0.0 ||
      op.pump_intensity_w_cm2 == 0.0)
    return 0.0;

  const double sigma1 = doppler_sigma(vapor.temperature_k, vapor.atomic_mass_kg,
                                      kSpeedOfLight / vapor.lambda1_m);
  const double g2 = two_photon_resonance_factor(
      op.two_photon_detuning_hz, vapor.effective_two_photon_fwhm());
  const double line = intermediate_lineshape(op.intermediate_detuning_hz,
                                             sigma1,
                                             vapor.gamma_intermediate_hz);
  return alpha_cal * vapor.overlap_fraction * vapor.density_cm3 *
         op.pump_intensity_w_cm2 * g2 * line;
}

// Solve for alpha_cal such that switching the vapor on changes the on-resonance
// through-port transmission of `device` by `target_through_change` at the given
// operating point.  Root found by bisection in the loss rate; tolerance 1e-10
// on the through-port change.
inline double calibrate_alpha(double target_through_change,
                              const ResonatorParams& device,
                              const VaporParams& vapor,
                              const TpaOperatingPoint& op) {
  device.validate();
  if (target_through_change < 0.0)
    throw std::invalid_argument("target through-port change must be >= 0");
  if (target_through_change == 0.0) return 0.0;

  const double unit_rate = tpa_loss_rate(vapor, op, 1.0);
  if (unit_rate <= 0.0)
    throw SolveError("calibration target unreachable: vapor produces no loss");

  const double p_ref = 1.0;  // transmission ratios are power-independent
  const double base = steady_state(device, 0.0, 0.0, p_ref).through;
  const auto change = [&](double kx) {
    return steady_state(device, 0.0, kx, p_ref).through - base;
  };

  double lo = 0.0;
  double hi = 10.0 * device.kappa_total();
  if (change(hi) < target_through_change)
    throw SolveError("calibration target unreachable below 10x kappa_tot");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (change(mid) < target_through_change ? lo : hi) = mid;
  }
  const double kx = 0.5 * (lo + hi);
  if (std::abs(change(kx) - target_through_change) > 1e-10)
    throw SolveError("calibration bisection failed to meet tolerance");
  return kx / unit_rate;
}

struct VaporProfile {
  std::vector<double> detuning_hz;  // delta_Rb grid
  std::vector<double> loss_rate;    // kappa_TPA, or peak-normalised
};

// kappa_TPA(delta_Rb) over a grid at fixed delta_2 and pump intensity.
inline VaporProfile reference_cell_profile(const VaporParams& vapor,
                                           const TpaOperatingPoint& op,
                                           double alpha_cal,
                                           std::vector<double> detuning_hz,
                                           bool peak_normalize = false) {
  if (detuning_hz.empty())
    throw std::invalid_argument("detuning grid must be non-empty");
  VaporProfile profile;
  profile.loss_rate.reserve(detuning_hz.size());
  for (double d : detuning_hz) {
    TpaOperatingPoint pt = op;
    pt.intermediate_detuning_hz = d;
    profile.loss_rate.push_back(tpa_loss_rate(vapor, pt, alpha_cal));
  }
  profile.detuning_hz = std::move(detuning_hz);
  if (peak_normalize) {
    const double peak =
        *std::max_element(profile.loss_rate.begin(), profile.loss_rate.end());
    if (peak <= 0.0)
      throw std::invalid_argument("cannot normalise an all-zero profile");
    for (double& v : profile.loss_rate) v /= peak;
  }
  return profile;
}

}  // namespace zeno
