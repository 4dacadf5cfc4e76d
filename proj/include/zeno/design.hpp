#pragma once

// What-if explorer: contrast against intrinsic Q, free-space power/intensity
// bookkeeping, and the power estimate for a dual-resonant (both colours
// cavity-enhanced) version of the switch.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "nonlinear.hpp"
#include "resonator.hpp"
#include "vapor.hpp"

namespace zeno {

struct QSweepRow {
  double intrinsic_q = 0.0;      // 2*pi*f_c / kappa0
  double loaded_q = 0.0;
  double through_contrast = 0.0; // on-resonance through change, vapor on - off
};

// Rescale every decay rate of a critically coupled base device so that its
// intrinsic Q takes each grid value, keeping the kappa ratios (and hence
// critical coupling) fixed, and evaluate the on-resonance through-port
// contrast produced by the fixed vapor operating point.
inline std::vector<QSweepRow> sweep_contrast_vs_q(
    const std::vector<double>& intrinsic_q_grid, const ResonatorParams& base,
    const VaporParams& vapor, const TpaOperatingPoint& op, double alpha_cal) {
  base.validate();
  if (intrinsic_q_grid.empty())
    throw std::invalid_argument("Q grid must be non-empty");
  if (base.kappa0 <= 0.0)
    throw std::invalid_argument("base device needs a positive intrinsic loss");
  if (std::abs(critical_coupling_residual(base)) >
      1e-9 * base.kappa_total())
    throw std::invalid_argument("base device must be critically coupled");

  const double kappa_tpa = tpa_loss_rate(vapor, op, alpha_cal);
  std::vector<QSweepRow> rows;
  rows.reserve(intrinsic_q_grid.size());
  for (double q0 : intrinsic_q_grid) {
    if (q0 <= 0.0) throw std::invalid_argument("intrinsic Q must be positive");
    const double kappa0 = kTwoPi * base.resonance_frequency_hz / q0;
    const double scale = kappa0 / base.kappa0;
    ResonatorParams dev = base;
    dev.kappa0 = kappa0;
    dev.kappa1 = base.kappa1 * scale;
    dev.kappa2 = base.kappa2 * scale;
    QSweepRow row;
    row.intrinsic_q = q0;
    row.loaded_q = dev.loaded_q();
    const double p_ref = 1.0;  // transmission ratios are power-independent
    row.through_contrast = steady_state(dev, 0.0, kappa_tpa, p_ref).through -
                           steady_state(dev, 0.0, 0.0, p_ref).through;
    rows.push_back(row);
  }
  return rows;
}

// Input power that reproduces target_intensity given one measured
// (power, intensity) pair; the map is linear.
inline double power_for_intensity(double target_intensity_w_cm2,
                                  double reference_power_w,
                                  double reference_intensity_w_cm2) {
  if (target_intensity_w_cm2 < 0.0)
    throw std::invalid_argument("target intensity must be non-negative");
  if (reference_power_w <= 0.0 || reference_intensity_w_cm2 <= 0.0)
    throw std::invalid_argument("reference pair must be positive");
  return reference_power_w * target_intensity_w_cm2 /
         reference_intensity_w_cm2;
}

struct BeamGeometry {
  double area_cm2 = 0.0;
  double radius_cm = 0.0;
};

// Flat-top spot implied by a free-space power/intensity pair.
inline BeamGeometry free_space_beam_geometry(double power_w,
                                             double intensity_w_cm2) {
  if (power_w <= 0.0 || intensity_w_cm2 <= 0.0)
    throw std::invalid_argument("power and intensity must be positive");
  BeamGeometry g;
  g.area_cm2 = power_w / intensity_w_cm2;
  g.radius_cm = std::sqrt(g.area_cm2 / kPi);
  return g;
}

struct DualResonantEstimate {
  double input_power_each_w = 0.0;  // per beam; both colours driven equally
  double achieved_contrast = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Power per beam at which a dual-resonant switch (pump and probe both
// cavity-enhanced, loading each other through the same calibrated TPA law)
// reaches target_contrast on the probe through port.  Monotone bisection on
// the common input power.
inline DualResonantEstimate dual_resonant_power_estimate(
    const ResonatorParams& probe_cavity, const ResonatorParams& pump_cavity,
    const VaporParams& vapor, const TpaOperatingPoint& op, double alpha_cal,
    double target_contrast, double power_cap_w = 1e-3) {
  probe_cavity.validate();
  pump_cavity.validate();
  vapor.validate();
  if (target_contrast <= 0.0)
    throw std::invalid_argument("target contrast must be positive");
  if (power_cap_w <= 0.0)
    throw std::invalid_argument("power cap must be positive");

  // kappa(I) laws: each colour sees loss proportional to the other's
  // circulating intensity through the shared vapor response.  The spectral
  // factors are intensity-independent, so evaluate them once.
  TpaOperatingPoint unit = op;
  unit.pump_intensity_w_cm2 = 1.0;
  const double rate_per_intensity = tpa_loss_rate(vapor, unit, alpha_cal);
  const auto law = [rate_per_intensity](double intensity) {
    return rate_per_intensity * intensity;
  };

  const auto contrast_at = [&](double p) {
    const auto res = solve_self_consistent(probe_cavity, pump_cavity, p, p,
                                           law, law);
    if (!res.converged)
      throw SolveError("dual-resonant self-consistent solve failed");
    const double linear =
        steady_state(probe_cavity, 0.0, 0.0, p).through;
    return res.field_a.through - linear;
  };

  DualResonantEstimate est;
  double hi = 1e-9;
  while (contrast_at(hi) < target_contrast) {
    hi *= 2.0;
    ++est.iterations;
    if (hi > power_cap_w)
      throw SolveError("dual-resonant target unreachable within power cap");
  }
  double lo = 0.5 * hi;
  if (hi <= 1e-9) lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (contrast_at(mid) < target_contrast ? lo : hi) = mid;
    ++est.iterations;
    if ((hi - lo) < 1e-14 * hi) break;
  }
  est.input_power_each_w = 0.5 * (lo + hi);
  est.achieved_contrast = contrast_at(est.input_power_each_w);
  est.converged =
      std::abs(est.achieved_contrast - target_contrast) <= 1e-6;
  if (!est.converged)
    throw SolveError("dual-resonant bisection failed to meet tolerance");
  return est;
}

}  // namespace zeno
