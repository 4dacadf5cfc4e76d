#pragma once

// Self-consistent steady state for two intracavity fields that load each
// other through intensity-dependent TPA loss:
//   U_a = F_a(kappa_a(I_b)),  U_b = F_b(kappa_b(I_a)).
// Solved by damped fixed-point iteration with a bracketed-bisection fallback
// on the scalar residual r(U_a) = U_a - F_a(F_b(U_a)), which is monotone for
// any non-decreasing loss law.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "resonator.hpp"

namespace zeno {

// Extra loss rate (rad/s) induced on one field by the other's circulating
// intensity (W/cm^2).  Must be non-negative and non-decreasing.
using LossRateFn = std::function<double(double intensity_w_cm2)>;

struct SelfConsistentResult {
  PortResponse field_a;
  PortResponse field_b;
  double kappa_tpa_a = 0.0;  // rad/s, loss on field a at the fixed point
  double kappa_tpa_b = 0.0;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // max relative energy change on re-substitution
};

namespace detail {

inline double checked_loss(const LossRateFn& fn, double intensity) {
  const double k = fn(intensity);
  if (!(k >= 0.0) || !std::isfinite(k))
    throw std::invalid_argument("loss law returned a negative or non-finite rate");
  return k;
}

inline double rel_change(double next, double prev) {
  const double scale = std::max({std::abs(next), std::abs(prev), 1e-300});
  return std::abs(next - prev) / scale;
}

}  // namespace detail

inline SelfConsistentResult solve_self_consistent(
    const ResonatorParams& cavity_a, const ResonatorParams& cavity_b,
    double input_power_a_w, double input_power_b_w, const LossRateFn& loss_on_a,
    const LossRateFn& loss_on_b, double detuning_a_rad_s = 0.0,
    double detuning_b_rad_s = 0.0) {
  cavity_a.validate();
  cavity_b.validate();
  if (input_power_a_w < 0.0 || input_power_b_w < 0.0)
    throw std::invalid_argument("input powers must be non-negative");

  const auto intensity_a = [&](double u) {
    return intensity_from_energy(u, cavity_a.mode_volume_cm3,
                                 cavity_a.group_index);
  };
  const auto intensity_b = [&](double u) {
    return intensity_from_energy(u, cavity_b.mode_volume_cm3,
                                 cavity_b.group_index);
  };
  const auto energy_a = [&](double kx) {
    return steady_state(cavity_a, detuning_a_rad_s, kx, input_power_a_w)
        .energy_j;
  };
  const auto energy_b = [&](double kx) {
    return steady_state(cavity_b, detuning_b_rad_s, kx, input_power_b_w)
        .energy_j;
  };

  const double u_lin_a = energy_a(0.0);
  const double u_lin_b = energy_b(0.0);

  SelfConsistentResult res;
  double ua = u_lin_a;
  double ub = u_lin_b;

  constexpr double kTol = 1e-12;
  constexpr int kMaxIter = 1000;
  constexpr double kDamping = 0.5;
  for (int it = 1; it <= kMaxIter; ++it) {
    const double ka = detail::checked_loss(loss_on_a, intensity_b(ub));
    const double kb = detail::checked_loss(loss_on_b, intensity_a(ua));
    const double fa = energy_a(ka);
    const double fb = energy_b(kb);
    const double next_a = ua + kDamping * (fa - ua);
    const double next_b = ub + kDamping * (fb - ub);
    const double step = std::max(detail::rel_change(next_a, ua),
                                 detail::rel_change(next_b, ub));
    ua = next_a;
    ub = next_b;
    res.iterations = it;
    if (step < kTol) {
      res.converged = true;
      break;
    }
  }

  if (!res.converged && u_lin_a > 0.0) {
    // Monotone scalar residual in U_a; the physical root lies in [0, U_lin_a]
    // because added loss only removes energy.
    const auto forward_b = [&](double u) {
      return energy_b(detail::checked_loss(loss_on_b, intensity_a(u)));
    };
    const auto residual_a = [&](double u) {
      return u - energy_a(detail::checked_loss(loss_on_a,
                                               intensity_b(forward_b(u))));
    };
    double lo = 0.0;
    double hi = u_lin_a;
    if (residual_a(lo) <= 0.0 && residual_a(hi) >= 0.0) {
      for (int i = 0; i < 200 && (hi - lo) > 1e-16 * u_lin_a; ++i) {
        const double mid = 0.5 * (lo + hi);
        (residual_a(mid) < 0.0 ? lo : hi) = mid;
        ++res.iterations;
      }
      ua = 0.5 * (lo + hi);
      ub = forward_b(ua);
    }
  }

  // Re-substitute to report the final residual and self-consistent response.
  const double ka = detail::checked_loss(loss_on_a, intensity_b(ub));
  const double kb = detail::checked_loss(loss_on_b, intensity_a(ua));
  res.field_a = steady_state(cavity_a, detuning_a_rad_s, ka, input_power_a_w);
  res.field_b = steady_state(cavity_b, detuning_b_rad_s, kb, input_power_b_w);
  res.kappa_tpa_a = ka;
  res.kappa_tpa_b = kb;
  res.residual = std::max(detail::rel_change(res.field_a.energy_j, ua),
                          detail::rel_change(res.field_b.energy_j, ub));
  res.converged = res.residual < 1e-12;
  // Keep the reported energies exactly self-consistent with the kappas.
  return res;
}

// One field held at a fixed external pump intensity: a single linear
// evaluation with kappa_TPA = loss(pump intensity).
inline PortResponse solve_single_field(const ResonatorParams& cavity,
                                       double input_power_w,
                                       const LossRateFn& loss_on_field,
                                       double pump_intensity_w_cm2,
                                       double detuning_rad_s = 0.0) {
  const double kx = detail::checked_loss(loss_on_field, pump_intensity_w_cm2);
  return steady_state(cavity, detuning_rad_s, kx, input_power_w);
}

}  // namespace zeno
