#pragma once

// Virtual switching experiment: the pump and the cavity-coupled probe are
// scanned with equal and opposite detuning rates, so delta_2 stays fixed
// while delta_Rb sweeps across the cavity resonance.  Each trial pairs a
// "tpa" scan (pump on two-photon resonance) with a "control" scan (pump
// offset by control_offset_hz), sharing one cavity drift draw.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "resonator.hpp"
#include "trace.hpp"
#include "vapor.hpp"

namespace zeno {

struct ScanConfig {
  double center_hz = 6e9;          // nominal cavity dip position f0 on the
                                   // delta_Rb axis
  double span_hz = 5e9;
  int samples = 501;
  int trials = 100;
  double drift_sigma_hz = 100e6;   // per-trial cavity drift, 1 sigma
  double noise_sigma = 0.005;      // additive detector noise, 1 sigma
  double control_offset_hz = 10e9; // pump offset in the control condition
  double tpa_offset_hz = 0.0;      // pump offset in the tpa condition
  std::uint64_t rng_seed = 20260814ull;
  double input_power_w = 14e-9;

  void validate() const {
    if (!(center_hz > 0.0)) throw std::invalid_argument("scan centre must be positive");
    if (!(span_hz > 0.0)) throw std::invalid_argument("scan span must be positive");
    if (samples < 2) throw std::invalid_argument("need at least two samples");
    if (trials < 1) throw std::invalid_argument("need at least one trial");
    if (drift_sigma_hz < 0.0 || noise_sigma < 0.0)
      throw std::invalid_argument("noise widths must be non-negative");
    if (input_power_w < 0.0)
      throw std::invalid_argument("input power must be non-negative");
  }
};

namespace detail {

// Per-trace RNG stream: seed + 2*trial + (control ? 1 : 0).  Keeps trials
// independent while a re-run of any single trace is reproducible.
inline std::mt19937_64 trace_engine(const ScanConfig& scan, int trial_id,
                                    Condition condition) {
  return std::mt19937_64(scan.rng_seed + 2ull * static_cast<std::uint64_t>(trial_id) +
                         (condition == Condition::control ? 1ull : 0ull));
}

inline double clamp_signal(double v, double noise_sigma) {
  const double lo = -5.0 * noise_sigma;
  const double hi = 1.0 + 5.0 * noise_sigma;
  return std::min(hi, std::max(lo, v));
}

struct TrialKernel {
  const ScanConfig* scan;
  const ResonatorParams* device;
  double input_power_w;
  // kappa_TPA at sample i = strength * lineshape[i]; both zero when the
  // vapor is absent.
  std::vector<double> lineshape_tpa;      // L(delta_Rb) for the tpa condition
  std::vector<double> lineshape_control;  // shifted with the pump
  double strength_tpa = 0.0;
  double strength_control = 0.0;

  double axis(int i) const {
    const double step = scan->span_hz / (scan->samples - 1);
    return scan->center_hz - 0.5 * scan->span_hz + step * i;
  }

  ScanTrace run(Condition condition, int trial_id,
                std::optional<double> drift_override) const {
    auto engine = trace_engine(*scan, trial_id, condition);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double drift =
        drift_override ? *drift_override
                       : (scan->drift_sigma_hz > 0.0
                              ? scan->drift_sigma_hz * unit(engine)
                              : 0.0);

    const bool is_control = condition == Condition::control;
    const double strength = is_control ? strength_control : strength_tpa;
    const auto& line = is_control ? lineshape_control : lineshape_tpa;

    ScanTrace t;
    t.condition = condition;
    t.trial_id = trial_id;
    t.true_center_hz = scan->center_hz + drift;
    t.detuning_hz.resize(scan->samples);
    t.through.resize(scan->samples);
    t.drop.resize(scan->samples);
    for (int i = 0; i < scan->samples; ++i) {
      const double d = axis(i);
      const double dw = kTwoPi * (d - t.true_center_hz);
      const double kx = strength * (line.empty() ? 0.0 : line[i]);
      const PortResponse pr = steady_state(*device, dw, kx, input_power_w);
      double th = pr.through;
      double dr = pr.drop;
      if (scan->noise_sigma > 0.0) {
        th = clamp_signal(th + scan->noise_sigma * unit(engine),
                          scan->noise_sigma);
        dr = clamp_signal(dr + scan->noise_sigma * unit(engine),
                          scan->noise_sigma);
      }
      t.detuning_hz[i] = d;
      t.through[i] = th;
      t.drop[i] = dr;
    }
    return t;
  }
};

inline TrialKernel make_kernel(const ScanConfig& scan,
                               const ResonatorParams& device,
                               const VaporParams& vapor,
                               const TpaOperatingPoint& op, double alpha_cal,
                               double input_power_scale) {
  scan.validate();
  device.validate();
  vapor.validate();
  TrialKernel k;
  k.scan = &scan;
  k.device = &device;
  k.input_power_w = scan.input_power_w * input_power_scale;

  if (vapor.density_cm3 > 0.0 && alpha_cal > 0.0 &&
      op.pump_intensity_w_cm2 > 0.0) {
    const double sigma1 =
        doppler_sigma(vapor.temperature_k, vapor.atomic_mass_kg,
                      kSpeedOfLight / vapor.lambda1_m);
    const double fwhm2 = vapor.effective_two_photon_fwhm();
    const double common = alpha_cal * vapor.overlap_fraction *
                          vapor.density_cm3 * op.pump_intensity_w_cm2;
    k.strength_tpa =
        common * two_photon_resonance_factor(scan.tpa_offset_hz, fwhm2);
    k.strength_control =
        common * two_photon_resonance_factor(scan.control_offset_hz, fwhm2);
    k.lineshape_tpa.resize(scan.samples);
    k.lineshape_control.resize(scan.samples);
    for (int i = 0; i < scan.samples; ++i) {
      const double d = k.axis(i);
      k.lineshape_tpa[i] = intermediate_lineshape(
          d + scan.tpa_offset_hz, sigma1, vapor.gamma_intermediate_hz);
      k.lineshape_control[i] = intermediate_lineshape(
          d + scan.control_offset_hz, sigma1, vapor.gamma_intermediate_hz);
    }
  }
  return k;
}

}  // namespace detail

// One scan under one condition.  drift_override pins the cavity drift
// (used to share a draw across a tpa/control pair).
inline ScanTrace run_trial(const ScanConfig& scan,
                           const ResonatorParams& device,
                           const VaporParams& vapor,
                           const TpaOperatingPoint& op, double alpha_cal,
                           Condition condition, int trial_id = 0,
                           std::optional<double> drift_override = {}) {
  if (condition == Condition::difference)
    throw std::invalid_argument("cannot simulate a difference trace");
  const auto kernel = detail::make_kernel(scan, device, vapor, op, alpha_cal, 1.0);
  return kernel.run(condition, trial_id, drift_override);
}

// trials paired scans: [tpa 0, control 0, tpa 1, control 1, ...].
inline std::vector<ScanTrace> run_paired_session(const ScanConfig& scan,
                                                 const ResonatorParams& device,
                                                 const VaporParams& vapor,
                                                 const TpaOperatingPoint& op,
                                                 double alpha_cal) {
  const auto kernel = detail::make_kernel(scan, device, vapor, op, alpha_cal, 1.0);
  std::vector<ScanTrace> traces;
  traces.reserve(2 * static_cast<std::size_t>(scan.trials));
  for (int trial = 0; trial < scan.trials; ++trial) {
    ScanTrace tpa = kernel.run(Condition::tpa, trial, {});
    const double drift = tpa.true_center_hz - scan.center_hz;
    traces.push_back(std::move(tpa));
    traces.push_back(kernel.run(Condition::control, trial, drift));
  }
  return traces;
}

// Same pipeline with the cell empty: kappa_TPA is identically zero in both
// conditions, so any apparent switching signal is a statistics artefact.
inline std::vector<ScanTrace> run_no_vapor_control(
    const ScanConfig& scan, const ResonatorParams& device,
    double input_power_scale = 1.0) {
  if (input_power_scale <= 0.0)
    throw std::invalid_argument("power scale must be positive");
  VaporParams empty;
  empty.density_cm3 = 0.0;
  const auto kernel = detail::make_kernel(scan, device, empty,
                                          TpaOperatingPoint{}, 0.0,
                                          input_power_scale);
  std::vector<ScanTrace> traces;
  traces.reserve(2 * static_cast<std::size_t>(scan.trials));
  for (int trial = 0; trial < scan.trials; ++trial) {
    ScanTrace tpa = kernel.run(Condition::tpa, trial, {});
    const double drift = tpa.true_center_hz - scan.center_hz;
    traces.push_back(std::move(tpa));
    traces.push_back(kernel.run(Condition::control, trial, drift));
  }
  return traces;
}

}  // namespace zeno
