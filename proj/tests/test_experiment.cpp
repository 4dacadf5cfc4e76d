#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "zeno/experiment.hpp"
#include "zeno/vapor.hpp"

using namespace zeno;

namespace {

ResonatorParams default_device() {
  return make_critical_resonator(1529.365e-9, 1e5, 0.05, 1.9e-11, 1.99, 2.5);
}

ScanConfig quiet_scan() {
  ScanConfig s;
  s.samples = 201;
  s.trials = 3;
  s.drift_sigma_hz = 0.0;
  s.noise_sigma = 0.0;
  return s;
}

double calibrated_alpha(const ResonatorParams& device, const VaporParams& vapor) {
  return calibrate_alpha(0.02, device, vapor, TpaOperatingPoint{});
}

}  // namespace

TEST_CASE("trials are bitwise deterministic") {
  const auto device = default_device();
  const auto vapor = rb85_defaults();
  const double alpha = calibrated_alpha(device, vapor);
  ScanConfig scan;
  scan.samples = 101;
  const auto a = run_trial(scan, device, vapor, TpaOperatingPoint{}, alpha,
                           Condition::tpa, 4);
  const auto b = run_trial(scan, device, vapor, TpaOperatingPoint{}, alpha,
                           Condition::tpa, 4);
  CHECK(a.detuning_hz == b.detuning_hz);
  CHECK(a.through == b.through);
  CHECK(a.drop == b.drop);
  CHECK(a.true_center_hz == b.true_center_hz);

  const auto c = run_trial(scan, device, vapor, TpaOperatingPoint{}, alpha,
                           Condition::tpa, 5);
  CHECK(a.through != c.through);  // different trial, different stream
  const auto d = run_trial(scan, device, vapor, TpaOperatingPoint{}, alpha,
                           Condition::control, 4);
  CHECK(a.through != d.through);  // sibling condition, different stream
}

TEST_CASE("noiseless control matches the bare cavity response") {
  const auto device = default_device();
  const auto vapor = rb85_defaults();
  const double alpha = calibrated_alpha(device, vapor);
  const auto scan = quiet_scan();
  const auto t = run_trial(scan, device, vapor, TpaOperatingPoint{}, alpha,
                           Condition::control, 0);
  t.validate();
  REQUIRE(t.size() == 201);
  CHECK(t.true_center_hz == Catch::Approx(scan.center_hz));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dw = kTwoPi * (t.detuning_hz[i] - scan.center_hz);
    const auto r = steady_state(device, dw, 0.0, scan.input_power_w);
    CHECK(t.through[i] == Catch::Approx(r.through).margin(1e-12));
    CHECK(t.drop[i] == Catch::Approx(r.drop).margin(1e-12));
  }
}

TEST_CASE("noiseless tpa-control difference has the switching signature") {
  const auto device = default_device();
  const auto vapor = rb85_defaults();
  const double alpha = calibrated_alpha(device, vapor);
  const auto scan = quiet_scan();
  const auto tpa = run_trial(scan, device, vapor, TpaOperatingPoint{}, alpha,
                             Condition::tpa, 0);
  const auto ctl = run_trial(scan, device, vapor, TpaOperatingPoint{}, alpha,
                             Condition::control, 0);
  const std::size_t mid = tpa.size() / 2;  // odd sample count: exact centre
  const double dth = tpa.through[mid] - ctl.through[mid];
  const double ddr = tpa.drop[mid] - ctl.drop[mid];
  CHECK(dth == Catch::Approx(0.02).margin(2e-4));
  CHECK(ddr < -0.1);
  // Off resonance the added loss broadens the dip, so the through
  // difference swings negative away from the centre.
  CHECK(tpa.through[mid / 2] < ctl.through[mid / 2]);
  CHECK(tpa.through[mid + mid / 2] < ctl.through[mid + mid / 2]);
  // The drop difference is negative everywhere and deepest near resonance.
  // The 1/delta^2 asymmetry of the vapor loss along the scan pulls the
  // deepest point a little off centre, so allow a small excess.
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < tpa.size(); ++i) {
    const double d = tpa.drop[i] - ctl.drop[i];
    CHECK(d <= 1e-12);
    if (d < tpa.drop[deepest] - ctl.drop[deepest]) deepest = i;
  }
  const double d_deep = tpa.drop[deepest] - ctl.drop[deepest];
  CHECK(std::abs(tpa.detuning_hz[deepest] - scan.center_hz) < 0.5e9);
  CHECK(std::abs(d_deep) <= 1.05 * std::abs(ddr));
  // ...and it has decayed well below the peak by the scan edges.
  CHECK(std::abs(tpa.drop.front() - ctl.drop.front()) < 0.5 * std::abs(ddr));
  CHECK(std::abs(tpa.drop.back() - ctl.drop.back()) < 0.5 * std::abs(ddr));
}

TEST_CASE("paired sessions share the drift inside each pair") {
  const auto device = default_device();
  const auto vapor = rb85_defaults();
  const double alpha = calibrated_alpha(device, vapor);
  ScanConfig scan;
  scan.samples = 51;
  scan.trials = 3;
  const auto traces = run_paired_session(scan, device, vapor,
                                         TpaOperatingPoint{}, alpha);
  REQUIRE(traces.size() == 6);
  for (int t = 0; t < 3; ++t) {
    const auto& tpa = traces[2 * t];
    const auto& ctl = traces[2 * t + 1];
    CHECK(tpa.condition == Condition::tpa);
    CHECK(ctl.condition == Condition::control);
    CHECK(tpa.trial_id == t);
    CHECK(ctl.trial_id == t);
    CHECK(tpa.true_center_hz == ctl.true_center_hz);  // shared draw
  }
  // Distinct trials draw distinct drifts.
  CHECK(traces[0].true_center_hz != traces[2].true_center_hz);

  // The standalone entry point reproduces the session's tpa member exactly.
  const auto solo = run_trial(scan, device, vapor, TpaOperatingPoint{}, alpha,
                              Condition::tpa, 1);
  CHECK(solo.through == traces[2].through);
  CHECK(solo.drop == traces[2].drop);
}

TEST_CASE("no-vapor sessions are pure statistics") {
  const auto device = default_device();
  ScanConfig scan;
  scan.samples = 101;
  scan.trials = 2;
  scan.noise_sigma = 0.0;
  const auto traces = run_no_vapor_control(scan, device);
  REQUIRE(traces.size() == 4);
  // Without noise the tpa and control members are numerically identical.
  for (int t = 0; t < 2; ++t) {
    CHECK(traces[2 * t].through == traces[2 * t + 1].through);
    CHECK(traces[2 * t].drop == traces[2 * t + 1].drop);
  }
  // And they match the bare cavity at the drifted centre.
  const auto& first = traces[0];
  for (std::size_t i = 0; i < first.size(); ++i) {
    const double dw = kTwoPi * (first.detuning_hz[i] - first.true_center_hz);
    const auto r = steady_state(device, dw, 0.0, scan.input_power_w);
    CHECK(first.through[i] == Catch::Approx(r.through).margin(1e-14));
  }
  CHECK_THROWS_AS(run_no_vapor_control(scan, device, 0.0),
                  std::invalid_argument);
}

TEST_CASE("signals are clamped to the noise band") {
  const auto device = default_device();
  ScanConfig scan;
  scan.samples = 301;
  scan.trials = 1;
  scan.noise_sigma = 0.2;  // absurd noise to force excursions
  const auto traces = run_no_vapor_control(scan, device);
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(t.through[i] >= -1.0);
      CHECK(t.through[i] <= 2.0);
      CHECK(t.drop[i] >= -1.0);
      CHECK(t.drop[i] <= 2.0);
    }
  }
}

TEST_CASE("scan validation") {
  const auto device = default_device();
  const auto vapor = rb85_defaults();
  ScanConfig scan;
  SECTION("one sample") {
    scan.samples = 1;
    CHECK_THROWS_AS(run_trial(scan, device, vapor, TpaOperatingPoint{}, 0.0,
                              Condition::tpa),
                    std::invalid_argument);
  }
  SECTION("zero trials") {
    scan.trials = 0;
    CHECK_THROWS_AS(run_paired_session(scan, device, vapor,
                                       TpaOperatingPoint{}, 0.0),
                    std::invalid_argument);
  }
  SECTION("negative noise") {
    scan.noise_sigma = -0.1;
    CHECK_THROWS_AS(scan.validate(), std::invalid_argument);
  }
  SECTION("difference condition cannot be simulated") {
    CHECK_THROWS_AS(run_trial(scan, device, vapor, TpaOperatingPoint{}, 0.0,
                              Condition::difference),
                    std::invalid_argument);
  }
}

TEST_CASE("session averages sharpen like 1/sqrt(trials)") {
  const auto device = default_device();
  ScanConfig scan;
  scan.samples = 51;
  scan.trials = 16;
  scan.noise_sigma = 0.01;
  scan.drift_sigma_hz = 0.0;
  std::vector<double> residuals;
  for (int seed = 0; seed < 12; ++seed) {
    scan.rng_seed = 5000 + 100 * seed;
    const auto traces = run_no_vapor_control(scan, device);
    // Average the control members sample-by-sample (identical axes).
    std::vector<double> mean(scan.samples, 0.0);
    int count = 0;
    for (const auto& t : traces) {
      if (t.condition != Condition::control) continue;
      for (int i = 0; i < scan.samples; ++i) mean[i] += t.through[i];
      ++count;
    }
    for (int i = 0; i < scan.samples; ++i) {
      mean[i] /= count;
      const double dw = kTwoPi * (traces[1].detuning_hz[i] - scan.center_hz);
      const double truth = steady_state(device, dw, 0.0, scan.input_power_w).through;
      residuals.push_back(mean[i] - truth);
    }
  }
  double ss = 0.0;
  for (double r : residuals) ss += r * r;
  const double sd = std::sqrt(ss / residuals.size());
  CHECK(sd == Catch::Approx(scan.noise_sigma / 4.0).epsilon(0.2));
}
