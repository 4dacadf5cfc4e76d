#pragma once

// Run configuration: INI-style sections with units spelled out in the key
// names.  Every key is optional and defaults to the reference device; files
// written by save() round-trip losslessly through load().

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "resonator.hpp"
#include "vapor.hpp"

namespace zeno {

struct SessionConfig {
  struct Device {
    double resonance_wavelength_nm = 1529.365;
    double loaded_q = 1e5;
    double intrinsic_loss_fraction = 0.05;  // kappa0 / kappa_tot
    double mode_volume_cm3 = 1.9e-11;
    double effective_index = 1.99;
    double group_index = 2.5;
    double input_power_nw = 14.0;
  } device;

  struct Vapor {
    double density_cm3 = 5e11;
    double temperature_k = 353.15;
    double atomic_mass_amu = kRb85MassAmu;
    double lambda1_nm = 780.241209;
    double lambda2_nm = 1529.365;
    double gamma_intermediate_mhz = kD2NaturalLinewidthHz / 1e6;
    // <= 0 means "derive from the Doppler rule at this temperature".
    double two_photon_fwhm_ghz = 0.0;
    double transit_broadening_mhz = -1.0;  // < 0 -> 300 nm transit rule
    double overlap_fraction = 0.1;
    double pump_intensity_w_cm2 = 470.0;
  } vapor;

  struct Scan {
    double center_ghz = 6.0;
    double span_ghz = 5.0;
    int samples = 501;
    int trials = 100;
    double drift_sigma_mhz = 100.0;
    double noise_sigma = 0.005;
    double control_offset_ghz = 10.0;
    double tpa_offset_ghz = 0.0;
    std::uint64_t seed = 20260814ull;
  } scan;

  struct Calibration {
    double target_through_change = 0.02;
  } calibration;

  struct Output {
    std::string directory = "out";
  } output;

  ResonatorParams resonator() const {
    return make_critical_resonator(device.resonance_wavelength_nm * 1e-9,
                                   device.loaded_q,
                                   device.intrinsic_loss_fraction,
                                   device.mode_volume_cm3,
                                   device.effective_index, device.group_index);
  }

  VaporParams vapor_params() const {
    VaporParams v;
    v.density_cm3 = vapor.density_cm3;
    v.temperature_k = vapor.temperature_k;
    v.atomic_mass_kg = vapor.atomic_mass_amu * kAtomicMassUnit;
    v.lambda1_m = vapor.lambda1_nm * 1e-9;
    v.lambda2_m = vapor.lambda2_nm * 1e-9;
    v.gamma_intermediate_hz = vapor.gamma_intermediate_mhz * 1e6;
    v.two_photon_fwhm_hz =
        vapor.two_photon_fwhm_ghz > 0.0
            ? vapor.two_photon_fwhm_ghz * 1e9
            : default_two_photon_fwhm(v.temperature_k, v.atomic_mass_kg,
                                      v.lambda1_m, v.lambda2_m);
    v.transit_broadening_hz =
        vapor.transit_broadening_mhz >= 0.0
            ? vapor.transit_broadening_mhz * 1e6
            : transit_broadening_width(v.temperature_k, v.atomic_mass_kg,
                                       300e-9);
    v.overlap_fraction = vapor.overlap_fraction;
    return v;
  }

  ScanConfig scan_config() const {
    ScanConfig s;
    s.center_hz = scan.center_ghz * 1e9;
    s.span_hz = scan.span_ghz * 1e9;
    s.samples = scan.samples;
    s.trials = scan.trials;
    s.drift_sigma_hz = scan.drift_sigma_mhz * 1e6;
    s.noise_sigma = scan.noise_sigma;
    s.control_offset_hz = scan.control_offset_ghz * 1e9;
    s.tpa_offset_hz = scan.tpa_offset_ghz * 1e9;
    s.rng_seed = scan.seed;
    s.input_power_w = device.input_power_nw * 1e-9;
    return s;
  }

  TpaOperatingPoint operating_point() const {
    TpaOperatingPoint op;
    op.intermediate_detuning_hz = scan.center_ghz * 1e9;
    op.two_photon_detuning_hz = scan.tpa_offset_ghz * 1e9;
    op.pump_intensity_w_cm2 = vapor.pump_intensity_w_cm2;
    return op;
  }

  void validate() const {
    try {
      resonator();
      vapor_params().validate();
      scan_config().validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (calibration.target_through_change < 0.0 ||
        calibration.target_through_change >= 1.0)
      throw ConfigError("calibration target must lie in [0, 1)");
    if (output.directory.empty())
      throw ConfigError("output directory must be non-empty");
  }

  std::string serialize() const;
  void save(const std::filesystem::path& file) const;
  static SessionConfig parse(const std::string& text);
  static SessionConfig load(const std::filesystem::path& file);
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& key,
                           int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' has a malformed number: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& key,
                           int line) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' has a malformed integer: '" + s + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& key,
                                int line) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || s.find('-') != std::string::npos)
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' has a malformed unsigned integer: '" + s + "'");
  return v;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::string SessionConfig::serialize() const {
  using detail::fmt_double;
  std::ostringstream os;
  os << "[device]\n";
  os << "resonance_wavelength_nm = " << fmt_double(device.resonance_wavelength_nm) << "\n";
  os << "loaded_q = " << fmt_double(device.loaded_q) << "\n";
  os << "intrinsic_loss_fraction = " << fmt_double(device.intrinsic_loss_fraction) << "\n";
  os << "mode_volume_cm3 = " << fmt_double(device.mode_volume_cm3) << "\n";
  os << "effective_index = " << fmt_double(device.effective_index) << "\n";
  os << "group_index = " << fmt_double(device.group_index) << "\n";
  os << "input_power_nw = " << fmt_double(device.input_power_nw) << "\n";
  os << "\n[vapor]\n";
  os << "density_cm3 = " << fmt_double(vapor.density_cm3) << "\n";
  os << "temperature_k = " << fmt_double(vapor.temperature_k) << "\n";
  os << "atomic_mass_amu = " << fmt_double(vapor.atomic_mass_amu) << "\n";
  os << "lambda1_nm = " << fmt_double(vapor.lambda1_nm) << "\n";
  os << "lambda2_nm = " << fmt_double(vapor.lambda2_nm) << "\n";
  os << "gamma_intermediate_mhz = " << fmt_double(vapor.gamma_intermediate_mhz) << "\n";
  os << "two_photon_fwhm_ghz = " << fmt_double(vapor.two_photon_fwhm_ghz) << "\n";
  os << "transit_broadening_mhz = " << fmt_double(vapor.transit_broadening_mhz) << "\n";
  os << "overlap_fraction = " << fmt_double(vapor.overlap_fraction) << "\n";
  os << "pump_intensity_w_cm2 = " << fmt_double(vapor.pump_intensity_w_cm2) << "\n";
  os << "\n[scan]\n";
  os << "center_ghz = " << fmt_double(scan.center_ghz) << "\n";
  os << "span_ghz = " << fmt_double(scan.span_ghz) << "\n";
  os << "samples = " << scan.samples << "\n";
  os << "trials = " << scan.trials << "\n";
  os << "drift_sigma_mhz = " << fmt_double(scan.drift_sigma_mhz) << "\n";
  os << "noise_sigma = " << fmt_double(scan.noise_sigma) << "\n";
  os << "control_offset_ghz = " << fmt_double(scan.control_offset_ghz) << "\n";
  os << "tpa_offset_ghz = " << fmt_double(scan.tpa_offset_ghz) << "\n";
  os << "seed = " << scan.seed << "\n";
  os << "\n[calibration]\n";
  os << "target_through_change = " << fmt_double(calibration.target_through_change) << "\n";
  os << "\n[output]\n";
  os << "directory = " << output.directory << "\n";
  return os.str();
}

inline SessionConfig SessionConfig::parse(const std::string& text) {
  SessionConfig cfg;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    std::string line = detail::trim(hash == std::string::npos
                                        ? raw
                                        : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unterminated section header");
      section = line.substr(1, line.size() - 2);
      static const std::set<std::string> known = {"device", "vapor", "scan",
                                                  "calibration", "output"};
      if (!known.count(section))
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");

    const auto num = [&] { return detail::parse_double(value, key, line_no); };
    bool handled = true;
    if (section == "device") {
      if (key == "resonance_wavelength_nm") cfg.device.resonance_wavelength_nm = num();
      else if (key == "loaded_q") cfg.device.loaded_q = num();
      else if (key == "intrinsic_loss_fraction") cfg.device.intrinsic_loss_fraction = num();
      else if (key == "mode_volume_cm3") cfg.device.mode_volume_cm3 = num();
      else if (key == "effective_index") cfg.device.effective_index = num();
      else if (key == "group_index") cfg.device.group_index = num();
      else if (key == "input_power_nw") cfg.device.input_power_nw = num();
      else handled = false;
    } else if (section == "vapor") {
      if (key == "density_cm3") cfg.vapor.density_cm3 = num();
      else if (key == "temperature_k") cfg.vapor.temperature_k = num();
      else if (key == "atomic_mass_amu") cfg.vapor.atomic_mass_amu = num();
      else if (key == "lambda1_nm") cfg.vapor.lambda1_nm = num();
      else if (key == "lambda2_nm") cfg.vapor.lambda2_nm = num();
      else if (key == "gamma_intermediate_mhz") cfg.vapor.gamma_intermediate_mhz = num();
      else if (key == "two_photon_fwhm_ghz") cfg.vapor.two_photon_fwhm_ghz = num();
      else if (key == "transit_broadening_mhz") cfg.vapor.transit_broadening_mhz = num();
      else if (key == "overlap_fraction") cfg.vapor.overlap_fraction = num();
      else if (key == "pump_intensity_w_cm2") cfg.vapor.pump_intensity_w_cm2 = num();
      else handled = false;
    } else if (section == "scan") {
      if (key == "center_ghz") cfg.scan.center_ghz = num();
      else if (key == "span_ghz") cfg.scan.span_ghz = num();
      else if (key == "samples") cfg.scan.samples = static_cast<int>(detail::parse_int(value, key, line_no));
      else if (key == "trials") cfg.scan.trials = static_cast<int>(detail::parse_int(value, key, line_no));
      else if (key == "drift_sigma_mhz") cfg.scan.drift_sigma_mhz = num();
      else if (key == "noise_sigma") cfg.scan.noise_sigma = num();
      else if (key == "control_offset_ghz") cfg.scan.control_offset_ghz = num();
      else if (key == "tpa_offset_ghz") cfg.scan.tpa_offset_ghz = num();
      else if (key == "seed") cfg.scan.seed = detail::parse_uint(value, key, line_no);
      else handled = false;
    } else if (section == "calibration") {
      if (key == "target_through_change") cfg.calibration.target_through_change = num();
      else handled = false;
    } else if (section == "output") {
      if (key == "directory") cfg.output.directory = value;
      else handled = false;
    } else {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": key outside of any section");
    }
    if (!handled)
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                        key + "' in section [" + section + "]");
  }
  cfg.validate();
  return cfg;
}

inline void SessionConfig::save(const std::filesystem::path& file) const {
  std::ofstream os(file);
  if (!os) throw ConfigError("cannot open config for writing: " + file.string());
  os << serialize();
  if (!os.flush()) throw ConfigError("failed writing config: " + file.string());
}

inline SessionConfig SessionConfig::load(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open config: " + file.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

}  // namespace zeno
