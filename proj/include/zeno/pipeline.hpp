#pragma once

// Command-level workflows shared by the CLI and the test-suite: simulate a
// session to a directory of CSVs, analyze a directory back into fits and
// metrics, sweep designs, render plots, calibrate the vapor strength.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "design.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "fit.hpp"
#include "svg_plot.hpp"
#include "trace_io.hpp"

namespace zeno {

namespace detail {

inline std::string trial_filename(int trial_id, Condition c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "trial_%04d_%s.csv", trial_id, to_string(c));
  return buf;
}

// Re-zero on the drop-port peak: the drop resonance stays well formed even
// when TPA shallows the through dip.
inline ScanTrace rezero_on_drop(const ScanTrace& t) {
  const auto fit = fit_lorentzian(t, Channel::drop, Polarity::peak);
  return rezero(t, fit.parameters[1]);
}

}  // namespace detail

struct CalibrationReport {
  double alpha_cal = 0.0;
  double kappa_tpa = 0.0;        // rad/s at the operating point
  double kappa_total = 0.0;      // rad/s, bare device
  double kappa_ratio = 0.0;      // kappa_tpa / kappa_total
  double achieved_change = 0.0;  // on-resonance through change
};

inline CalibrationReport run_calibrate(const SessionConfig& cfg) {
  cfg.validate();
  const ResonatorParams device = cfg.resonator();
  const VaporParams vapor = cfg.vapor_params();
  const TpaOperatingPoint op = cfg.operating_point();
  CalibrationReport rep;
  rep.alpha_cal = calibrate_alpha(cfg.calibration.target_through_change,
                                  device, vapor, op);
  rep.kappa_tpa = tpa_loss_rate(vapor, op, rep.alpha_cal);
  rep.kappa_total = device.kappa_total();
  rep.kappa_ratio = rep.kappa_tpa / rep.kappa_total;
  rep.achieved_change =
      steady_state(device, 0.0, rep.kappa_tpa, 1.0).through -
      steady_state(device, 0.0, 0.0, 1.0).through;
  return rep;
}

struct SimulateSummary {
  std::filesystem::path directory;
  int traces_written = 0;
  double alpha_cal = 0.0;
  double kappa_tpa = 0.0;
  ScanTrace averaged_tpa;
  ScanTrace averaged_control;
  ScanTrace difference;
};

inline SimulateSummary run_simulate(const SessionConfig& cfg,
                                    const std::filesystem::path& outdir,
                                    bool no_vapor = false) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(outdir);

  const ResonatorParams device = cfg.resonator();
  const ScanConfig scan = cfg.scan_config();

  SimulateSummary sum;
  sum.directory = outdir;

  std::vector<ScanTrace> traces;
  if (no_vapor) {
    traces = run_no_vapor_control(scan, device);
  } else {
    const VaporParams vapor = cfg.vapor_params();
    const TpaOperatingPoint op = cfg.operating_point();
    sum.alpha_cal = calibrate_alpha(cfg.calibration.target_through_change,
                                    device, vapor, op);
    sum.kappa_tpa = tpa_loss_rate(vapor, op, sum.alpha_cal);
    traces = run_paired_session(scan, device, vapor, op, sum.alpha_cal);
  }

  for (const auto& t : traces) {
    write_trace_csv(outdir / detail::trial_filename(t.trial_id, t.condition),
                    t);
    ++sum.traces_written;
  }

  std::vector<ScanTrace> rezeroed_tpa, rezeroed_control;
  for (const auto& t : traces) {
    auto rz = detail::rezero_on_drop(t);
    (t.condition == Condition::tpa ? rezeroed_tpa : rezeroed_control)
        .push_back(std::move(rz));
  }
  sum.averaged_tpa = average_trials(rezeroed_tpa);
  sum.averaged_control = average_trials(rezeroed_control);
  sum.difference = difference_signal(sum.averaged_tpa, sum.averaged_control);
  write_trace_csv(outdir / "averaged_tpa.csv", sum.averaged_tpa);
  write_trace_csv(outdir / "averaged_control.csv", sum.averaged_control);
  write_trace_csv(outdir / "difference.csv", sum.difference);

  const ResonatorParams& d = device;
  write_keyvalue(
      outdir / "summary.txt",
      {{"trials", std::to_string(scan.trials)},
       {"samples_per_trace", std::to_string(scan.samples)},
       {"traces_written", std::to_string(sum.traces_written)},
       {"seed", std::to_string(scan.rng_seed)},
       {"no_vapor", no_vapor ? "true" : "false"},
       {"alpha_cal", detail::csv_double(sum.alpha_cal)},
       {"kappa_tpa_rad_s", detail::csv_double(sum.kappa_tpa)},
       {"kappa_total_rad_s", detail::csv_double(d.kappa_total())},
       {"loaded_q", detail::csv_double(d.loaded_q())},
       {"linewidth_hz", detail::csv_double(d.kappa_total() / kTwoPi)},
       {"input_power_w", detail::csv_double(scan.input_power_w)},
       {"mode_volume_cubic_wavelengths",
        detail::csv_double(mode_volume_in_cubic_wavelengths(
            d.mode_volume_cm3, kSpeedOfLight / d.resonance_frequency_hz,
            d.effective_index))}});
  return sum;
}

struct TraceFitRow {
  int trial_id = 0;
  Condition condition = Condition::tpa;
  Channel channel = Channel::drop;
  FitResult fit;
};

// Paired per-trial statistics of (tpa - control) at the re-zeroed centre.
struct PairedStats {
  double mean_difference = 0.0;
  double standard_error = 0.0;
  double t_statistic = 0.0;
  int pairs = 0;
};

struct AnalysisReport {
  std::vector<TraceFitRow> fits;
  ScanTrace averaged_tpa;
  ScanTrace averaged_control;
  ScanTrace difference;
  ContrastMetrics metrics;
  PairedStats through_stats;
  PairedStats drop_stats;
  double mean_center_hz = 0.0;  // drop-fit centres across all traces
  double mean_fwhm_hz = 0.0;
};

// Pure-analysis counterpart of run_analyze, reusable on in-memory traces.
inline AnalysisReport analyze_traces(const std::vector<ScanTrace>& traces) {
  if (traces.empty())
    throw SchemaError("no traces to analyze", 0, "");

  AnalysisReport rep;
  std::vector<ScanTrace> rz_tpa, rz_control;
  rz_tpa.reserve(traces.size());
  rz_control.reserve(traces.size());
  std::map<int, std::pair<const ScanTrace*, const ScanTrace*>> pairs;
  double center_sum = 0.0, fwhm_sum = 0.0;
  int center_n = 0;

  for (const auto& t : traces) {
    if (t.condition == Condition::difference)
      throw SchemaError("difference traces cannot be re-analyzed", 0,
                        "condition");
    const auto drop_fit = fit_lorentzian(t, Channel::drop, Polarity::peak);
    const auto through_fit =
        fit_lorentzian(t, Channel::through, Polarity::dip);
    rep.fits.push_back({t.trial_id, t.condition, Channel::drop, drop_fit});
    rep.fits.push_back({t.trial_id, t.condition, Channel::through, through_fit});
    center_sum += drop_fit.parameters[1];
    fwhm_sum += drop_fit.parameters[2];
    ++center_n;
    auto& bucket = t.condition == Condition::tpa ? rz_tpa : rz_control;
    bucket.push_back(rezero(t, drop_fit.parameters[1]));
    auto& slot = pairs[t.trial_id];
    // reserve() above keeps these pointers stable while buckets grow
    (t.condition == Condition::tpa ? slot.first : slot.second) =
        &bucket.back();
  }
  rep.mean_center_hz = center_sum / center_n;
  rep.mean_fwhm_hz = fwhm_sum / center_n;

  if (rz_tpa.empty() || rz_control.empty())
    throw SchemaError("need both tpa and control traces to analyze", 0,
                      "condition");
  rep.averaged_tpa = average_trials(rz_tpa);
  rep.averaged_control = average_trials(rz_control);
  rep.difference = difference_signal(rep.averaged_tpa, rep.averaged_control);
  rep.metrics = contrast_metrics(rep.averaged_tpa, rep.averaged_control);

  std::vector<double> dth, ddr;
  for (const auto& [id, pr] : pairs) {
    if (!pr.first || !pr.second) continue;
    dth.push_back(interpolate(pr.first->detuning_hz, pr.first->through, 0.0) -
                  interpolate(pr.second->detuning_hz, pr.second->through, 0.0));
    ddr.push_back(interpolate(pr.first->detuning_hz, pr.first->drop, 0.0) -
                  interpolate(pr.second->detuning_hz, pr.second->drop, 0.0));
  }
  const auto stats_of = [](const std::vector<double>& d) {
    PairedStats s;
    s.pairs = static_cast<int>(d.size());
    if (d.empty()) return s;
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= d.size();
    s.mean_difference = mean;
    if (d.size() > 1) {
      double ss = 0.0;
      for (double v : d) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / (d.size() - 1));
      s.standard_error = sd / std::sqrt(static_cast<double>(d.size()));
      if (s.standard_error > 0.0)
        s.t_statistic = mean / s.standard_error;
    }
    return s;
  };
  rep.through_stats = stats_of(dth);
  rep.drop_stats = stats_of(ddr);
  return rep;
}

inline std::vector<ScanTrace> read_trial_traces(
    const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw SchemaError("not a directory: " + dir.string(), 0, "");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trial_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw SchemaError("no trial_*.csv traces found in " + dir.string(), 0, "");
  std::vector<ScanTrace> traces;
  traces.reserve(files.size());
  for (const auto& f : files) traces.push_back(read_trace_csv(f));
  return traces;
}

inline AnalysisReport run_analyze(const std::filesystem::path& indir,
                                  const std::filesystem::path& outdir) {
  namespace fs = std::filesystem;
  const auto traces = read_trial_traces(indir);
  AnalysisReport rep = analyze_traces(traces);
  fs::create_directories(outdir);

  std::ostringstream os;
  os << "trial_id,condition,channel,amplitude,center_hz,fwhm_hz,baseline,"
        "residual_rms,converged,iterations\n";
  for (const auto& row : rep.fits) {
    os << row.trial_id << ',' << to_string(row.condition) << ','
       << (row.channel == Channel::through ? "through" : "drop") << ','
       << detail::csv_double(row.fit.parameters[0]) << ','
       << detail::csv_double(row.fit.parameters[1]) << ','
       << detail::csv_double(row.fit.parameters[2]) << ','
       << detail::csv_double(row.fit.parameters[3]) << ','
       << detail::csv_double(row.fit.residual_norm) << ','
       << (row.fit.converged ? 1 : 0) << ',' << row.fit.iterations << "\n";
  }
  detail::atomic_write(outdir / "fit_report.csv", os.str());

  write_trace_csv(outdir / "averaged_tpa.csv", rep.averaged_tpa);
  write_trace_csv(outdir / "averaged_control.csv", rep.averaged_control);
  write_trace_csv(outdir / "difference.csv", rep.difference);
  write_keyvalue(
      outdir / "metrics.txt",
      {{"through_change_center", detail::csv_double(rep.metrics.through_change_center)},
       {"drop_change_center", detail::csv_double(rep.metrics.drop_change_center)},
       {"relative_dip_depth_change",
        detail::csv_double(rep.metrics.relative_dip_depth_change)},
       {"peak_through_diff_hz", detail::csv_double(rep.metrics.peak_through_diff_hz)},
       {"peak_drop_diff_hz", detail::csv_double(rep.metrics.peak_drop_diff_hz)},
       {"through_mean_difference", detail::csv_double(rep.through_stats.mean_difference)},
       {"through_standard_error", detail::csv_double(rep.through_stats.standard_error)},
       {"through_t_statistic", detail::csv_double(rep.through_stats.t_statistic)},
       {"drop_mean_difference", detail::csv_double(rep.drop_stats.mean_difference)},
       {"drop_standard_error", detail::csv_double(rep.drop_stats.standard_error)},
       {"drop_t_statistic", detail::csv_double(rep.drop_stats.t_statistic)},
       {"pairs", std::to_string(rep.through_stats.pairs)},
       {"mean_fitted_center_hz", detail::csv_double(rep.mean_center_hz)},
       {"mean_fitted_fwhm_hz", detail::csv_double(rep.mean_fwhm_hz)}});
  return rep;
}

inline std::vector<QSweepRow> run_sweep(const SessionConfig& cfg,
                                        double q0_min, double q0_max,
                                        int points,
                                        const std::filesystem::path& outfile) {
  cfg.validate();
  if (!(q0_min > 0.0) || !(q0_max > q0_min))
    throw ConfigError("need 0 < q0-min < q0-max");
  if (points < 2) throw ConfigError("need at least two sweep points");

  const ResonatorParams device = cfg.resonator();
  const VaporParams vapor = cfg.vapor_params();
  const TpaOperatingPoint op = cfg.operating_point();
  const double alpha = calibrate_alpha(cfg.calibration.target_through_change,
                                       device, vapor, op);

  std::vector<double> grid(points);
  const double ratio = std::log(q0_max / q0_min);
  for (int i = 0; i < points; ++i)
    grid[i] = q0_min * std::exp(ratio * i / (points - 1));

  const auto rows = sweep_contrast_vs_q(grid, device, vapor, op, alpha);
  std::vector<std::vector<double>> table;
  table.reserve(rows.size());
  for (const auto& r : rows)
    table.push_back({r.intrinsic_q, r.loaded_q, r.through_contrast});
  write_table_csv(outfile, "intrinsic_q,loaded_q,through_contrast", table);
  return rows;
}

inline void run_plot_session(const std::filesystem::path& dir,
                             const std::filesystem::path& outfile) {
  const ScanTrace tpa = read_trace_csv(dir / "averaged_tpa.csv");
  const ScanTrace ctl = read_trace_csv(dir / "averaged_control.csv");
  const ScanTrace dif = read_trace_csv(dir / "difference.csv");

  const auto ghz = [](const std::vector<double>& hz) {
    std::vector<double> g(hz.size());
    for (std::size_t i = 0; i < hz.size(); ++i) g[i] = hz[i] / 1e9;
    return g;
  };

  PlotPanel through{"Through port", "detuning from cavity centre (GHz)",
                    "transmission", {}, false};
  through.series.push_back({"tpa", "#c23b22", ghz(tpa.detuning_hz), tpa.through, 1.5, false});
  through.series.push_back({"control", "#1f6fb2", ghz(ctl.detuning_hz), ctl.through, 1.5, false});
  PlotPanel drop{"Drop port", "detuning from cavity centre (GHz)",
                 "transmission", {}, false};
  drop.series.push_back({"tpa", "#c23b22", ghz(tpa.detuning_hz), tpa.drop, 1.5, false});
  drop.series.push_back({"control", "#1f6fb2", ghz(ctl.detuning_hz), ctl.drop, 1.5, false});
  PlotPanel diff{"tpa - control", "detuning from cavity centre (GHz)",
                 "difference", {}, true};
  diff.series.push_back({"through", "#c23b22", ghz(dif.detuning_hz), dif.through, 1.5, false});
  diff.series.push_back({"drop", "#1f6fb2", ghz(dif.detuning_hz), dif.drop, 1.5, false});
  write_svg_plot(outfile, {through, drop, diff});
}

inline void run_plot_refcell(const SessionConfig& cfg,
                             const std::filesystem::path& outfile) {
  cfg.validate();
  const ResonatorParams device = cfg.resonator();
  const VaporParams vapor = cfg.vapor_params();
  const TpaOperatingPoint op = cfg.operating_point();
  const double alpha = calibrate_alpha(cfg.calibration.target_through_change,
                                       device, vapor, op);

  const double lo = std::max(0.5e9, cfg.scan.center_ghz * 1e9 -
                                        cfg.scan.span_ghz * 1e9);
  const double hi = cfg.scan.center_ghz * 1e9 + 2.0 * cfg.scan.span_ghz * 1e9;
  std::vector<double> grid(401);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = lo + (hi - lo) * i / (grid.size() - 1);
  const auto profile = reference_cell_profile(vapor, op, alpha, grid, false);

  // Wing fit on the re-zeroed axis, overlaid on the profile.
  std::vector<double> delta(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    delta[i] = grid[i] - cfg.scan.center_ghz * 1e9;
  const auto fit = fit_inverse_square(delta, profile.loss_rate);
  std::vector<double> fitted(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double q = delta[i] + fit.parameters[1];
    fitted[i] = fit.parameters[0] / (q * q);
  }

  std::vector<double> x(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) x[i] = grid[i] / 1e9;
  PlotPanel panel{"Vapor-cell TPA wing", "pump detuning from line centre (GHz)",
                  "kappa_TPA (rad/s)", {}, false};
  panel.series.push_back({"model", "#1f6fb2", x, profile.loss_rate, 1.8, false});
  panel.series.push_back({"inverse-square fit", "#c23b22", x, fitted, 1.5, true});
  write_svg_plot(outfile, {panel});
}

inline void run_plot_sweep(const std::filesystem::path& sweep_csv,
                           const std::filesystem::path& outfile) {
  std::ifstream is(sweep_csv);
  if (!is) throw SchemaError("cannot open sweep table: " + sweep_csv.string(), 0, "");
  std::string line;
  if (!std::getline(is, line) ||
      line.find("intrinsic_q") == std::string::npos)
    throw SchemaError("sweep table header mismatch", 1, "");
  std::vector<double> q, contrast;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (detail::trimmed_empty(line)) continue;
    const auto f = detail::split_csv_row(line);
    if (f.size() != 3)
      throw SchemaError("row " + std::to_string(row) + ": expected 3 fields",
                        row, "");
    q.push_back(std::log10(detail::schema_double(f[0], row, "intrinsic_q")));
    contrast.push_back(detail::schema_double(f[2], row, "through_contrast"));
  }
  if (q.empty()) throw SchemaError("sweep table has no rows", 1, "");
  PlotPanel panel{"Switching contrast vs intrinsic Q", "log10 intrinsic Q",
                  "on-resonance through change", {}, false};
  panel.series.push_back({"contrast", "#1f6fb2", q, contrast, 1.8, false});
  write_svg_plot(outfile, {panel});
}

}  // namespace zeno
