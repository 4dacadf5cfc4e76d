// zenosim: simulate, analyze and explore the vapor-loaded add-drop switch.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 solver
// non-convergence, 4 trace-schema violation.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "zeno/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

std::string default_out_dir(const zeno::SessionConfig& cfg) {
  if (const char* env = std::getenv("ZENOSIM_OUT"); env && *env)
    return env;
  return cfg.output.directory;
}

zeno::SessionConfig load_config(const std::string& path) {
  if (path.empty()) return zeno::SessionConfig{};
  return zeno::SessionConfig::load(path);
}

void print_kv(const char* key, const std::string& value) {
  std::printf("%s = %s\n", key, value.c_str());
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical-Zeno all-optical switch simulator"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "INI config file (defaults built in)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a paired tpa/control session");
  std::string sim_out;
  bool no_vapor = false;
  std::uint64_t seed = 0;
  double control_offset_ghz = 0.0;
  sim->add_option("--out", sim_out, "output directory");
  sim->add_flag("--no-vapor", no_vapor, "empty-cell control session");
  sim->add_option("--seed", seed, "override the session RNG seed");
  sim->add_option("--control-offset-ghz", control_offset_ghz,
                  "override the control pump offset");

  // analyze
  auto* ana = app.add_subcommand("analyze", "fit and difference a trace directory");
  std::string ana_in, ana_out;
  ana->add_option("dir", ana_in, "directory of trial_*.csv traces")->required();
  ana->add_option("--out", ana_out, "report directory (default: input dir)");

  // sweep
  auto* swp = app.add_subcommand("sweep", "contrast vs intrinsic Q table");
  double q0_min = 1e5, q0_max = 1e7;
  int points = 25;
  std::string sweep_out;
  swp->add_option("--q0-min", q0_min, "lowest intrinsic Q");
  swp->add_option("--q0-max", q0_max, "highest intrinsic Q");
  swp->add_option("--points", points, "grid points");
  swp->add_option("--out", sweep_out, "output CSV path");

  // plot
  auto* plt = app.add_subcommand("plot", "render an SVG figure");
  std::string kind, plot_in, plot_out;
  plt->add_option("kind", kind, "session | refcell | sweep")->required();
  plt->add_option("--in", plot_in, "input directory (session) or CSV (sweep)");
  plt->add_option("--out", plot_out, "output SVG path");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "solve the TPA strength alpha_cal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    zeno::SessionConfig cfg = load_config(config_path);
    if (sim->count("--seed")) cfg.scan.seed = seed;
    if (sim->count("--control-offset-ghz"))
      cfg.scan.control_offset_ghz = control_offset_ghz;
    cfg.validate();

    if (sim->parsed()) {
      const fs::path out = sim_out.empty() ? default_out_dir(cfg) : sim_out;
      const auto sum = zeno::run_simulate(cfg, out, no_vapor);
      print_kv("output_directory", sum.directory.string());
      print_kv("traces_written", std::to_string(sum.traces_written));
      print_kv("alpha_cal", num(sum.alpha_cal));
      print_kv("kappa_tpa_rad_s", num(sum.kappa_tpa));
    } else if (ana->parsed()) {
      const fs::path out = ana_out.empty() ? fs::path(ana_in) : fs::path(ana_out);
      const auto rep = zeno::run_analyze(ana_in, out);
      print_kv("report_directory", out.string());
      print_kv("pairs", std::to_string(rep.through_stats.pairs));
      print_kv("through_change_center", num(rep.metrics.through_change_center));
      print_kv("drop_change_center", num(rep.metrics.drop_change_center));
      print_kv("through_t_statistic", num(rep.through_stats.t_statistic));
      print_kv("drop_t_statistic", num(rep.drop_stats.t_statistic));
      print_kv("mean_fitted_center_hz", num(rep.mean_center_hz));
    } else if (swp->parsed()) {
      const fs::path out = sweep_out.empty()
                               ? fs::path(default_out_dir(cfg)) / "sweep.csv"
                               : fs::path(sweep_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      const auto rows = zeno::run_sweep(cfg, q0_min, q0_max, points, out);
      print_kv("sweep_table", out.string());
      print_kv("points", std::to_string(rows.size()));
    } else if (plt->parsed()) {
      const fs::path outdir = default_out_dir(cfg);
      if (kind == "session") {
        const fs::path in = plot_in.empty() ? outdir : fs::path(plot_in);
        const fs::path out = plot_out.empty() ? in / "session.svg" : fs::path(plot_out);
        zeno::run_plot_session(in, out);
        print_kv("figure", out.string());
      } else if (kind == "refcell") {
        const fs::path out = plot_out.empty() ? fs::path(outdir) / "refcell.svg"
                                              : fs::path(plot_out);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        zeno::run_plot_refcell(cfg, out);
        print_kv("figure", out.string());
      } else if (kind == "sweep") {
        if (plot_in.empty())
          throw zeno::ConfigError("plot sweep needs --in <sweep.csv>");
        const fs::path out = plot_out.empty() ? fs::path(outdir) / "sweep.svg"
                                              : fs::path(plot_out);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        zeno::run_plot_sweep(plot_in, out);
        print_kv("figure", out.string());
      } else {
        throw zeno::ConfigError("unknown plot kind '" + kind +
                                "' (expected session, refcell or sweep)");
      }
    } else if (cal->parsed()) {
      const auto rep = zeno::run_calibrate(cfg);
      print_kv("alpha_cal", num(rep.alpha_cal));
      print_kv("kappa_tpa_rad_s", num(rep.kappa_tpa));
      print_kv("kappa_total_rad_s", num(rep.kappa_total));
      print_kv("kappa_ratio", num(rep.kappa_ratio));
      print_kv("achieved_through_change", num(rep.achieved_change));
    }
  } catch (const zeno::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const zeno::SchemaError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return 4;
  } catch (const zeno::SolveError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
