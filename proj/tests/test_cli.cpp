// End-to-end checks of the zenosim binary: exit codes, artifacts on disk,
// determinism under a fixed seed.  Each command runs through /bin/sh with
// stdout+stderr captured to a file.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "catch2/catch_amalgamated.hpp"

#ifndef ZENOSIM_BIN
#error "ZENOSIM_BIN must point at the zenosim executable"
#endif

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("zenosim_cli_" + std::to_string(++counter) + "_" +
            std::to_string(static_cast<unsigned>(::getpid())));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct CommandResult {
  int code = -1;
  std::string output;  // stdout and stderr combined
};

CommandResult run(const TempDir& tmp, const std::string& args,
                  const std::string& env_prefix = "") {
  static int log_counter = 0;
  const fs::path log = tmp.path / ("cmd_" + std::to_string(++log_counter) + ".log");
  const std::string cmd = env_prefix + std::string(ZENOSIM_BIN) + " " + args +
                          " >" + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  CommandResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream is(log);
  std::ostringstream os;
  os << is.rdbuf();
  r.output = os.str();
  return r;
}

std::string slurp(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  REQUIRE(is);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Small session: enough trials for the averaging paths, fast enough to run
// several times.
fs::path write_small_config(const TempDir& tmp) {
  const fs::path file = tmp.path / "small.cfg";
  std::ofstream os(file);
  os << "[scan]\n"
        "samples = 161\n"
        "trials = 4\n"
        "seed = 99\n";
  os.flush();
  return file;
}

int count_files(const fs::path& dir, const std::string& prefix) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind(prefix, 0) == 0) ++n;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  TempDir tmp;
  CHECK(run(tmp, "").code == 2);                       // subcommand required
  CHECK(run(tmp, "simulate --frobnicate").code == 2);  // unknown flag
  CHECK(run(tmp, "explode").code == 2);                // unknown subcommand
  CHECK(run(tmp, "--help").code == 0);

  const auto r = run(tmp, "plot volcano --out " + (tmp.path / "x.svg").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("unknown plot kind") != std::string::npos);
}

TEST_CASE("broken config files exit with code 2") {
  TempDir tmp;
  const fs::path bad = tmp.path / "bad.cfg";
  {
    std::ofstream os(bad);
    os << "[device]\nloaded_quality = 1e5\n";
  }
  const auto r = run(tmp, "--config " + bad.string() + " calibrate");
  CHECK(r.code == 2);
  CHECK(r.output.find("config error") != std::string::npos);
  CHECK(r.output.find("line 2") != std::string::npos);

  CHECK(run(tmp, "--config " + (tmp.path / "missing.cfg").string() +
                     " calibrate")
            .code == 2);
}

TEST_CASE("calibrate prints the solved operating point") {
  TempDir tmp;
  const auto r = run(tmp, "calibrate");
  CHECK(r.code == 0);
  CHECK(r.output.find("alpha_cal = ") != std::string::npos);
  CHECK(r.output.find("kappa_tpa_rad_s = ") != std::string::npos);
  CHECK(r.output.find("kappa_ratio = ") != std::string::npos);
  CHECK(r.output.find("achieved_through_change = 0.02") != std::string::npos);
}

TEST_CASE("unreachable calibration target exits with code 3") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "deep.cfg";
  {
    std::ofstream os(cfg);
    // The through change saturates well below 0.9 at any loss rate.
    os << "[calibration]\ntarget_through_change = 0.9\n";
  }
  const auto r = run(tmp, "--config " + cfg.string() + " calibrate");
  CHECK(r.code == 3);
  CHECK(r.output.find("solver error") != std::string::npos);
}

TEST_CASE("simulate writes a complete session directory") {
  TempDir tmp;
  const auto cfg = write_small_config(tmp);
  const fs::path out = tmp.path / "session";
  const auto r = run(tmp, "--config " + cfg.string() + " simulate --out " +
                              out.string());
  REQUIRE(r.code == 0);
  CHECK(r.output.find("traces_written = 8") != std::string::npos);

  CHECK(count_files(out, "trial_") == 8);  // 4 trials x 2 conditions
  CHECK(fs::exists(out / "trial_0000_tpa.csv"));
  CHECK(fs::exists(out / "trial_0003_control.csv"));
  CHECK(fs::exists(out / "averaged_tpa.csv"));
  CHECK(fs::exists(out / "averaged_control.csv"));
  CHECK(fs::exists(out / "difference.csv"));
  const std::string summary = slurp(out / "summary.txt");
  CHECK(summary.find("trials = 4") != std::string::npos);
  CHECK(summary.find("no_vapor = false") != std::string::npos);
  CHECK(summary.find("alpha_cal = ") != std::string::npos);

  SECTION("same seed reproduces every byte, a new seed does not") {
    const fs::path again = tmp.path / "again";
    REQUIRE(run(tmp, "--config " + cfg.string() + " simulate --out " +
                         again.string())
                .code == 0);
    CHECK(slurp(again / "trial_0000_tpa.csv") ==
          slurp(out / "trial_0000_tpa.csv"));
    CHECK(slurp(again / "averaged_tpa.csv") == slurp(out / "averaged_tpa.csv"));
    CHECK(slurp(again / "difference.csv") == slurp(out / "difference.csv"));

    const fs::path reseeded = tmp.path / "reseeded";
    REQUIRE(run(tmp, "--config " + cfg.string() + " simulate --seed 1234 " +
                         "--out " + reseeded.string())
                .code == 0);
    CHECK(slurp(reseeded / "trial_0000_tpa.csv") !=
          slurp(out / "trial_0000_tpa.csv"));
  }

  SECTION("analyze turns the directory into fits and metrics") {
    const fs::path rep = tmp.path / "report";
    const auto a = run(tmp, "analyze " + out.string() + " --out " +
                                rep.string());
    REQUIRE(a.code == 0);
    CHECK(a.output.find("pairs = 4") != std::string::npos);
    CHECK(fs::exists(rep / "fit_report.csv"));
    CHECK(fs::exists(rep / "averaged_tpa.csv"));
    CHECK(fs::exists(rep / "difference.csv"));
    const std::string metrics = slurp(rep / "metrics.txt");
    for (const char* key :
         {"through_change_center", "drop_change_center",
          "relative_dip_depth_change", "through_t_statistic",
          "drop_t_statistic", "pairs", "mean_fitted_center_hz",
          "mean_fitted_fwhm_hz"})
      CHECK(metrics.find(std::string(key) + " = ") != std::string::npos);
    const std::string fits = slurp(rep / "fit_report.csv");
    CHECK(fits.rfind("trial_id,condition,channel,", 0) == 0);

    SECTION("session plot renders from the report") {
      const fs::path svg = tmp.path / "session.svg";
      REQUIRE(run(tmp, "plot session --in " + rep.string() + " --out " +
                           svg.string())
                  .code == 0);
      const std::string body = slurp(svg);
      CHECK(body.rfind("<svg", 0) == 0);
      CHECK(body.find("Through port") != std::string::npos);
    }
  }
}

TEST_CASE("empty-cell session keeps both conditions statistically identical") {
  TempDir tmp;
  const auto cfg = write_small_config(tmp);
  const fs::path out = tmp.path / "novapor";
  const auto r = run(tmp, "--config " + cfg.string() +
                              " simulate --no-vapor --out " + out.string());
  REQUIRE(r.code == 0);
  CHECK(r.output.find("alpha_cal = 0") != std::string::npos);
  const std::string summary = slurp(out / "summary.txt");
  CHECK(summary.find("no_vapor = true") != std::string::npos);
  CHECK(count_files(out, "trial_") == 8);
}

TEST_CASE("analyze rejects unusable inputs with code 4") {
  TempDir tmp;
  const fs::path empty = tmp.path / "empty";
  fs::create_directories(empty);
  const auto r = run(tmp, "analyze " + empty.string());
  CHECK(r.code == 4);
  CHECK(r.output.find("schema error") != std::string::npos);

  CHECK(run(tmp, "analyze " + (tmp.path / "nowhere").string()).code == 4);

  // A malformed trace file inside an otherwise valid directory.
  const fs::path dir = tmp.path / "corrupt";
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "trial_0000_tpa.csv");
    os << "delta_hz,through,drop,condition,trial_id\n1e9,0.5,oops,tpa,0\n";
  }
  CHECK(run(tmp, "analyze " + dir.string()).code == 4);
}

TEST_CASE("sweep writes the contrast table and plots it") {
  TempDir tmp;
  const fs::path csv = tmp.path / "sweep.csv";
  const auto r = run(tmp, "sweep --q0-min 1e5 --q0-max 1e6 --points 4 --out " +
                              csv.string());
  REQUIRE(r.code == 0);
  CHECK(r.output.find("points = 4") != std::string::npos);

  std::ifstream is(csv);
  std::string header;
  REQUIRE(std::getline(is, header));
  CHECK(header == "intrinsic_q,loaded_q,through_contrast");
  double last = -1.0;
  int rows = 0;
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    const double contrast = std::strtod(line.c_str() + comma + 1, nullptr);
    CHECK(contrast > last);  // contrast grows with intrinsic Q
    last = contrast;
    ++rows;
  }
  CHECK(rows == 4);

  const fs::path svg = tmp.path / "sweep.svg";
  REQUIRE(run(tmp, "plot sweep --in " + csv.string() + " --out " +
                       svg.string())
              .code == 0);
  CHECK(slurp(svg).rfind("<svg", 0) == 0);

  CHECK(run(tmp, "sweep --q0-min 1e6 --q0-max 1e5").code == 2);
  CHECK(run(tmp, "plot sweep").code == 2);  // --in is mandatory for tables
}

TEST_CASE("refcell plot renders the wing profile") {
  TempDir tmp;
  const fs::path svg = tmp.path / "refcell.svg";
  const auto r = run(tmp, "plot refcell --out " + svg.string());
  REQUIRE(r.code == 0);
  const std::string body = slurp(svg);
  CHECK(body.rfind("<svg", 0) == 0);
  CHECK(body.find("inverse-square fit") != std::string::npos);
}

TEST_CASE("ZENOSIM_OUT steers default output directories") {
  TempDir tmp;
  const auto cfg = write_small_config(tmp);
  const fs::path out = tmp.path / "env_out";
  const auto r = run(tmp, "--config " + cfg.string() + " simulate",
                     "ZENOSIM_OUT=" + out.string() + " ");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out / "summary.txt"));
  CHECK(count_files(out, "trial_") == 8);
}
