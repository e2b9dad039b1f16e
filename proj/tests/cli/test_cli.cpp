#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "cdc/estimation.hpp"
#include "cdc/imaging.hpp"
#include "cdc/io.hpp"
#include "cdc/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* env = std::getenv("CDC_CLI_PATH");
  REQUIRE_MESSAGE(env != nullptr, "CDC_CLI_PATH must point at the cdc binary");
  return env;
}

struct RunResult {
  int exit_code;
  std::string output;  // stdout and stderr combined
};

RunResult run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cdc_cli_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("simulate writes the requested dataset") {
  TempDir tmp;
  const auto out = tmp.file("events.jsonl");
  const auto r = run("simulate --gamma 0.096 --phi 4.11 --nbar 1 --phases 35 --events 10000 "
                     "--seed 20240917 -o " +
                     out);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(count_lines(out) == 10001);  // header plus one line per event

  const auto ds = cdc::read_event_file(out);
  CHECK(ds.events.size() == 10000);
  CHECK(ds.seed == 20240917);
  CHECK(ds.schedule.phases.size() == 35);
  REQUIRE(ds.truth.has_value());
  CHECK(ds.truth->cdc().magnitude() == doctest::Approx(0.096));

  SUBCASE("reruns are byte identical") {
    const auto out2 = tmp.file("events2.jsonl");
    const auto r2 = run("simulate --gamma 0.096 --phi 4.11 --nbar 1 --phases 35 --events 10000 "
                        "--seed 20240917 -o " +
                        out2);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(out) == slurp(out2));
  }
}

TEST_CASE("usage errors exit with code 2") {
  TempDir tmp;
  CHECK(run("simulate --events 0 --seed 1 -o " + tmp.file("x.jsonl")).exit_code == 2);
  CHECK(run("simulate --seed 1 -o " + tmp.file("x.jsonl")).exit_code == 2);  // events missing
  CHECK(run("simulate --events 10 -o " + tmp.file("x.jsonl")).exit_code == 2);  // seed missing
  CHECK(run("nosuchcommand").exit_code == 2);
  CHECK(run("").exit_code == 2);  // a subcommand is required
  CHECK(run("--help").exit_code == 0);
  CHECK(run("simulate --help").exit_code == 0);
}

TEST_CASE("estimate recovers the benchmark magnitude") {
  TempDir tmp;
  const auto events = tmp.file("events.jsonl");
  REQUIRE(run("simulate --gamma 0.096 --phi 4.11 --events 10000 --seed 31 -o " + events)
              .exit_code == 0);

  const auto r = run("estimate --events " + events + " --scheme count");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const json report = json::parse(r.output);
  CHECK(report["schema"] == "cdc-estimate-1");
  CHECK(report["degraded_to_click"] == false);
  const double gamma = report["estimate"]["gamma"].get<double>();
  CHECK(gamma > 0.03);
  CHECK(gamma < 0.17);
  CHECK(report["estimate"]["converged"] == true);

  SUBCASE("click requests are served by degrading count data") {
    const auto rc = run("estimate --events " + events + " --scheme click");
    REQUIRE(rc.exit_code == 0);
    const json click = json::parse(rc.output);
    CHECK(click["degraded_to_click"] == true);
    CHECK(click["estimate"]["scheme"] == "click");
  }

  SUBCASE("traditional needs a phase index") {
    CHECK(run("estimate --events " + events + " --scheme traditional").exit_code == 2);
    const auto rt = run("estimate --events " + events + " --scheme traditional --phase-index 4");
    REQUIRE(rt.exit_code == 0);
    CHECK(json::parse(rt.output)["estimate"]["scheme"] == "traditional");
  }

  SUBCASE("missing input file exits with code 3") {
    CHECK(run("estimate --events " + tmp.file("nope.jsonl")).exit_code == 3);
  }
}

TEST_CASE("count estimation on click data exits with the data error code") {
  TempDir tmp;
  cdc::ThermalModeParams truth(1.0, cdc::ComplexCoherence(0.3, 1.0));
  const auto ds =
      cdc::degrade_to_click(cdc::sample_events(truth, cdc::PhaseSchedule::uniform_grid(7), 500, 3));
  const auto file = tmp.file("click.jsonl");
  cdc::write_event_file(file, ds);
  CHECK(run("estimate --events " + file + " --scheme count").exit_code == 3);
}

TEST_CASE("sweep emits one row per scheme and size") {
  TempDir tmp;
  const auto out = tmp.file("sweep.csv");
  const auto r = run("sweep --sizes 500,1000 --trials 3 --schemes count,click --seed 11 "
                     "--threads 2 -o " +
                     out);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(count_lines(out) == 5);  // header plus 2 schemes times 2 sizes

  std::ifstream in(out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "scheme,size,n_trials,gamma_mean,gamma_std,phi_mean,phi_std");
  std::getline(in, line);
  CHECK(line.rfind("count,500,3,", 0) == 0);

  SUBCASE("results do not depend on the thread count") {
    const auto out1 = tmp.file("s1.csv");
    REQUIRE(run("sweep --sizes 500 --trials 3 --schemes count --seed 11 --threads 1 -o " + out1)
                .exit_code == 0);
    const auto out4 = tmp.file("s4.csv");
    REQUIRE(run("sweep --sizes 500 --trials 3 --schemes count --seed 11 --threads 4 -o " + out4)
                .exit_code == 0);
    CHECK(slurp(out1) == slurp(out4));
  }
}

TEST_CASE("image reconstructs the shipped test pattern") {
  TempDir tmp;
  const auto prefix = tmp.file("img");
  const auto r = run("image --array 15 --noise none -o " + prefix);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);

  REQUIRE(fs::exists(prefix + "_reconstruction.pgm"));
  REQUIRE(fs::exists(prefix + "_reconstruction.csv"));
  REQUIRE(fs::exists(prefix + "_map.csv"));
  REQUIRE(fs::exists(prefix + "_metrics.json"));

  const json report = json::parse(slurp(prefix + "_metrics.json"));
  CHECK(report["config"]["array"] == 15);
  CHECK(report["config"]["wavelength"].get<double>() == doctest::Approx(700e-9));

  // The reported metrics must match what the library computes directly.
  const auto scene = cdc::make_test_pattern(51, 51, 0.7e-6);
  const double pitch =
      cdc::matched_detector_pitch(700e-9, 8.67, scene.cols() * scene.pixel_pitch());
  const cdc::DetectorArray array{15, pitch, 8.67, 700e-9};
  const auto map = cdc::forward_coherence_map(scene, array);
  const auto rec = cdc::reconstruct_image(map, array, {scene.cols(), scene.pixel_pitch()});
  const auto metrics = cdc::image_metrics(rec.image, cdc::make_bandlimited_reference(scene, array));
  CHECK(report["metrics"]["normalized_rmse"].get<double>() ==
        doctest::Approx(metrics.normalized_rmse).epsilon(1e-12));
  CHECK(report["metrics"]["correlation"].get<double>() ==
        doctest::Approx(metrics.correlation).epsilon(1e-12));

  const auto back = cdc::read_coherence_map_csv(prefix + "_map.csv");
  CHECK(back.array_size() == 15);

  SUBCASE("noise requires a seed") {
    CHECK(run("image --array 15 --noise count -o " + tmp.file("noisy")).exit_code == 2);
    CHECK(run("image --array 15 --noise count --seed 7 -o " + tmp.file("noisy")).exit_code == 0);
  }

  SUBCASE("length options accept unit suffixes") {
    const auto ru = run("image --array 9 --wavelength 700nm --distance 8670mm -o " +
                        tmp.file("units"));
    REQUIRE(ru.exit_code == 0);
    const json u = json::parse(slurp(tmp.file("units") + "_metrics.json"));
    CHECK(u["config"]["distance"].get<double>() == doctest::Approx(8.67));
    CHECK(run("image --array 9 --wavelength 700furlongs -o " + tmp.file("bad")).exit_code == 2);
  }
}

TEST_CASE("chi2 reports per fringe statistics") {
  TempDir tmp;
  const auto events = tmp.file("events.jsonl");
  REQUIRE(run("simulate --gamma 0.096 --phi 4.11 --events 2000 --seed 77 -o " + events)
              .exit_code == 0);

  const auto r =
      run("chi2 --events " + events + " --gamma 0.096 --phi 4.11 --nbar 1 --fringes 0,1:1,0");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const json report = json::parse(r.output);
  CHECK(report["schema"] == "cdc-chi2-1");
  REQUIRE(report["fringes"].size() == 2);
  for (const auto& f : report["fringes"]) {
    const double chi2 = f["reduced_chi2"].get<double>();
    CHECK(chi2 > 0.0);
    CHECK(chi2 < 3.0);
  }

  SUBCASE("malformed fringe lists are usage errors") {
    CHECK(run("chi2 --events " + events + " --fringes banana").exit_code == 2);
  }
}

TEST_CASE("calibrate fits the flat rotation curve") {
  TempDir tmp;
  const auto samples = tmp.file("cal.csv");
  {
    std::ofstream out(samples);
    out << "alpha,count\n";
    for (int i = 0; i < 200; ++i) {
      const double alpha = 25.0 * i / 199.0;
      const double phase = -2.6 + 1.5 * std::sqrt(1.0 + alpha);
      out << alpha << ',' << 1e4 * 0.5 * (1.0 + 0.8 * std::cos(2.0 * phase)) << '\n';
    }
  }
  const auto r = run("calibrate --samples " + samples);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const json report = json::parse(r.output);
  CHECK(report["c0"].get<double>() == doctest::Approx(-2.6).epsilon(1e-2));
  CHECK(report["c1"].get<double>() == doctest::Approx(1.5).epsilon(1e-2));
}
