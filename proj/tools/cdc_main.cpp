// cdc: simulate photon-counting interferometry data, estimate the complex degree
// of coherence, and reconstruct source images from detector-array coherence maps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdc/errors.hpp"
#include "cdc/estimation.hpp"
#include "cdc/imaging.hpp"
#include "cdc/io.hpp"
#include "cdc/simulator.hpp"

namespace {

using nlohmann::json;
using namespace cdc;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

/// Lengths accept SI unit suffixes: "820nm", "0.7um", "48mm", "0.595m"; a bare
/// number is meters.
double parse_length(const std::string& text) {
  std::size_t pos = 0;
  double value;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw CLI::ValidationError("length", "cannot parse '" + text + "'");
  }
  std::string unit = text.substr(pos);
  if (unit.empty() || unit == "m") return value;
  if (unit == "nm") return value * 1e-9;
  if (unit == "um") return value * 1e-6;
  if (unit == "mm") return value * 1e-3;
  throw CLI::ValidationError("length", "unknown unit '" + unit + "' in '" + text + "'");
}

std::function<void(const std::string&)> length_option(double& target) {
  return [&target](const std::string& s) { target = parse_length(s); };
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

json estimate_to_json(const EstimateResult& r) {
  return {{"gamma", r.cdc_estimate.magnitude()},
          {"phi", r.cdc_estimate.phase()},
          {"nbar", r.nbar_estimate},
          {"log_likelihood", r.log_likelihood},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"scheme", scheme_name(r.scheme)},
          {"phase_degenerate", r.phase_degenerate},
          {"weak_identifiability", r.weak_identifiability}};
}

struct SimulateArgs {
  double gamma = 0.096;
  double phi = 4.11;
  double nbar = 1.0;
  int phases = 35;
  std::size_t events = 0;
  std::uint64_t seed = 0;
  std::string assignment = "uniform";
  double tail_tolerance = 1e-10;
  std::string output;
};

void run_simulate(const SimulateArgs& a) {
  ThermalModeParams truth(a.nbar, ComplexCoherence(a.gamma, a.phi));
  SimulationOptions options;
  options.assignment =
      a.assignment == "roundrobin" ? PhaseAssignment::RoundRobin : PhaseAssignment::UniformRandom;
  options.table_tail_tolerance = a.tail_tolerance;
  auto ds = sample_events(truth, PhaseSchedule::uniform_grid(a.phases), a.events, a.seed, options);
  write_event_file(a.output, ds);
}

struct EstimateArgs {
  std::string events;
  std::string scheme = "count";
  int phase_index = -1;
  bool fit_nbar = false;
  std::string output;
};

void run_estimate(const EstimateArgs& a) {
  Dataset ds = read_event_file(a.events);
  const Scheme requested = scheme_from_name(a.scheme);
  bool degraded = false;

  if (requested == Scheme::Traditional) {
    if (a.phase_index < 0) {
      throw CLI::ValidationError("--phase-index", "required for the traditional scheme");
    }
    ds = restrict_to_phase(ds, a.phase_index);
  } else if (requested == Scheme::Click && ds.scheme != Scheme::Click) {
    ds = degrade_to_click(ds);
    degraded = true;
  } else if (requested == Scheme::Count && ds.scheme == Scheme::Click) {
    throw DataError("cannot run the count scheme on click-degraded data");
  }

  MleOptions options;
  options.fit_nbar_jointly = a.fit_nbar;
  const EstimateResult result = mle_estimate(ds, options);

  json report{{"schema", "cdc-estimate-1"},
              {"config",
               {{"events", a.events},
                {"scheme", a.scheme},
                {"phase_index", a.phase_index},
                {"fit_nbar", a.fit_nbar}}},
              {"input",
               {{"n_events", ds.events.size()},
                {"seed", ds.seed},
                {"rng", ds.rng_id},
                {"file_scheme", scheme_name(ds.scheme)}}},
              {"degraded_to_click", degraded},
              {"estimate", estimate_to_json(result)}};
  if (a.output.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_json_file(a.output, report);
  }
}

struct SweepArgs {
  double gamma = 0.096;
  double phi = 4.11;
  double nbar = 1.0;
  int phases = 35;
  std::vector<std::size_t> sizes;
  int trials = 20;
  std::vector<std::string> schemes;
  std::uint64_t seed = 0;
  int threads = 0;
  int trad_phase_index = -1;
  std::string output;
};

void run_sweep(const SweepArgs& a) {
  ThermalModeParams truth(a.nbar, ComplexCoherence(a.gamma, a.phi));
  SweepConfig cfg;
  cfg.sizes = a.sizes;
  cfg.n_trials = a.trials;
  for (const auto& s : a.schemes) cfg.schemes.push_back(scheme_from_name(s));
  cfg.seed = a.seed;
  cfg.threads =
      a.threads > 0 ? a.threads : static_cast<int>(std::thread::hardware_concurrency());
  cfg.traditional_phase_index = a.trad_phase_index;
  const auto stats = precision_sweep(truth, PhaseSchedule::uniform_grid(a.phases), cfg);
  write_sweep_csv(a.output, stats);
}

struct ImageArgs {
  std::string scene;
  int array_n = 26;
  std::string wavelength = "700nm";
  std::string distance = "8.67m";
  std::string pitch;  // empty: matched to the scene field of view
  std::string noise = "none";
  double mag_std = -1.0;
  double phase_std = -1.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string output = "image_out";
};

void run_image(const ImageArgs& a) {
  if (a.noise != "none" && !a.seed_given) {
    throw CLI::ValidationError("--seed", "required when noise is enabled");
  }
  const SourceScene scene = a.scene.empty() ? make_test_pattern(51, 51, 0.7e-6)
                                            : read_scene_csv(a.scene);
  const double wavelength = parse_length(a.wavelength);
  const double distance = parse_length(a.distance);
  const double pitch =
      a.pitch.empty()
          ? matched_detector_pitch(wavelength, distance, scene.cols() * scene.pixel_pitch())
          : parse_length(a.pitch);
  const DetectorArray array{a.array_n, pitch, distance, wavelength};

  CoherenceMap map = forward_coherence_map(scene, array);
  if (map.fov_warning()) {
    std::cerr << "warning: scene extends beyond the unaliased field of view\n";
  }
  if (a.noise != "none") {
    NoiseModel model = NoiseModel::for_scheme(scheme_from_name(a.noise), a.seed);
    if (a.mag_std >= 0.0) model.magnitude_std = a.mag_std;
    if (a.phase_std >= 0.0) model.phase_std = a.phase_std;
    map = add_cdc_noise(map, model);
  }

  const auto rec =
      reconstruct_image(map, array, {scene.cols(), scene.pixel_pitch()});
  const SourceScene reference = make_bandlimited_reference(scene, array);
  const ImageMetrics metrics = image_metrics(rec.image, reference);
  const ImageMetrics vs_raw = image_metrics(rec.image, scene);

  const std::string prefix = a.output;
  write_pgm16(prefix + "_reconstruction.pgm", rec.image);
  write_scene_csv(prefix + "_reconstruction.csv", rec.image);
  write_coherence_map_csv(prefix + "_map.csv", map);
  json report{{"schema", "cdc-image-1"},
              {"config",
               {{"scene", a.scene},
                {"array", a.array_n},
                {"wavelength", wavelength},
                {"distance", distance},
                {"pitch", pitch},
                {"noise", a.noise},
                {"seed", a.seed}}},
              {"metrics",
               {{"rmse", metrics.rmse},
                {"normalized_rmse", metrics.normalized_rmse},
                {"contrast", metrics.contrast},
                {"correlation", metrics.correlation},
                {"normalized_rmse_vs_raw", vs_raw.normalized_rmse}}},
              {"diagnostics",
               {{"min_raw", rec.min_raw},
                {"negative_fraction", rec.negative_fraction},
                {"total_raw", rec.total_raw},
                {"fov_warning", map.fov_warning()}}}};
  write_json_file(prefix + "_metrics.json", report);
}

struct CalibrateArgs {
  std::string samples;
  int degree = 8;
  std::string output;
};

void run_calibrate(const CalibrateArgs& a) {
  std::ifstream in(a.samples);
  if (!in) throw DataError("cannot open for reading: " + a.samples);
  std::vector<std::pair<double, double>> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double alpha, count;
    if (std::sscanf(line.c_str(), "%lf,%lf", &alpha, &count) != 2) continue;  // header
    samples.emplace_back(alpha, count);
  }
  CalibrationConfig cfg;
  cfg.poly_degree = a.degree;
  const CalibrationCurve curve = fit_phase_calibration(samples, cfg);

  json report{{"schema", "cdc-calibration-1"},
              {"config", {{"samples", a.samples}, {"degree", a.degree}}},
              {"c0", curve.c0},
              {"c1", curve.c1},
              {"alpha_min", curve.alpha_min},
              {"alpha_max", curve.alpha_max},
              {"extrema", curve.extrema}};
  if (a.output.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_json_file(a.output, report);
  }
}

struct Chi2Args {
  std::string events;
  double gamma = 0.096;
  double phi = 4.11;
  double nbar = 1.0;
  std::string fringes = "0,1:1,0:1,1:0,2:2,0";
  int dof = 32;
  std::string output;
};

void run_chi2(const Chi2Args& a) {
  const Dataset ds = read_event_file(a.events);
  if (ds.scheme == Scheme::Click) {
    throw DataError("chi2 fringes require photon-number data, not click data");
  }
  const ThermalModeParams model(a.nbar, ComplexCoherence(a.gamma, a.phi));

  std::vector<CoincidenceOutcome> outcomes;
  {
    std::stringstream ss(a.fringes);
    std::string part;
    while (std::getline(ss, part, ':')) {
      int x, y;
      if (std::sscanf(part.c_str(), "%d,%d", &x, &y) != 2 || x < 0 || y < 0) {
        throw CLI::ValidationError("--fringes", "expected x,y pairs separated by ':'");
      }
      outcomes.push_back({x, y});
    }
  }
  if (outcomes.empty()) throw CLI::ValidationError("--fringes", "no fringes given");

  const std::size_t n_phases = ds.schedule.phases.size();
  std::vector<double> totals(n_phases, 0.0);
  for (const auto& e : ds.events) totals[e.phase_index] += 1.0;

  json fringe_reports = json::array();
  for (const auto o : outcomes) {
    std::vector<double> obs(n_phases, 0.0);
    for (const auto& e : ds.events) {
      if (e.x == o.x && e.y == o.y) obs[e.phase_index] += 1.0;
    }
    const auto probs = fringe_curve(o, model, ds.schedule.phases);
    std::vector<double> expected(n_phases);
    for (std::size_t i = 0; i < n_phases; ++i) expected[i] = totals[i] * probs[i];
    fringe_reports.push_back({{"outcome", {o.x, o.y}},
                              {"reduced_chi2", reduced_chi_squared(obs, expected, a.dof)}});
  }

  json report{{"schema", "cdc-chi2-1"},
              {"config",
               {{"events", a.events},
                {"gamma", a.gamma},
                {"phi", a.phi},
                {"nbar", a.nbar},
                {"dof", a.dof}}},
              {"fringes", fringe_reports}};
  if (a.output.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_json_file(a.output, report);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-counting interferometry: simulation, CDC estimation, imaging"};
  app.require_subcommand(1);
  app.set_config("--config");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic coincidence dataset");
  simulate->add_option("--gamma", sim.gamma, "CDC magnitude")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--phi", sim.phi, "CDC phase, radians");
  simulate->add_option("--nbar", sim.nbar, "Mean photon number per mode")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--phases", sim.phases, "Number of applied phases")->check(CLI::Range(1, 10000));
  simulate->add_option("--events", sim.events, "Number of events")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "RNG seed")->required();
  simulate->add_option("--assignment", sim.assignment, "Phase assignment")
      ->check(CLI::IsMember({"uniform", "roundrobin"}));
  simulate->add_option("--tail-tolerance", sim.tail_tolerance, "Outcome-table tail tolerance");
  simulate->add_option("-o,--output", sim.output, "Output event file")->required();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Maximum-likelihood CDC estimate");
  estimate->add_option("--events", est.events, "Input event file")->required();
  estimate->add_option("--scheme", est.scheme, "Detection scheme")
      ->check(CLI::IsMember({"count", "click", "traditional"}));
  estimate->add_option("--phase-index", est.phase_index, "Schedule phase for traditional");
  estimate->add_flag("--fit-nbar", est.fit_nbar, "Optimize nbar jointly");
  estimate->add_option("-o,--output", est.output, "Report file (default stdout)");

  SweepArgs swp;
  auto* sweep = app.add_subcommand("sweep", "Precision sweep over dataset sizes");
  sweep->add_option("--gamma", swp.gamma, "CDC magnitude")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--phi", swp.phi, "CDC phase, radians");
  sweep->add_option("--nbar", swp.nbar, "Mean photon number")->check(CLI::NonNegativeNumber);
  sweep->add_option("--phases", swp.phases, "Number of applied phases");
  sweep->add_option("--sizes", swp.sizes, "Dataset sizes")->required()->delimiter(',');
  sweep->add_option("--trials", swp.trials, "Trials per size")->check(CLI::Range(2, 100000));
  sweep->add_option("--schemes", swp.schemes, "Schemes to sweep")
      ->required()
      ->delimiter(',')
      ->check(CLI::IsMember({"count", "click", "traditional"}));
  sweep->add_option("--seed", swp.seed, "RNG seed")->required();
  sweep->add_option("--threads", swp.threads, "Worker threads (0 = all cores)");
  sweep->add_option("--trad-phase-index", swp.trad_phase_index,
                    "Schedule phase for the traditional scheme (-1 = auto)");
  sweep->add_option("-o,--output", swp.output, "Output CSV")->required();

  ImageArgs img;
  auto* image = app.add_subcommand("image", "Coherence-map imaging simulation");
  image->add_option("--scene", img.scene, "Scene CSV (default: shipped test pattern)");
  image->add_option("--array", img.array_n, "Detector array size N")->check(CLI::Range(2, 512));
  image->add_option("--wavelength", img.wavelength, "Wavelength (nm/um/mm/m suffixes)");
  image->add_option("--distance", img.distance, "Source distance");
  image->add_option("--pitch", img.pitch, "Detector pitch (default: matched to the scene)");
  image->add_option("--noise", img.noise, "Noise scheme")
      ->check(CLI::IsMember({"none", "count", "click", "traditional"}));
  image->add_option("--mag-std", img.mag_std, "Override magnitude noise std");
  image->add_option("--phase-std", img.phase_std, "Override phase noise std");
  image->add_option("--seed", img.seed, "Noise seed")->trigger_on_parse();
  image->get_option("--seed")->each([&img](const std::string&) { img.seed_given = true; });
  image->add_option("-o,--output", img.output, "Output file prefix");

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Fit the flat-rotation phase calibration");
  calibrate->add_option("--samples", cal.samples, "CSV of alpha,count samples")->required();
  calibrate->add_option("--degree", cal.degree, "Bracketing polynomial degree")
      ->check(CLI::Range(4, 32));
  calibrate->add_option("-o,--output", cal.output, "Report file (default stdout)");

  Chi2Args chi;
  auto* chi2 = app.add_subcommand("chi2", "Reduced chi-squared of fringes against a model");
  chi2->add_option("--events", chi.events, "Input event file")->required();
  chi2->add_option("--gamma", chi.gamma, "Model CDC magnitude")->check(CLI::Range(0.0, 1.0));
  chi2->add_option("--phi", chi.phi, "Model CDC phase");
  chi2->add_option("--nbar", chi.nbar, "Model mean photon number");
  chi2->add_option("--fringes", chi.fringes, "Colon-separated x,y outcomes");
  chi2->add_option("--dof", chi.dof, "Degrees of freedom")->check(CLI::PositiveNumber);
  chi2->add_option("-o,--output", chi.output, "Report file (default stdout)");

  try {
    app.parse(argc, argv);
    if (*simulate) run_simulate(sim);
    if (*estimate) run_estimate(est);
    if (*sweep) run_sweep(swp);
    if (*image) run_image(img);
    if (*calibrate) run_calibrate(cal);
    if (*chi2) run_chi2(chi);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
