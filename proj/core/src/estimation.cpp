#include "cdc/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <optional>

#include <Eigen/Dense>

#include "cdc/errors.hpp"
#include "cdc/rng.hpp"

namespace cdc {

namespace {

constexpr double kProbFloor = 1e-300;

struct AggregatedData {
  // counts[phase_index][(x, y)]
  std::vector<std::map<std::pair<int, int>, std::size_t>> counts;
  std::vector<double> phases;
  Scheme scheme = Scheme::Count;
  std::size_t n_events = 0;
  double mean_total_photons = 0.0;
  double vacuum_fraction = 0.0;
};

AggregatedData aggregate(const Dataset& dataset) {
  if (dataset.events.empty()) throw DataError("empty dataset");
  dataset.schedule.validate();

  AggregatedData agg;
  agg.scheme = dataset.scheme;
  agg.phases = dataset.schedule.phases;
  agg.counts.resize(agg.phases.size());
  agg.n_events = dataset.events.size();

  double total = 0.0;
  std::size_t vacuum = 0;
  for (const EventRecord& e : dataset.events) {
    if (e.phase_index < 0 || static_cast<std::size_t>(e.phase_index) >= agg.phases.size()) {
      throw DataError("event phase index out of schedule bounds");
    }
    if (e.x < 0 || e.y < 0) throw DataError("negative photon count in dataset");
    if (dataset.scheme == Scheme::Click && (e.x > 1 || e.y > 1)) {
      throw DataError("click dataset contains photon counts above 1");
    }
    ++agg.counts[e.phase_index][{e.x, e.y}];
    total += e.x + e.y;
    if (e.x == 0 && e.y == 0) ++vacuum;
  }
  agg.mean_total_photons = total / double(agg.n_events);
  agg.vacuum_fraction = double(vacuum) / double(agg.n_events);
  return agg;
}

double log_likelihood_impl(const AggregatedData& agg, const ThermalModeParams& candidate) {
  double ll = 0.0;
  for (std::size_t p = 0; p < agg.phases.size(); ++p) {
    if (agg.counts[p].empty()) continue;
    const double theta = agg.phases[p] - candidate.cdc().phase();
    if (agg.scheme == Scheme::Click) {
      const auto bins = click_bin_probs(candidate, theta);
      for (const auto& [xy, n] : agg.counts[p]) {
        const double prob = bins[static_cast<std::size_t>(xy.first * 2 + xy.second)];
        ll += double(n) * std::log(std::max(prob, kProbFloor));
      }
    } else {
      for (const auto& [xy, n] : agg.counts[p]) {
        const double prob = coincidence_prob({xy.first, xy.second}, candidate, theta);
        ll += double(n) * std::log(std::max(prob, kProbFloor));
      }
    }
  }
  return ll;
}

/// Invert the phase-independent joint-vacuum probability for nbar at a given gamma:
/// (1+z1)(1+z2) = 1 + 2 nbar + nbar^2 (1 - g^2) = 1 / P00.
double nbar_from_vacuum_fraction(double f00, double gamma) {
  if (!(f00 > 0.0) || f00 >= 1.0) return 1.0;
  const double rhs = 1.0 / f00 - 1.0;  // 2 nbar + nbar^2 q
  const double q = 1.0 - gamma * gamma;
  if (q < 1e-12) return 0.5 * rhs;
  const double disc = 1.0 + q * rhs;
  return (std::sqrt(std::max(disc, 0.0)) - 1.0) / q;
}

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Minimizes f. Standard reflect/expand/contract/shrink simplex; convergence when
/// every vertex is within tol (inf norm) of the best one.
template <typename F>
NelderMeadResult nelder_mead(F&& f, const std::vector<double>& x0,
                             const std::vector<double>& steps, double tol, int max_iter) {
  const std::size_t dim = x0.size();
  std::vector<std::vector<double>> verts(dim + 1, x0);
  for (std::size_t i = 0; i < dim; ++i) verts[i + 1][i] += steps[i];
  std::vector<double> fv(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) fv[i] = f(verts[i]);

  NelderMeadResult result;
  auto order = [&] {
    std::vector<std::size_t> idx(dim + 1);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> v2;
    std::vector<double> f2;
    for (std::size_t i : idx) {
      v2.push_back(verts[i]);
      f2.push_back(fv[i]);
    }
    verts = std::move(v2);
    fv = std::move(f2);
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    order();
    result.iterations = iter + 1;

    double spread = 0.0;
    for (std::size_t i = 1; i <= dim; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        spread = std::max(spread, std::fabs(verts[i][d] - verts[0][d]));
      }
    }
    if (spread < tol) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += verts[i][d];
    }
    for (double& c : centroid) c /= double(dim);

    auto blend = [&](double w) {
      std::vector<double> p(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        p[d] = centroid[d] + w * (verts[dim][d] - centroid[d]);
      }
      return p;
    };

    auto refl = blend(-1.0);
    const double fr = f(refl);
    if (fr < fv[0]) {
      auto exp_pt = blend(-2.0);
      const double fe = f(exp_pt);
      if (fe < fr) {
        verts[dim] = std::move(exp_pt);
        fv[dim] = fe;
      } else {
        verts[dim] = std::move(refl);
        fv[dim] = fr;
      }
    } else if (fr < fv[dim - 1]) {
      verts[dim] = std::move(refl);
      fv[dim] = fr;
    } else {
      auto contr = blend(fr < fv[dim] ? -0.5 : 0.5);
      const double fc = f(contr);
      if (fc < std::min(fr, fv[dim])) {
        verts[dim] = std::move(contr);
        fv[dim] = fc;
      } else {
        for (std::size_t i = 1; i <= dim; ++i) {
          for (std::size_t d = 0; d < dim; ++d) {
            verts[i][d] = verts[0][d] + 0.5 * (verts[i][d] - verts[0][d]);
          }
          fv[i] = f(verts[i]);
        }
      }
    }
  }
  order();
  result.x = verts[0];
  result.value = fv[0];
  return result;
}

/// Least-squares truncated Fourier fit: value ~ a0 + sum_k a_k cos(k m theta) +
/// b_k sin(k m theta), with m the fundamental multiplier (2 for period-pi fringes).
struct TrigModel {
  Eigen::VectorXd coeffs;
  int harmonics = 0;
  int multiplier = 1;

  double eval(double theta) const {
    double v = coeffs[0];
    for (int k = 1; k <= harmonics; ++k) {
      v += coeffs[2 * k - 1] * std::cos(k * multiplier * theta) +
           coeffs[2 * k] * std::sin(k * multiplier * theta);
    }
    return v;
  }
};

TrigModel fit_trig(std::span<const double> phases, std::span<const double> values, int harmonics,
                   int multiplier) {
  const auto n = static_cast<Eigen::Index>(phases.size());
  harmonics = std::min<int>(harmonics, (static_cast<int>(n) - 1) / 2);
  Eigen::MatrixXd design(n, 2 * harmonics + 1);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (int k = 1; k <= harmonics; ++k) {
      design(i, 2 * k - 1) = std::cos(k * multiplier * phases[i]);
      design(i, 2 * k) = std::sin(k * multiplier * phases[i]);
    }
    rhs(i) = values[i];
  }
  TrigModel model;
  model.harmonics = harmonics;
  model.multiplier = multiplier;
  model.coeffs = design.colPivHouseholderQr().solve(rhs);
  return model;
}

void require_phase_coverage(std::span<const double> phases) {
  if (phases.size() < 5) throw DataError("need at least 5 phase bins");
  std::vector<double> sorted;
  sorted.reserve(phases.size());
  for (double p : phases) sorted.push_back(wrap_phase(p));
  std::sort(sorted.begin(), sorted.end());
  double max_gap = sorted.front() + kTwoPi - sorted.back();
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    max_gap = std::max(max_gap, sorted[i] - sorted[i - 1]);
  }
  // A 5-point uniform grid is the sparsest acceptable full-period coverage.
  if (max_gap > kTwoPi / 5.0 + 1e-9) {
    throw DataError("phase bins do not cover a full period");
  }
}

struct Extremum {
  double location = 0.0;
  double value = 0.0;
};

/// Dense scan over one fundamental period with parabolic refinement of the global
/// extrema of a fitted periodic model.
std::pair<Extremum, Extremum> model_extrema(const TrigModel& model) {
  const int n = 4096;
  const double period = kTwoPi / model.multiplier;
  const double step = period / n;
  int imax = 0, imin = 0;
  std::vector<double> vals(n);
  for (int i = 0; i < n; ++i) {
    vals[i] = model.eval(i * step);
    if (vals[i] > vals[imax]) imax = i;
    if (vals[i] < vals[imin]) imin = i;
  }
  auto refine = [&](int i) {
    const double fm = vals[(i + n - 1) % n], f0 = vals[i], fp = vals[(i + 1) % n];
    const double denom = fm - 2.0 * f0 + fp;
    double offset = 0.0;
    if (std::fabs(denom) > 1e-300) offset = 0.5 * (fm - fp) / denom;
    offset = std::clamp(offset, -0.5, 0.5);
    const double loc = i * step + offset * step;
    return Extremum{loc, model.eval(loc)};
  };
  return {refine(imax), refine(imin)};
}

double sample_std(std::span<const double> values, double mean) {
  if (values.size() < 2) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / double(values.size() - 1));
}

}  // namespace

double log_likelihood(const Dataset& dataset, const ThermalModeParams& candidate) {
  return log_likelihood_impl(aggregate(dataset), candidate);
}

EstimateResult mle_estimate(const Dataset& dataset, const MleOptions& options) {
  const AggregatedData agg = aggregate(dataset);
  const bool click = agg.scheme == Scheme::Click;
  const bool joint_nbar = click || options.fit_nbar_jointly;
  const double nbar_moments = click ? nbar_from_vacuum_fraction(agg.vacuum_fraction, 0.0)
                                    : 0.5 * agg.mean_total_photons;

  auto objective = [&](const std::vector<double>& p) {
    const double g = std::clamp(p[0], 0.0, 1.0);
    const double phi = wrap_phase(p[1]);
    const double nbar = joint_nbar ? std::max(p[2], 0.0) : nbar_moments;
    return -log_likelihood_impl(agg, ThermalModeParams(nbar, ComplexCoherence(g, phi)));
  };

  // Coarse grid over (gamma, phi); for click data nbar is seeded per gamma from the
  // phase-independent joint-vacuum fraction.
  std::vector<double> best = {0.0, 0.0, nbar_moments};
  double best_val = std::numeric_limits<double>::infinity();
  for (int gi = 0; gi < options.gamma_grid_points; ++gi) {
    const double g = double(gi) / double(options.gamma_grid_points - 1);
    const double nbar =
        click ? nbar_from_vacuum_fraction(agg.vacuum_fraction, g) : nbar_moments;
    for (int pi = 0; pi < options.phi_grid_points; ++pi) {
      const double phi = pi * kTwoPi / options.phi_grid_points;
      const std::vector<double> cand = {g, phi, nbar};
      const double v = objective(cand);
      if (v < best_val) {
        best_val = v;
        best = cand;
      }
    }
  }

  std::vector<double> x0(best.begin(), best.begin() + (joint_nbar ? 3 : 2));
  std::vector<double> steps = {0.05, 0.2};
  if (joint_nbar) steps.push_back(0.1 * std::max(x0[2], 0.1));
  auto opt = nelder_mead(objective, x0, steps, options.convergence_tol, options.max_iterations);

  EstimateResult result;
  result.scheme = agg.scheme;
  const double g = std::clamp(opt.x[0], 0.0, 1.0);
  result.cdc_estimate = ComplexCoherence(g, wrap_phase(opt.x[1]));
  result.nbar_estimate = joint_nbar ? std::max(opt.x[2], 0.0) : nbar_moments;
  result.log_likelihood = -opt.value;
  result.converged = opt.converged;
  result.iterations = opt.iterations;
  result.phase_degenerate = g < options.phase_degeneracy_threshold;
  result.weak_identifiability = agg.scheme == Scheme::Traditional;
  return result;
}

double visibility_estimate(std::span<const double> phases, std::span<const double> fringe01,
                           std::span<const double> fringe10) {
  require_phase_coverage(phases);
  if (fringe01.size() != phases.size() || fringe10.size() != phases.size()) {
    throw DataError("fringe length does not match phase bins");
  }
  // The two one-click fringes are antiphase with equal contrast, so the visibility
  // is computed per fringe and averaged; averaging the curves would cancel them.
  double acc = 0.0;
  for (auto fringe : {fringe01, fringe10}) {
    const TrigModel model = fit_trig(phases, fringe, 6, 1);
    const auto [hi, lo] = model_extrema(model);
    const double sum = hi.value + lo.value;
    acc += sum > 0.0 ? (hi.value - lo.value) / sum : 0.0;
  }
  return 0.5 * acc;
}

PhaseEstimate fringe_phase_estimate(const std::vector<FringeSamples>& fringes,
                                    const PhaseSchedule& schedule) {
  schedule.validate();
  if (fringes.empty()) throw DataError("no fringes provided");
  require_phase_coverage(schedule.phases);

  std::vector<double> full_candidates;  // period 2pi
  std::vector<double> half_candidates;  // period pi (x == y outcomes)
  for (const FringeSamples& fringe : fringes) {
    if (fringe.frequencies.size() != schedule.phases.size()) {
      throw DataError("fringe length does not match schedule");
    }
    const bool half = fringe.outcome.x == fringe.outcome.y;
    const TrigModel model = fit_trig(schedule.phases, fringe.frequencies, 4, half ? 2 : 1);
    const auto [hi, lo] = model_extrema(model);
    const double scale = std::max({std::fabs(hi.value), std::fabs(lo.value), 1e-300});
    if ((hi.value - lo.value) / scale < 1e-6) continue;  // flat, carries no phase
    if (half) {
      // Thermal bunching puts the equal-count minimum at zero net phase: the
      // bunched outcomes (2k,0)/(0,2k) are favored there, (k,k) suppressed.
      half_candidates.push_back(lo.location);  // mod pi
    } else {
      // The detector receiving more photons peaks when the net phase is zero, i.e.
      // at phi_a = phi; the other detector dips there.
      full_candidates.push_back(fringe.outcome.x > fringe.outcome.y ? hi.location : lo.location);
    }
  }
  if (full_candidates.empty() && half_candidates.empty()) {
    throw DataError("all fringes are flat; phase is unidentifiable");
  }

  PhaseEstimate est;
  if (full_candidates.empty()) {
    // Only period-pi information: average in the doubled angle and report mod pi.
    std::vector<double> doubled;
    for (double c : half_candidates) doubled.push_back(wrap_phase(2.0 * c));
    est.phase = wrap_phase(0.5 * circular_mean(doubled));
    est.pi_ambiguous = true;
    return est;
  }

  const double anchor = circular_mean(full_candidates);
  std::vector<double> all = full_candidates;
  for (double c : half_candidates) {
    // Unfold the pi-periodic candidate to the representative nearest the anchor.
    const double a = wrap_phase(c), b = wrap_phase(c + kPi);
    all.push_back(circular_distance(a, anchor) <= circular_distance(b, anchor) ? a : b);
  }
  est.phase = circular_mean(all);
  return est;
}

double CalibrationCurve::phase_at(double alpha) const {
  if (alpha < -1.0) throw DataError("calibration position must satisfy alpha >= -1");
  return c0 + c1 * std::sqrt(1.0 + alpha);
}

CalibrationCurve fit_phase_calibration(std::span<const std::pair<double, double>> samples,
                                       const CalibrationConfig& config) {
  if (config.poly_degree < 4) throw DataError("calibration polynomial degree must be >= 4");
  if (samples.size() < static_cast<std::size_t>(config.poly_degree) + 2) {
    throw DataError("not enough calibration samples for the polynomial fit");
  }
  std::vector<std::pair<double, double>> pts(samples.begin(), samples.end());
  std::sort(pts.begin(), pts.end());
  const double a_min = pts.front().first, a_max = pts.back().first;
  if (!(a_max > a_min)) throw DataError("calibration samples must span a range of alpha");
  if (a_min < -1.0) throw DataError("calibration positions must satisfy alpha >= -1");

  // Polynomial fit in the normalized coordinate for conditioning.
  auto normalize = [&](double a) { return 2.0 * (a - a_min) / (a_max - a_min) - 1.0; };
  auto denormalize = [&](double t) { return a_min + 0.5 * (t + 1.0) * (a_max - a_min); };
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd design(n, config.poly_degree + 1);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = normalize(pts[i].first);
    double power = 1.0;
    for (int d = 0; d <= config.poly_degree; ++d) {
      design(i, d) = power;
      power *= t;
    }
    rhs(i) = pts[i].second;
  }
  const Eigen::VectorXd poly = design.colPivHouseholderQr().solve(rhs);
  auto poly_eval = [&](double t) {
    double v = 0.0, power = 1.0;
    for (int d = 0; d <= config.poly_degree; ++d) {
      v += poly[d] * power;
      power *= t;
    }
    return v;
  };

  // Bracket extrema on a dense grid of the smooth fit, then refine each against the
  // raw samples with a local cubic so the polynomial's global fit error drops out.
  const int grid = 4001;
  std::vector<double> vals(grid);
  for (int i = 0; i < grid; ++i) vals[i] = poly_eval(-1.0 + 2.0 * i / (grid - 1));
  struct Candidate {
    double alpha;
    bool is_max;
  };
  std::vector<Candidate> found;
  for (int i = 1; i + 1 < grid; ++i) {
    const bool is_max = vals[i] > vals[i - 1] && vals[i] >= vals[i + 1];
    const bool is_min = vals[i] < vals[i - 1] && vals[i] <= vals[i + 1];
    if (!is_max && !is_min) continue;
    found.push_back({denormalize(-1.0 + 2.0 * i / (grid - 1)), is_max});
  }

  // Refine each extremum against the raw samples. The fringe is a chirped cosine in
  // alpha but an unchirped one in s = sqrt(1+alpha), so a local cubic in s has no
  // asymmetry bias; a quarter of the nearest-neighbor spacing keeps it local.
  for (std::size_t ci = 0; ci < found.size(); ++ci) {
    Candidate& c = found[ci];
    const double s_c = std::sqrt(1.0 + c.alpha);
    double nn = std::sqrt(1.0 + a_max) - std::sqrt(1.0 + a_min);
    for (std::size_t cj = 0; cj < found.size(); ++cj) {
      if (cj != ci) nn = std::min(nn, std::fabs(std::sqrt(1.0 + found[cj].alpha) - s_c));
    }
    double window = 0.25 * nn;
    std::vector<std::pair<double, double>> local;  // (s - s_c, value)
    auto gather = [&] {
      local.clear();
      for (const auto& p : pts) {
        const double ds = std::sqrt(1.0 + p.first) - s_c;
        if (std::fabs(ds) <= window) local.emplace_back(ds, p.second);
      }
    };
    gather();
    while (local.size() < 8 && window < 0.5 * nn) {
      window *= 1.4;
      gather();
    }
    if (local.size() < 6) continue;
    Eigen::MatrixXd dm(static_cast<Eigen::Index>(local.size()), 4);
    Eigen::VectorXd lr(static_cast<Eigen::Index>(local.size()));
    for (Eigen::Index i = 0; i < dm.rows(); ++i) {
      const double dx = local[i].first / window;
      dm(i, 0) = 1.0;
      dm(i, 1) = dx;
      dm(i, 2) = dx * dx;
      dm(i, 3) = dx * dx * dx;
      lr(i) = local[i].second;
    }
    const Eigen::VectorXd cub = dm.colPivHouseholderQr().solve(lr);
    // Stationary points of c1 x + c2 x^2 + c3 x^3.
    const double disc = cub[2] * cub[2] - 3.0 * cub[3] * cub[1];
    if (disc < 0.0) continue;
    double root;
    if (std::fabs(cub[3]) < 1e-12 * std::fabs(cub[2])) {
      root = -cub[1] / (2.0 * cub[2]);
    } else {
      const double r1 = (-cub[2] + std::sqrt(disc)) / (3.0 * cub[3]);
      const double r2 = (-cub[2] - std::sqrt(disc)) / (3.0 * cub[3]);
      root = std::fabs(r1) < std::fabs(r2) ? r1 : r2;
    }
    if (std::fabs(root) <= 1.0) {
      const double s_star = s_c + root * window;
      c.alpha = s_star * s_star - 1.0;
    }
  }

  if (found.size() < 4) throw DataError("fewer than 4 resolvable fringe extrema");
  for (std::size_t i = 1; i < found.size(); ++i) {
    if (found[i].is_max == found[i - 1].is_max) {
      throw DataError("non-monotone extrema sequence in the calibration fringe");
    }
  }

  // Successive extrema of the period-pi fringe are pi/2 apart in applied phase.
  CalibrationCurve curve;
  curve.alpha_min = a_min;
  curve.alpha_max = a_max;
  Eigen::MatrixXd dm(static_cast<Eigen::Index>(found.size()), 2);
  Eigen::VectorXd ph(static_cast<Eigen::Index>(found.size()));
  for (std::size_t i = 0; i < found.size(); ++i) {
    const double phase = double(i) * kPi / 2.0;
    curve.extrema.emplace_back(found[i].alpha, phase);
    dm(static_cast<Eigen::Index>(i), 0) = 1.0;
    dm(static_cast<Eigen::Index>(i), 1) = std::sqrt(1.0 + found[i].alpha);
    ph(static_cast<Eigen::Index>(i)) = phase;
  }
  const Eigen::VectorXd coeffs = dm.colPivHouseholderQr().solve(ph);
  curve.c0 = coeffs[0];
  curve.c1 = coeffs[1];
  if (!(curve.c1 > 0.0)) throw DataError("calibration curve is not strictly monotone");
  return curve;
}

double reduced_chi_squared(std::span<const double> observed, std::span<const double> expected,
                           int dof) {
  if (observed.size() != expected.size()) throw DataError("bin grids do not match");
  if (observed.empty()) throw DataError("no bins");
  if (dof < 1) throw DataError("dof must be >= 1");
  double chi2 = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) throw DataError("expected count must be positive in every bin");
    const double d = observed[i] - expected[i];
    chi2 += d * d / expected[i];
  }
  return chi2 / double(dof);
}

double circular_mean(std::span<const double> angles) {
  if (angles.empty()) throw DataError("no angles");
  std::complex<double> acc{0.0, 0.0};
  for (double a : angles) acc += std::polar(1.0, a);
  return wrap_phase(std::arg(acc));
}

double circular_std(std::span<const double> angles) {
  if (angles.empty()) throw DataError("no angles");
  std::complex<double> acc{0.0, 0.0};
  for (double a : angles) acc += std::polar(1.0, a);
  const double r = std::min(std::abs(acc) / double(angles.size()), 1.0);
  return std::sqrt(-2.0 * std::log(std::max(r, 1e-12)));
}

std::vector<TrialStatistics> precision_sweep(const ThermalModeParams& truth,
                                             const PhaseSchedule& schedule,
                                             const SweepConfig& config) {
  schedule.validate();
  if (config.sizes.empty()) throw DataError("sweep needs at least one dataset size");
  if (config.n_trials < 2) throw DataError("sweep needs at least 2 trials");
  if (config.schemes.empty()) throw DataError("sweep needs at least one scheme");

  const std::size_t max_size = *std::max_element(config.sizes.begin(), config.sizes.end());
  const std::size_t base_events = max_size * static_cast<std::size_t>(config.n_trials);

  const Dataset count_base =
      sample_events(truth, schedule, base_events, derive_seed(config.seed, 1));
  std::optional<Dataset> click_base;
  std::optional<Dataset> traditional_base;
  for (Scheme s : config.schemes) {
    if (s == Scheme::Click && !click_base) click_base = degrade_to_click(count_base);
    if (s == Scheme::Traditional && !traditional_base) {
      int pidx = config.traditional_phase_index;
      if (pidx < 0) {
        // Default to the schedule phase nearest phi + pi/4, where the fringe is
        // sensitive to both parameters.
        const double target = wrap_phase(truth.cdc().phase() + kPi / 4.0);
        pidx = 0;
        for (std::size_t i = 1; i < schedule.phases.size(); ++i) {
          if (circular_distance(schedule.phases[i], target) <
              circular_distance(schedule.phases[static_cast<std::size_t>(pidx)], target)) {
            pidx = static_cast<int>(i);
          }
        }
      } else if (static_cast<std::size_t>(pidx) >= schedule.phases.size()) {
        throw DataError("traditional phase index out of schedule bounds");
      }
      PhaseSchedule single;
      single.phases = {schedule.phases[static_cast<std::size_t>(pidx)]};
      Dataset ds = sample_events(truth, single, base_events, derive_seed(config.seed, 2));
      ds.scheme = Scheme::Traditional;
      ds.traditional_phase_index = 0;
      traditional_base = std::move(ds);
    }
  }

  std::vector<TrialStatistics> out;
  std::uint64_t partition_stream = 1000;
  for (Scheme s : config.schemes) {
    const Dataset& base = s == Scheme::Count ? count_base
                          : s == Scheme::Click ? *click_base
                                               : *traditional_base;
    for (std::size_t size : config.sizes) {
      const auto samples = disjoint_samples(base, size, config.n_trials,
                                            derive_seed(config.seed, partition_stream++));
      std::vector<double> gammas(samples.size()), phis(samples.size());
      auto run_trial = [&](std::size_t t) {
        const EstimateResult r = mle_estimate(samples[t], config.mle);
        gammas[t] = r.cdc_estimate.magnitude();
        phis[t] = r.cdc_estimate.phase();
      };
      const int threads = std::max(config.threads, 1);
      if (threads == 1 || samples.size() < 2) {
        for (std::size_t t = 0; t < samples.size(); ++t) run_trial(t);
      } else {
        // Trials are pure and write disjoint slots, so any thread count gives
        // results identical to the sequential loop.
        std::vector<std::future<void>> futures;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < threads; ++w) {
          futures.push_back(std::async(std::launch::async, [&] {
            for (std::size_t t = next.fetch_add(1); t < samples.size(); t = next.fetch_add(1)) {
              run_trial(t);
            }
          }));
        }
        for (auto& f : futures) f.get();
      }

      TrialStatistics stats;
      stats.scheme = s;
      stats.dataset_size = size;
      stats.n_trials = config.n_trials;
      stats.gamma_mean = std::accumulate(gammas.begin(), gammas.end(), 0.0) / double(gammas.size());
      stats.gamma_std = sample_std(gammas, stats.gamma_mean);
      stats.phi_mean = circular_mean(phis);
      stats.phi_std = circular_std(phis);
      out.push_back(stats);
    }
  }
  return out;
}

}  // namespace cdc
