#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cdc/simulator.hpp"

namespace cdc {

struct EstimateResult {
  ComplexCoherence cdc_estimate{0.0, 0.0};
  double nbar_estimate = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  Scheme scheme = Scheme::Count;
  /// Set when |gamma| is estimated so small that the phase is unidentifiable.
  bool phase_degenerate = false;
  /// Set for the single-phase (Traditional) regime where |gamma| and phi are only
  /// weakly jointly constrained.
  bool weak_identifiability = false;
};

struct MleOptions {
  /// Count/Traditional default: nbar by method of moments, held fixed. When true,
  /// nbar joins the search (always the case for Click data).
  bool fit_nbar_jointly = false;
  int gamma_grid_points = 21;
  int phi_grid_points = 36;
  double convergence_tol = 1e-5;
  int max_iterations = 500;
  double phase_degeneracy_threshold = 0.02;
};

/// Sum over events of ln P(outcome | candidate, phi_a), with probabilities floored
/// at 1e-300. Uses the photon-number model for Count/Traditional data and the click
/// bins for Click data.
double log_likelihood(const Dataset& dataset, const ThermalModeParams& candidate);

/// Coarse (gamma, phi) grid search followed by Nelder-Mead refinement, gamma clamped
/// to [0,1] and phi treated periodically.
EstimateResult mle_estimate(const Dataset& dataset, const MleOptions& options = {});

/// Fringe-contrast estimate of |gamma| from the [0,1] and [1,0] one-click fringes:
/// each fringe is smoothed with a truncated trigonometric fit, the contrast
/// (I_max - I_min)/(I_max + I_min) evaluated on the fit, and the two values averaged
/// (the two fringes are antiphase, so averaging the raw curves would cancel them).
double visibility_estimate(std::span<const double> phases, std::span<const double> fringe01,
                           std::span<const double> fringe10);

struct FringeSamples {
  CoincidenceOutcome outcome;
  std::vector<double> frequencies;  // one per schedule phase
};

struct PhaseEstimate {
  double phase = 0.0;
  /// True when only equal-count fringes (period pi) were available.
  bool pi_ambiguous = false;
};

/// Locate the extrema of each fringe via a periodic fit and average the applied
/// phases at which they occur, folded by each fringe's period.
PhaseEstimate fringe_phase_estimate(const std::vector<FringeSamples>& fringes,
                                    const PhaseSchedule& schedule);

/// Map from optical-flat rotation position alpha to applied phase, fitted as
/// phi_a = c0 + c1 sqrt(1 + alpha) through the fringe extrema.
struct CalibrationCurve {
  double c0 = 0.0;
  double c1 = 0.0;
  std::vector<std::pair<double, double>> extrema;  // (alpha, assigned phase)
  double alpha_min = 0.0;
  double alpha_max = 0.0;

  double phase_at(double alpha) const;
};

struct CalibrationConfig {
  int poly_degree = 8;
};

CalibrationCurve fit_phase_calibration(std::span<const std::pair<double, double>> samples,
                                       const CalibrationConfig& config = {});

/// Sum of (obs - exp)^2 / exp over bins, divided by dof.
double reduced_chi_squared(std::span<const double> observed, std::span<const double> expected,
                           int dof);

struct TrialStatistics {
  Scheme scheme = Scheme::Count;
  std::size_t dataset_size = 0;
  int n_trials = 0;
  double gamma_mean = 0.0;
  double gamma_std = 0.0;
  double phi_mean = 0.0;  // circular mean
  double phi_std = 0.0;   // circular std
};

struct SweepConfig {
  std::vector<std::size_t> sizes;
  int n_trials = 20;
  std::vector<Scheme> schemes;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Schedule index used for the Traditional scheme; -1 picks the phase nearest
  /// truth phi + pi/4 (sensitivity to both parameters).
  int traditional_phase_index = -1;
  MleOptions mle;
};

/// Trial-ensemble statistics per (scheme, size), reproducing the disjoint-sample
/// trial protocol. Results are independent of the thread count.
std::vector<TrialStatistics> precision_sweep(const ThermalModeParams& truth,
                                             const PhaseSchedule& schedule,
                                             const SweepConfig& config);

/// Circular helpers shared by the sweep statistics and its consumers.
double circular_mean(std::span<const double> angles);
double circular_std(std::span<const double> angles);

}  // namespace cdc
