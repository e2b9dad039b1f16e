#pragma once

#include <array>
#include <span>
#include <vector>

#include "cdc/coherence.hpp"

namespace cdc {

/// Two-mode pseudo-thermal light: mean photon number per input mode plus the CDC.
/// The uncorrelated thermal eigenmodes have occupations z1 = nbar(1-|gamma|) and
/// z2 = nbar(1+|gamma|).
class ThermalModeParams {
 public:
  ThermalModeParams(double mean_photon_number, ComplexCoherence cdc);

  double mean_photon_number() const { return nbar_; }
  const ComplexCoherence& cdc() const { return cdc_; }
  double z1() const { return nbar_ * (1.0 - cdc_.magnitude()); }
  double z2() const { return nbar_ * (1.0 + cdc_.magnitude()); }

 private:
  double nbar_;
  ComplexCoherence cdc_;
};

/// Photon-number outcome: x photons at detector D1, y at D2.
struct CoincidenceOutcome {
  int x = 0;
  int y = 0;
};

/// Threshold-detector outcome: one-or-more photons at each detector or not.
struct ClickPattern {
  bool d1 = false;
  bool d2 = false;
};

/// Product of the two geometric eigenmode distributions,
/// p_in(n1, n2) = z1^n1 / (1+z1)^{n1+1} * z2^n2 / (1+z2)^{n2+1}, with 0^0 = 1.
double eigenmode_occupation_prob(int n1, int n2, const ThermalModeParams& params);

/// Exact coincidence probability P(x, y) after the 50:50 interference, as a
/// function of the net interferometer phase theta = phi_a - phi. Direct factorial
/// arithmetic below x+y = 20, log-domain evaluation above.
double coincidence_prob(CoincidenceOutcome outcome, const ThermalModeParams& params,
                        double net_phase);

/// Truncated outcome distribution over x+y <= cutoff. The cutoff is grown until the
/// residual mass of the total-photon-number distribution drops below tail_tolerance.
class OutcomeTable {
 public:
  int cutoff() const { return cutoff_; }
  double tail_mass() const { return tail_mass_; }

  double prob(int x, int y) const;
  double mean_total_photons() const;

  struct Entry {
    CoincidenceOutcome outcome;
    double probability;
  };
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  friend OutcomeTable make_outcome_table(const ThermalModeParams&, double, double, int);
  int cutoff_ = 0;
  double tail_mass_ = 0.0;
  std::vector<Entry> entries_;
};

OutcomeTable make_outcome_table(const ThermalModeParams& params, double net_phase,
                                double tail_tolerance, int hard_cap = 200);

/// Click-pattern probabilities from the thermal marginals:
/// P(no photon at a detector) = 1/(1 + mu) with mu the detector-mode mean, and
/// P(joint vacuum) = 1/((1+z1)(1+z2)). Closed form, no truncation.
double click_prob(ClickPattern pattern, const ThermalModeParams& params, double net_phase);

/// All four click bins at once, ordered [00, 0c, c0, cc].
std::array<double, 4> click_bin_probs(const ThermalModeParams& params, double net_phase);

/// Coincidence probability per applied phase; the net phase per point is
/// phi_a - params.cdc().phase().
std::vector<double> fringe_curve(CoincidenceOutcome outcome, const ThermalModeParams& params,
                                 std::span<const double> applied_phases);

/// Same for a click pattern.
std::vector<double> click_fringe_curve(ClickPattern pattern, const ThermalModeParams& params,
                                       std::span<const double> applied_phases);

}  // namespace cdc
