#pragma once

#include <vector>

#include <Eigen/Dense>

namespace cdc::test {

/// Independent reference for the coincidence distribution: prepares the two-point
/// thermal field as a diagonal mixture over the coherence-matrix eigenmodes, lifts
/// the full mode transformation (eigenbasis rotation, applied phase, 50:50 splitter)
/// to each fixed-total-photon Fock block by exponentiating the quadratic generator,
/// and reads number-basis probabilities. Shares no code path with coincidence_prob.
class FockOracle {
 public:
  FockOracle(double gamma_magnitude, double gamma_phase, double nbar, double applied_phase,
             int max_total_photons);

  /// P(x photons at D1, y at D2). Exact for x + y <= max_total_photons.
  double prob(int x, int y) const;

 private:
  double z1_, z2_;
  int max_total_;
  // blocks_[t](row = photons at D1, col = photons in the z2 eigenmode)
  std::vector<Eigen::MatrixXcd> blocks_;
};

}  // namespace cdc::test
