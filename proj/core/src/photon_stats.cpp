#include "cdc/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "cdc/errors.hpp"

namespace cdc {

namespace {

constexpr int kDirectLimit = 20;   // direct factorials up to x+y = 20
constexpr int kMaxFactorial = 512;

const double* ln_factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kMaxFactorial + 1, 0.0);
    for (int n = 1; n <= kMaxFactorial; ++n) t[n] = t[n - 1] + std::log(static_cast<double>(n));
    return t;
  }();
  return table.data();
}

double ln_factorial(int n) { return ln_factorial_table()[n]; }

double factorial(int n) { return std::exp(ln_factorial(n)); }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k));
}

double ln_geometric(int n, double z) {
  // log of z^n / (1+z)^{n+1}; -inf encodes a zero probability.
  if (z == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return n * std::log(z) - (n + 1) * std::log1p(z);
}

/// ln p_in(n1, n2); -inf when the probability is exactly zero.
double ln_occupation(int n1, int n2, const ThermalModeParams& p) {
  return ln_geometric(n1, p.z1()) + ln_geometric(n2, p.z2());
}

/// |sum over j|^2 for one eigenmode split (n1, n2) -> (x, y), evaluated with
/// the interference amplitudes A = (1+e^{i theta})/2 and B = (e^{i theta}-1)/2.
double bracket_squared(int x, int y, int n1, int n2, std::complex<double> a,
                       std::complex<double> b) {
  const double abs_a = std::abs(a), abs_b = std::abs(b);
  const double arg_a = std::arg(a), arg_b = std::arg(b);
  const int j_lo = std::max(0, x - n1);
  const int j_hi = std::min(n2, x);
  if (j_lo > j_hi) return 0.0;

  // Scaled accumulation in the log domain; magnitudes can span many decades
  // once binomials get large.
  double max_ln = -std::numeric_limits<double>::infinity();
  struct Term {
    double ln_mag;
    double phase;
  };
  std::vector<Term> terms;
  terms.reserve(j_hi - j_lo + 1);
  for (int j = j_lo; j <= j_hi; ++j) {
    const int pa = n1 - x + 2 * j;  // power of A
    const int pb = n2 + x - 2 * j;  // power of B
    if ((abs_a == 0.0 && pa > 0) || (abs_b == 0.0 && pb > 0)) continue;
    double ln_mag = ln_factorial(n2) - ln_factorial(j) - ln_factorial(n2 - j) +
                    ln_factorial(n1) - ln_factorial(x - j) - ln_factorial(n1 - x + j);
    if (pa > 0) ln_mag += pa * std::log(abs_a);
    if (pb > 0) ln_mag += pb * std::log(abs_b);
    const double phase = pa * arg_a + pb * arg_b;
    terms.push_back({ln_mag, phase});
    max_ln = std::max(max_ln, ln_mag);
  }
  if (terms.empty()) return 0.0;

  std::complex<double> sum(0.0, 0.0);
  for (const Term& t : terms) {
    sum += std::polar(std::exp(t.ln_mag - max_ln), t.phase);
  }
  const double mag = std::abs(sum);
  if (mag == 0.0) return 0.0;
  return std::exp(2.0 * (max_ln + std::log(mag)));
}

}  // namespace

ThermalModeParams::ThermalModeParams(double mean_photon_number, ComplexCoherence cdc)
    : nbar_(mean_photon_number), cdc_(cdc) {
  if (!(nbar_ >= 0.0) || !std::isfinite(nbar_)) {
    throw DataError("mean photon number must be finite and >= 0");
  }
}

double eigenmode_occupation_prob(int n1, int n2, const ThermalModeParams& params) {
  if (n1 < 0 || n2 < 0) throw DataError("occupation numbers must be >= 0");
  const double ln = ln_occupation(n1, n2, params);
  return std::isinf(ln) ? 0.0 : std::exp(ln);
}

double coincidence_prob(CoincidenceOutcome outcome, const ThermalModeParams& params,
                        double net_phase) {
  const int x = outcome.x, y = outcome.y;
  if (x < 0 || y < 0) throw DataError("photon counts must be >= 0");
  const int total = x + y;
  if (total > kMaxFactorial / 2) throw NumericalError("outcome total exceeds supported range");

  const std::complex<double> phase_factor = std::polar(1.0, net_phase);
  const std::complex<double> a = 0.5 * (1.0 + phase_factor);
  const std::complex<double> b = 0.5 * (phase_factor - 1.0);

  double prob = 0.0;
  if (total <= kDirectLimit) {
    const double xy_fact = factorial(x) * factorial(y);
    for (int n1 = 0; n1 <= total; ++n1) {
      const int n2 = total - n1;
      const double p_in = eigenmode_occupation_prob(n1, n2, params);
      if (p_in == 0.0) continue;
      const double br = bracket_squared(x, y, n1, n2, a, b);
      if (br == 0.0) continue;
      prob += p_in * xy_fact / (factorial(n1) * factorial(n2)) * br;
    }
  } else {
    const double ln_xy = ln_factorial(x) + ln_factorial(y);
    for (int n1 = 0; n1 <= total; ++n1) {
      const int n2 = total - n1;
      const double ln_p = ln_occupation(n1, n2, params);
      if (std::isinf(ln_p)) continue;
      const double br = bracket_squared(x, y, n1, n2, a, b);
      if (br == 0.0) continue;
      prob += std::exp(ln_p + ln_xy - ln_factorial(n1) - ln_factorial(n2) + std::log(br));
    }
  }

  if (prob < 0.0) {
    if (prob < -1e-12) {
      throw NumericalError("negative coincidence probability: " + std::to_string(prob));
    }
    prob = 0.0;
  }
  return std::min(prob, 1.0);
}

double OutcomeTable::prob(int x, int y) const {
  const int t = x + y;
  if (x < 0 || y < 0 || t > cutoff_) return 0.0;
  return entries_[static_cast<std::size_t>(t) * (t + 1) / 2 + x].probability;
}

double OutcomeTable::mean_total_photons() const {
  double mean = 0.0;
  for (const Entry& e : entries_) mean += (e.outcome.x + e.outcome.y) * e.probability;
  return mean;
}

OutcomeTable make_outcome_table(const ThermalModeParams& params, double net_phase,
                                double tail_tolerance, int hard_cap) {
  if (!(tail_tolerance > 0.0 && tail_tolerance <= 1e-3)) {
    throw DataError("tail tolerance must lie in (0, 1e-3]");
  }

  // Total photon number is conserved through the interferometer, so the tail mass
  // beyond cutoff N is exactly the tail of the eigenmode total-occupation law.
  double cumulative = 0.0;
  int cutoff = -1;
  for (int t = 0; t <= hard_cap; ++t) {
    double pt = 0.0;
    for (int n1 = 0; n1 <= t; ++n1) pt += eigenmode_occupation_prob(n1, t - n1, params);
    cumulative += pt;
    if (1.0 - cumulative < tail_tolerance) {
      cutoff = t;
      break;
    }
  }
  if (cutoff < 0) {
    throw NumericalError("outcome table cutoff exceeded hard cap " + std::to_string(hard_cap));
  }

  OutcomeTable table;
  table.cutoff_ = cutoff;
  table.entries_.reserve(static_cast<std::size_t>(cutoff + 1) * (cutoff + 2) / 2);
  double sum = 0.0;
  for (int t = 0; t <= cutoff; ++t) {
    for (int x = 0; x <= t; ++x) {
      const double p = coincidence_prob({x, t - x}, params, net_phase);
      table.entries_.push_back({{x, t - x}, p});
      sum += p;
    }
  }
  table.tail_mass_ = std::max(0.0, 1.0 - sum);
  return table;
}

std::array<double, 4> click_bin_probs(const ThermalModeParams& params, double net_phase) {
  const double nbar = params.mean_photon_number();
  const double g = params.cdc().magnitude();
  const double c = std::cos(net_phase);
  const double mu1 = nbar * (1.0 + g * c);  // detector D1 marginal mean
  const double mu2 = nbar * (1.0 - g * c);
  const double p_vac1 = 1.0 / (1.0 + mu1);
  const double p_vac2 = 1.0 / (1.0 + mu2);
  const double p_vac = 1.0 / ((1.0 + params.z1()) * (1.0 + params.z2()));
  return {p_vac, std::max(0.0, p_vac1 - p_vac), std::max(0.0, p_vac2 - p_vac),
          std::max(0.0, 1.0 - p_vac1 - p_vac2 + p_vac)};
}

double click_prob(ClickPattern pattern, const ThermalModeParams& params, double net_phase) {
  const auto bins = click_bin_probs(params, net_phase);
  return bins[(pattern.d1 ? 2 : 0) + (pattern.d2 ? 1 : 0)];
}

std::vector<double> fringe_curve(CoincidenceOutcome outcome, const ThermalModeParams& params,
                                 std::span<const double> applied_phases) {
  if (applied_phases.empty()) throw DataError("phase grid must be non-empty");
  std::vector<double> curve;
  curve.reserve(applied_phases.size());
  for (double phi_a : applied_phases) {
    curve.push_back(coincidence_prob(outcome, params, phi_a - params.cdc().phase()));
  }
  return curve;
}

std::vector<double> click_fringe_curve(ClickPattern pattern, const ThermalModeParams& params,
                                       std::span<const double> applied_phases) {
  if (applied_phases.empty()) throw DataError("phase grid must be non-empty");
  std::vector<double> curve;
  curve.reserve(applied_phases.size());
  for (double phi_a : applied_phases) {
    curve.push_back(click_prob(pattern, params, phi_a - params.cdc().phase()));
  }
  return curve;
}

}  // namespace cdc
