#include "cdc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdc/errors.hpp"
#include "cdc/rng.hpp"

namespace cdc {

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::Count: return "count";
    case Scheme::Click: return "click";
    case Scheme::Traditional: return "traditional";
  }
  return "unknown";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "count") return Scheme::Count;
  if (name == "click") return Scheme::Click;
  if (name == "traditional") return Scheme::Traditional;
  throw DataError("unknown scheme: " + name);
}

PhaseSchedule PhaseSchedule::uniform_grid(int count) {
  if (count < 1) throw DataError("schedule needs at least one phase");
  PhaseSchedule s;
  s.mode = Mode::UniformGrid;
  s.phases.reserve(count);
  for (int i = 0; i < count; ++i) s.phases.push_back(i * kTwoPi / count);
  return s;
}

void PhaseSchedule::validate() const {
  if (phases.empty()) throw DataError("phase schedule must be non-empty");
  for (double p : phases) {
    if (!(p >= 0.0 && p < kTwoPi)) throw DataError("schedule phases must lie in [0, 2pi)");
  }
}

void SchemeConfig::validate() const {
  if ((scheme == Scheme::Traditional) != fixed_phase.has_value()) {
    throw DataError("fixed_phase must be present exactly for the Traditional scheme");
  }
}

namespace {

/// Cumulative distribution over a table's outcomes, renormalized for sampling only.
struct SamplingCdf {
  std::vector<double> cumulative;
  const OutcomeTable* table;

  explicit SamplingCdf(const OutcomeTable& t) : table(&t) {
    cumulative.reserve(t.entries().size());
    double acc = 0.0;
    for (const auto& e : t.entries()) {
      acc += e.probability;
      cumulative.push_back(acc);
    }
    const double total = acc;
    for (double& c : cumulative) c /= total;
    cumulative.back() = 1.0;
  }

  CoincidenceOutcome draw(double u) const {
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
    return table->entries()[std::min(idx, cumulative.size() - 1)].outcome;
  }
};

}  // namespace

Dataset sample_events(const ThermalModeParams& truth, const PhaseSchedule& schedule,
                      std::size_t n_events, std::uint64_t seed,
                      const SimulationOptions& options) {
  schedule.validate();
  if (n_events < 1) throw DataError("n_events must be >= 1");

  Dataset out;
  out.scheme = Scheme::Count;
  out.schedule = schedule;
  out.seed = seed;
  out.rng_id = SplitMix64::kId;
  out.truth = truth;
  out.events.reserve(n_events);

  const double phi = truth.cdc().phase();
  const bool drifting = options.phase_drift_per_event != 0.0;

  std::vector<OutcomeTable> tables;
  std::vector<SamplingCdf> cdfs;
  if (!drifting) {
    tables.reserve(schedule.phases.size());
    for (double phi_a : schedule.phases) {
      tables.push_back(make_outcome_table(truth, phi_a - phi, options.table_tail_tolerance));
    }
    cdfs.reserve(tables.size());
    for (const auto& t : tables) cdfs.emplace_back(t);
  }

  SplitMix64 rng(seed);
  const std::size_t n_phases = schedule.phases.size();
  for (std::size_t i = 0; i < n_events; ++i) {
    std::size_t pidx;
    if (options.assignment == PhaseAssignment::RoundRobin) {
      pidx = i % n_phases;
    } else {
      pidx = static_cast<std::size_t>(rng.next_below(n_phases));
    }
    const double u = rng.next_double();
    CoincidenceOutcome outcome;
    if (drifting) {
      const double theta =
          schedule.phases[pidx] - phi + options.phase_drift_per_event * static_cast<double>(i);
      const OutcomeTable table = make_outcome_table(truth, theta, options.table_tail_tolerance);
      outcome = SamplingCdf(table).draw(u);
    } else {
      outcome = cdfs[pidx].draw(u);
    }
    out.events.push_back({static_cast<std::int32_t>(pidx), outcome.x, outcome.y});
  }
  return out;
}

Dataset degrade_to_click(const Dataset& dataset) {
  Dataset out = dataset;
  out.scheme = Scheme::Click;
  for (EventRecord& e : out.events) {
    e.x = std::min<std::int32_t>(e.x, 1);
    e.y = std::min<std::int32_t>(e.y, 1);
  }
  return out;
}

Dataset restrict_to_phase(const Dataset& dataset, int phase_index) {
  if (phase_index < 0 || static_cast<std::size_t>(phase_index) >= dataset.schedule.phases.size()) {
    throw DataError("phase index out of schedule bounds");
  }
  Dataset out;
  out.scheme = Scheme::Traditional;
  out.schedule = dataset.schedule;
  out.seed = dataset.seed;
  out.rng_id = dataset.rng_id;
  out.truth = dataset.truth;
  out.traditional_phase_index = phase_index;
  for (const EventRecord& e : dataset.events) {
    if (e.phase_index == phase_index) out.events.push_back(e);
  }
  return out;
}

std::vector<Dataset> disjoint_samples(const Dataset& dataset, std::size_t sample_size,
                                      std::size_t n_trials, std::uint64_t seed) {
  if (sample_size < 1 || n_trials < 1) throw DataError("sample size and trials must be >= 1");
  if (sample_size * n_trials > dataset.size()) {
    throw DataError("insufficient data: need " + std::to_string(sample_size * n_trials) +
                    " events, have " + std::to_string(dataset.size()));
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(order[i], order[j]);
  }

  std::vector<Dataset> out;
  out.reserve(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t) {
    Dataset sample;
    sample.scheme = dataset.scheme;
    sample.schedule = dataset.schedule;
    sample.seed = seed;
    sample.rng_id = dataset.rng_id;
    sample.truth = dataset.truth;
    sample.traditional_phase_index = dataset.traditional_phase_index;
    sample.events.reserve(sample_size);
    for (std::size_t i = 0; i < sample_size; ++i) {
      sample.events.push_back(dataset.events[order[t * sample_size + i]]);
    }
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace cdc
