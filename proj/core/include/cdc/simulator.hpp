#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdc/photon_stats.hpp"

namespace cdc {

enum class Scheme { Count, Click, Traditional };

std::string scheme_name(Scheme scheme);
Scheme scheme_from_name(const std::string& name);

/// Applied-phase schedule. The experimental default is 35 equally spaced phases
/// over [0, 2pi).
struct PhaseSchedule {
  enum class Mode { UniformGrid, Random };

  std::vector<double> phases;
  Mode mode = Mode::UniformGrid;

  static PhaseSchedule uniform_grid(int count = 35);
  void validate() const;
};

struct SchemeConfig {
  Scheme scheme = Scheme::Count;
  std::optional<double> fixed_phase;  // Traditional only

  void validate() const;
};

/// How events are distributed over the schedule during simulation.
enum class PhaseAssignment { UniformRandom, RoundRobin };

/// One detection event; outcome is photon numbers for Count/Traditional and a
/// {0,1}^2 pattern for Click.
struct EventRecord {
  std::int32_t phase_index = 0;
  std::int32_t x = 0;
  std::int32_t y = 0;
};

struct Dataset {
  Scheme scheme = Scheme::Count;
  PhaseSchedule schedule;
  std::uint64_t seed = 0;
  std::string rng_id;
  std::optional<ThermalModeParams> truth;
  std::optional<int> traditional_phase_index;
  std::vector<EventRecord> events;

  std::size_t size() const { return events.size(); }
};

struct SimulationOptions {
  PhaseAssignment assignment = PhaseAssignment::UniformRandom;
  double table_tail_tolerance = 1e-10;
  /// Optional linear phase drift in radians per event, for robustness studies.
  double phase_drift_per_event = 0.0;
};

/// Draw n_events i.i.d. coincidence events; bitwise reproducible per
/// (truth, schedule, n_events, seed).
Dataset sample_events(const ThermalModeParams& truth, const PhaseSchedule& schedule,
                      std::size_t n_events, std::uint64_t seed,
                      const SimulationOptions& options = {});

/// Count dataset -> Click dataset: x -> min(x, 1) per detector. Idempotent.
Dataset degrade_to_click(const Dataset& dataset);

/// Sub-dataset of the events at one schedule phase, re-tagged Traditional.
Dataset restrict_to_phase(const Dataset& dataset, int phase_index);

/// Seeded shuffle and partition into n_trials disjoint samples of sample_size.
std::vector<Dataset> disjoint_samples(const Dataset& dataset, std::size_t sample_size,
                                      std::size_t n_trials, std::uint64_t seed);

}  // namespace cdc
