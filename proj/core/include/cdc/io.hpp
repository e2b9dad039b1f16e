#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cdc/estimation.hpp"
#include "cdc/imaging.hpp"
#include "cdc/simulator.hpp"

namespace cdc {

/// Event files are JSON lines: a metadata header line (schema version, scheme,
/// seed, rng, schedule, optional truth) followed by one event object per line.
inline constexpr const char* kEventSchemaVersion = "cdc-events-1";
inline constexpr const char* kSceneSchemaVersion = "cdc-scene-1";

void write_event_file(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_event_file(const std::filesystem::path& path);

/// Plain-grid CSV plus a ".meta.json" sidecar holding the grid geometry.
void write_scene_csv(const std::filesystem::path& path, const SourceScene& scene);
SourceScene read_scene_csv(const std::filesystem::path& path);

/// Binary PGM, P5, 16-bit big-endian samples, maxval 65535, intensities scaled so
/// the brightest pixel maps to 65535.
void write_pgm16(const std::filesystem::path& path, const SourceScene& scene);

struct PgmImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint16_t> samples;  // row-major
};
PgmImage read_pgm16(const std::filesystem::path& path);

/// CSV of (bx_index, by_index, magnitude, phase) over the full baseline lattice.
void write_coherence_map_csv(const std::filesystem::path& path, const CoherenceMap& map);
CoherenceMap read_coherence_map_csv(const std::filesystem::path& path);

/// CSV with header scheme,size,n_trials,gamma_mean,gamma_std,phi_mean,phi_std.
void write_sweep_csv(const std::filesystem::path& path, std::span<const TrialStatistics> stats);

}  // namespace cdc
