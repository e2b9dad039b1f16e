#include "cdc/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "cdc/errors.hpp"

namespace cdc {

namespace {

using nlohmann::json;

/// Shortest round-trippable decimal representation.
std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shorter form when it round-trips exactly.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[32];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open for reading: " + path.string());
  return in;
}

json parse_json(const std::string& text, const std::string& context) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed JSON in " + context);
  return j;
}

}  // namespace

void write_event_file(const std::filesystem::path& path, const Dataset& dataset) {
  auto out = open_out(path);
  json header{{"schema", kEventSchemaVersion},
              {"scheme", scheme_name(dataset.scheme)},
              {"seed", dataset.seed},
              {"rng", dataset.rng_id},
              {"phases", dataset.schedule.phases},
              {"n_events", dataset.events.size()}};
  if (dataset.truth) {
    header["truth"] = {{"gamma", dataset.truth->cdc().magnitude()},
                       {"phi", dataset.truth->cdc().phase()},
                       {"nbar", dataset.truth->mean_photon_number()}};
  }
  if (dataset.traditional_phase_index) {
    header["phase_index"] = *dataset.traditional_phase_index;
  }
  out << header.dump() << '\n';
  for (const EventRecord& e : dataset.events) {
    out << "{\"p\":" << e.phase_index << ",\"x\":" << e.x << ",\"y\":" << e.y << "}\n";
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Dataset read_event_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty event file: " + path.string());
  const json header = parse_json(line, "event file header");
  if (header.value("schema", "") != kEventSchemaVersion) {
    throw DataError("unsupported event file schema in " + path.string());
  }

  Dataset ds;
  ds.scheme = scheme_from_name(header.at("scheme").get<std::string>());
  ds.seed = header.value("seed", std::uint64_t{0});
  ds.rng_id = header.value("rng", "");
  ds.schedule.phases = header.at("phases").get<std::vector<double>>();
  ds.schedule.validate();
  if (header.contains("truth")) {
    const auto& t = header["truth"];
    ds.truth = ThermalModeParams(
        t.at("nbar").get<double>(),
        ComplexCoherence(t.at("gamma").get<double>(), t.at("phi").get<double>()));
  }
  if (header.contains("phase_index")) ds.traditional_phase_index = header["phase_index"].get<int>();

  const auto declared = header.at("n_events").get<std::size_t>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json e = parse_json(line, "event record");
    ds.events.push_back({e.at("p").get<std::int32_t>(), e.at("x").get<std::int32_t>(),
                         e.at("y").get<std::int32_t>()});
  }
  if (ds.events.size() != declared) {
    throw DataError("event count mismatch in " + path.string() + ": header says " +
                    std::to_string(declared) + ", found " + std::to_string(ds.events.size()));
  }
  return ds;
}

void write_scene_csv(const std::filesystem::path& path, const SourceScene& scene) {
  auto out = open_out(path);
  for (int r = 0; r < scene.rows(); ++r) {
    for (int c = 0; c < scene.cols(); ++c) {
      if (c) out << ',';
      out << fmt_double(scene.at(r, c));
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());

  json meta{{"schema", kSceneSchemaVersion},
            {"rows", scene.rows()},
            {"cols", scene.cols()},
            {"pixel_pitch", scene.pixel_pitch()},
            {"center_offset", scene.center_offset()}};
  auto side = open_out(path.string() + ".meta.json");
  side << meta.dump(2) << '\n';
}

SourceScene read_scene_csv(const std::filesystem::path& path) {
  auto meta_in = open_in(path.string() + ".meta.json");
  const json meta = parse_json(std::string(std::istreambuf_iterator<char>(meta_in),
                                           std::istreambuf_iterator<char>()),
                               "scene metadata");
  if (meta.value("schema", "") != kSceneSchemaVersion) {
    throw DataError("unsupported scene schema for " + path.string());
  }
  const int rows = meta.at("rows").get<int>();
  const int cols = meta.at("cols").get<int>();

  auto in = open_in(path);
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(rows) * cols);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) grid.push_back(std::stod(cell));
  }
  if (grid.size() != static_cast<std::size_t>(rows) * cols) {
    throw DataError("scene grid size does not match metadata for " + path.string());
  }
  const auto offset = meta.at("center_offset").get<std::array<double, 2>>();
  return SourceScene(std::move(grid), rows, cols, meta.at("pixel_pitch").get<double>(), offset);
}

void write_pgm16(const std::filesystem::path& path, const SourceScene& scene) {
  auto out = open_out(path, std::ios::binary);
  out << "P5\n" << scene.cols() << ' ' << scene.rows() << "\n65535\n";
  double peak = 0.0;
  for (double v : scene.intensity()) peak = std::max(peak, v);
  for (double v : scene.intensity()) {
    const auto s = static_cast<std::uint16_t>(std::lround(v / peak * 65535.0));
    const unsigned char bytes[2] = {static_cast<unsigned char>(s >> 8),
                                    static_cast<unsigned char>(s & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
  }
  if (!out) throw DataError("write failed: " + path.string());
}

PgmImage read_pgm16(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::string magic;
  int cols = 0, rows = 0, maxval = 0;
  in >> magic >> cols >> rows >> maxval;
  if (magic != "P5" || cols < 1 || rows < 1 || maxval != 65535) {
    throw DataError("not a 16-bit P5 PGM: " + path.string());
  }
  in.get();  // single whitespace byte after the header
  PgmImage img;
  img.rows = rows;
  img.cols = cols;
  img.samples.resize(static_cast<std::size_t>(rows) * cols);
  for (auto& s : img.samples) {
    unsigned char bytes[2];
    in.read(reinterpret_cast<char*>(bytes), 2);
    s = static_cast<std::uint16_t>((bytes[0] << 8) | bytes[1]);
  }
  if (!in) throw DataError("truncated PGM: " + path.string());
  return img;
}

void write_coherence_map_csv(const std::filesystem::path& path, const CoherenceMap& map) {
  auto out = open_out(path);
  out << "bx_index,by_index,magnitude,phase\n";
  const int m = map.array_size() - 1;
  for (int by = -m; by <= m; ++by) {
    for (int bx = -m; bx <= m; ++bx) {
      const auto v = map.baseline_value(bx, by);
      out << bx << ',' << by << ',' << fmt_double(std::abs(v)) << ',' << fmt_double(std::arg(v))
          << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

CoherenceMap read_coherence_map_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "bx_index,by_index,magnitude,phase") {
    throw DataError("missing coherence map header in " + path.string());
  }
  struct Row {
    int bx, by;
    double mag, phase;
  };
  std::vector<Row> rows;
  int max_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row row;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &row.bx, &row.by, &row.mag, &row.phase) != 4) {
      throw DataError("malformed coherence map row in " + path.string());
    }
    max_index = std::max({max_index, std::abs(row.bx), std::abs(row.by)});
    rows.push_back(row);
  }
  CoherenceMap map(max_index + 1);
  const std::size_t lattice = static_cast<std::size_t>(map.lattice_size());
  if (rows.size() != lattice * lattice) {
    throw DataError("incomplete baseline lattice in " + path.string());
  }
  for (const Row& row : rows) {
    if (row.bx == 0 && row.by == 0) continue;
    const auto value = std::polar(row.mag, row.phase);
    // Rows come mirrored in the file; writing both is fine as long as they agree.
    const auto existing = map.baseline_value(row.bx, row.by);
    if (std::abs(existing) > 0.0 && std::abs(existing - value) > 1e-9) {
      throw DataError("coherence map is not Hermitian in " + path.string());
    }
    map.set_baseline(row.bx, row.by, value);
  }
  return map;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const TrialStatistics> stats) {
  auto out = open_out(path);
  out << "scheme,size,n_trials,gamma_mean,gamma_std,phi_mean,phi_std\n";
  for (const TrialStatistics& s : stats) {
    out << scheme_name(s.scheme) << ',' << s.dataset_size << ',' << s.n_trials << ','
        << fmt_double(s.gamma_mean) << ',' << fmt_double(s.gamma_std) << ','
        << fmt_double(s.phi_mean) << ',' << fmt_double(s.phi_std) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace cdc
