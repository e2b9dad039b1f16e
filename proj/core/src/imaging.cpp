#include "cdc/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "cdc/errors.hpp"
#include "cdc/rng.hpp"

namespace cdc {

void DetectorArray::validate() const {
  if (n < 2) throw DataError("detector array needs at least 2x2 detectors");
  if (!(pitch > 0.0)) throw DataError("detector pitch must be positive");
  if (!(distance > 0.0)) throw DataError("array distance must be positive");
  if (!(wavelength > 0.0)) throw DataError("wavelength must be positive");
}

double matched_detector_pitch(double wavelength, double distance, double field_width) {
  if (!(wavelength > 0.0) || !(distance > 0.0) || !(field_width > 0.0)) {
    throw DataError("matched pitch requires positive wavelength, distance, field width");
  }
  return wavelength * distance / field_width;
}

CoherenceMap::CoherenceMap(int array_size) : n_(array_size) {
  if (n_ < 2) throw DataError("coherence map needs array size >= 2");
  values_.assign(static_cast<std::size_t>(lattice_size()) * lattice_size(), {0.0, 0.0});
  values_[index(0, 0)] = {1.0, 0.0};
}

std::size_t CoherenceMap::index(int bx, int by) const {
  if (bx < -(n_ - 1) || bx > n_ - 1 || by < -(n_ - 1) || by > n_ - 1) {
    throw DataError("baseline index outside the lattice");
  }
  return static_cast<std::size_t>(by + n_ - 1) * lattice_size() +
         static_cast<std::size_t>(bx + n_ - 1);
}

std::complex<double> CoherenceMap::baseline_value(int bx, int by) const {
  return values_[index(bx, by)];
}

void CoherenceMap::set_baseline(int bx, int by, std::complex<double> value) {
  if (bx == 0 && by == 0) return;  // pinned to 1
  values_[index(bx, by)] = value;
  values_[index(-bx, -by)] = std::conj(value);
}

NoiseModel NoiseModel::for_scheme(Scheme scheme, std::uint64_t seed) {
  NoiseModel m;
  m.seed = seed;
  switch (scheme) {
    case Scheme::Count:
      m.magnitude_std = 0.022;
      m.phase_std = 0.25;
      break;
    case Scheme::Click:
      m.magnitude_std = 0.025;
      m.phase_std = 0.35;
      break;
    case Scheme::Traditional:
      m.magnitude_std = 0.16;
      m.phase_std = 1.0;
      break;
  }
  return m;
}

void NoiseModel::validate() const {
  if (magnitude_std < 0.0 || phase_std < 0.0 || !std::isfinite(magnitude_std) ||
      !std::isfinite(phase_std)) {
    throw DataError("noise standard deviations must be finite and >= 0");
  }
}

CoherenceMap forward_coherence_map(const SourceScene& scene, const DetectorArray& array) {
  array.validate();
  const BaselineGeometry geometry(array.pitch, array.distance, array.wavelength);

  CoherenceMap map(array.n);
  const int m = array.n - 1;
  for (int by = 0; by <= m; ++by) {
    for (int bx = by == 0 ? 1 : -m; bx <= m; ++bx) {
      const auto value =
          cdc_from_scene(scene, geometry, {bx * array.pitch, by * array.pitch}).value();
      map.set_baseline(bx, by, value);
    }
  }

  // Aliasing check: the scene must fit in one Nyquist cell of the baseline lattice.
  const double half_fov = 0.5 * array.field_of_view();
  const double extent_x =
      0.5 * scene.cols() * scene.pixel_pitch() + std::fabs(scene.center_offset()[0]);
  const double extent_y =
      0.5 * scene.rows() * scene.pixel_pitch() + std::fabs(scene.center_offset()[1]);
  map.set_fov_warning(extent_x > half_fov * (1.0 + 1e-9) || extent_y > half_fov * (1.0 + 1e-9));
  return map;
}

CoherenceMap add_cdc_noise(const CoherenceMap& map, const NoiseModel& model) {
  model.validate();
  CoherenceMap out = map;
  SplitMix64 rng(model.seed);
  const int m = map.array_size() - 1;
  for (int by = 0; by <= m; ++by) {
    for (int bx = by == 0 ? 1 : -m; bx <= m; ++bx) {
      const double g1 = rng.next_normal();
      const double g2 = rng.next_normal();
      const std::complex<double> v = map.baseline_value(bx, by);
      std::complex<double> perturbed;
      if (model.mode == NoiseModel::Mode::MagnitudePhase) {
        const double mag =
            std::clamp(std::abs(v) + model.magnitude_std * g1, 0.0, 1.0);
        perturbed = std::polar(mag, std::arg(v) + model.phase_std * g2);
      } else {
        perturbed = v + std::complex<double>(model.magnitude_std * g1, model.phase_std * g2);
        const double mag = std::abs(perturbed);
        if (mag > 1.0) perturbed /= mag;
      }
      out.set_baseline(bx, by, perturbed);
    }
  }
  return out;
}

ReconstructionResult reconstruct_image(const CoherenceMap& map, const DetectorArray& array,
                                       const OutputGridSpec& grid) {
  array.validate();
  if (map.array_size() != array.n) {
    throw DataError("coherence map lattice does not match the detector array");
  }
  const int lattice = map.lattice_size();
  const int out_size = grid.size > 0 ? grid.size : lattice;
  const double pixel =
      grid.pixel_pitch > 0.0
          ? grid.pixel_pitch
          : array.wavelength * array.distance / (out_size * array.pitch);

  const double k = kTwoPi / array.wavelength;
  const int m = map.array_size() - 1;

  Eigen::MatrixXcd gamma(lattice, lattice);  // (by, bx)
  for (int by = -m; by <= m; ++by) {
    for (int bx = -m; bx <= m; ++bx) {
      gamma(by + m, bx + m) = map.baseline_value(bx, by);
    }
  }
  // Separable kernel exp(-i k x b / D) evaluated on the output grid.
  Eigen::MatrixXcd wx(lattice, out_size), wy(out_size, lattice);
  for (int j = 0; j < out_size; ++j) {
    const double coord = (j - 0.5 * (out_size - 1)) * pixel;
    for (int b = -m; b <= m; ++b) {
      const double phase = -k * coord * b * array.pitch / array.distance;
      wx(b + m, j) = std::polar(1.0, phase);
      wy(j, b + m) = std::polar(1.0, phase);
    }
  }
  const Eigen::MatrixXcd field = wy * gamma * wx / double(lattice) / double(lattice);

  std::vector<double> raw(static_cast<std::size_t>(out_size) * out_size);
  std::vector<double> clamped(raw.size());
  double min_raw = std::numeric_limits<double>::infinity();
  double total_raw = 0.0;
  std::size_t negatives = 0;
  for (int r = 0; r < out_size; ++r) {
    for (int c = 0; c < out_size; ++c) {
      const double v = field(r, c).real();
      raw[static_cast<std::size_t>(r) * out_size + c] = v;
      total_raw += v;
      min_raw = std::min(min_raw, v);
      if (v < 0.0) ++negatives;
      clamped[static_cast<std::size_t>(r) * out_size + c] = std::max(v, 0.0);
    }
  }
  const double negative_fraction = double(negatives) / double(raw.size());
  const double clamped_total = std::accumulate(clamped.begin(), clamped.end(), 0.0);
  if (!(clamped_total > 0.0)) {
    throw NumericalError("reconstruction produced no positive intensity");
  }
  return ReconstructionResult{SourceScene(std::move(clamped), out_size, out_size, pixel),
                              std::move(raw),
                              out_size,
                              out_size,
                              pixel,
                              min_raw,
                              negative_fraction,
                              total_raw};
}

namespace {

/// Centered DFT matrix: W(q, c) = exp(-i 2 pi q' c' / size) with both indices
/// offset to the grid center.
Eigen::MatrixXcd centered_dft(int size) {
  Eigen::MatrixXcd w(size, size);
  const double mid = 0.5 * (size - 1);
  for (int q = 0; q < size; ++q) {
    for (int c = 0; c < size; ++c) {
      w(q, c) = std::polar(1.0, -kTwoPi * (q - mid) * (c - mid) / size);
    }
  }
  return w;
}

}  // namespace

SourceScene make_bandlimited_reference(const SourceScene& scene, const DetectorArray& array) {
  array.validate();
  const int rows = scene.rows(), cols = scene.cols();
  Eigen::MatrixXd img(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) img(r, c) = scene.at(r, c);
  }
  const Eigen::MatrixXcd wr = centered_dft(rows), wc = centered_dft(cols);
  Eigen::MatrixXcd spectrum = wr * img * wc.transpose();

  // Keep only scene frequencies the baseline lattice reaches.
  const double f_max = (array.n - 1) * array.pitch / (array.wavelength * array.distance);
  const double mid_r = 0.5 * (rows - 1), mid_c = 0.5 * (cols - 1);
  for (int qy = 0; qy < rows; ++qy) {
    const double fy = (qy - mid_r) / (rows * scene.pixel_pitch());
    for (int qx = 0; qx < cols; ++qx) {
      const double fx = (qx - mid_c) / (cols * scene.pixel_pitch());
      if (std::fabs(fx) > f_max * (1.0 + 1e-9) || std::fabs(fy) > f_max * (1.0 + 1e-9)) {
        spectrum(qy, qx) = 0.0;
      }
    }
  }
  const Eigen::MatrixXcd back =
      wr.adjoint() * spectrum * wc.conjugate() / double(rows) / double(cols);

  std::vector<double> clamped(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      clamped[static_cast<std::size_t>(r) * cols + c] = std::max(back(r, c).real(), 0.0);
    }
  }
  return SourceScene(std::move(clamped), rows, cols, scene.pixel_pitch(), scene.center_offset());
}

ImageMetrics image_metrics(const SourceScene& reconstruction, const SourceScene& reference) {
  if (reconstruction.rows() != reference.rows() || reconstruction.cols() != reference.cols()) {
    throw DataError("image dimensions do not match");
  }
  const std::size_t n =
      static_cast<std::size_t>(reconstruction.rows()) * reconstruction.cols();
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = reconstruction.intensity()[i] / reconstruction.total_intensity();
    b[i] = reference.intensity()[i] / reference.total_intensity();
  }

  ImageMetrics metrics;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  metrics.rmse = std::sqrt(sq / double(n));
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  const double range = *bmax - *bmin;
  metrics.normalized_rmse = range > 0.0 ? metrics.rmse / range : metrics.rmse;

  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  metrics.contrast = (*amax + *amin) > 0.0 ? (*amax - *amin) / (*amax + *amin) : 0.0;

  const double ma = 1.0 / double(n), mb = 1.0 / double(n);  // unit-total means
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  metrics.correlation = va > 1e-30 && vb > 1e-30 ? cov / std::sqrt(va * vb) : 0.0;
  return metrics;
}

SourceScene make_test_pattern(int rows, int cols, double pixel_pitch) {
  if (rows < 4 || cols < 4) throw DataError("test pattern needs at least a 4x4 grid");
  std::vector<double> img(static_cast<std::size_t>(rows) * cols);
  auto gauss = [](double u, double v, double cu, double cv, double w) {
    const double du = (u - cu) / w, dv = (v - cv) / w;
    return std::exp(-(du * du + dv * dv));
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      // Normalized coordinates in [-0.5, 0.5].
      const double u = (c - 0.5 * (cols - 1)) / cols;
      const double v = (r - 0.5 * (rows - 1)) / rows;
      double value = 0.01;
      value += 1.0 * gauss(u, v, -0.18, -0.12, 0.09);
      value += 0.7 * gauss(u, v, 0.20, 0.15, 0.13);
      // Soft horizontal bar.
      const double bar = std::exp(-std::pow((v + 0.25) / 0.06, 2.0));
      value += 0.5 * bar * std::exp(-std::pow(u / 0.28, 2.0));
      img[static_cast<std::size_t>(r) * cols + c] = value;
    }
  }
  return SourceScene(std::move(img), rows, cols, pixel_pitch);
}

}  // namespace cdc
