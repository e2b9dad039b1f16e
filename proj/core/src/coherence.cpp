#include "cdc/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cdc {

double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod can land exactly on 2pi after the correction when phi is a tiny negative.
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

double circular_distance(double a, double b) {
  double diff = std::fabs(wrap_phase(a) - wrap_phase(b));
  return std::min(diff, kTwoPi - diff);
}

ComplexCoherence::ComplexCoherence(double magnitude, double phase)
    : magnitude_(magnitude), phase_(wrap_phase(phase)) {
  if (!(magnitude >= 0.0 && magnitude <= 1.0) || !std::isfinite(magnitude)) {
    throw DataError("coherence magnitude must lie in [0, 1]");
  }
  if (!std::isfinite(phase)) throw DataError("coherence phase must be finite");
}

ComplexCoherence ComplexCoherence::from_complex(std::complex<double> value) {
  double mag = std::abs(value);
  // Guard against |z| = 1 + eps from rounding in normalized sums.
  if (mag > 1.0 && mag < 1.0 + 1e-9) mag = 1.0;
  return ComplexCoherence(mag, std::arg(value));
}

std::complex<double> ComplexCoherence::value() const {
  return std::polar(magnitude_, phase_);
}

BaselineGeometry::BaselineGeometry(double detector_separation, double source_distance,
                                   double wavelength, double far_field_warn_ratio)
    : d_(detector_separation), big_d_(source_distance), lambda_(wavelength),
      warn_ratio_(far_field_warn_ratio) {
  if (!(d_ > 0.0) || !(big_d_ > 0.0) || !(lambda_ > 0.0)) {
    throw DataError("geometry requires d > 0, D > 0, lambda > 0");
  }
}

SourceScene::SourceScene(std::vector<double> intensity, int rows, int cols, double pixel_pitch,
                         std::array<double, 2> center_offset)
    : intensity_(std::move(intensity)), rows_(rows), cols_(cols), pitch_(pixel_pitch),
      offset_(center_offset), total_(0.0) {
  if (rows_ < 1 || cols_ < 1) throw DataError("scene grid must be at least 1x1");
  if (intensity_.size() != static_cast<std::size_t>(rows_) * cols_) {
    throw DataError("scene intensity size does not match grid dimensions");
  }
  if (!(pitch_ > 0.0)) throw DataError("scene pixel pitch must be positive");
  for (double v : intensity_) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("scene intensities must be finite and >= 0");
    total_ += v;
  }
  if (!(total_ > 0.0)) throw DataError("scene total intensity must be positive");
}

std::array<double, 2> SourceScene::position(int row, int col) const {
  double x = (col - 0.5 * (cols_ - 1)) * pitch_ + offset_[0];
  double y = (row - 0.5 * (rows_ - 1)) * pitch_ + offset_[1];
  return {x, y};
}

ComplexCoherence cdc_from_scene(const SourceScene& scene, const BaselineGeometry& geometry,
                                std::array<double, 2> baseline, bool exact_distance) {
  const double blen = std::hypot(baseline[0], baseline[1]);
  if (!(blen > 0.0)) throw DataError("baseline vector must be nonzero");

  const double k = geometry.wavenumber();
  const double dist = geometry.source_distance();
  std::complex<double> sum(0.0, 0.0);
  for (int r = 0; r < scene.rows(); ++r) {
    for (int c = 0; c < scene.cols(); ++c) {
      const double w = scene.at(r, c);
      if (w == 0.0) continue;
      const auto pos = scene.position(r, c);
      double path;
      if (exact_distance) {
        const double dx1 = pos[0] - 0.5 * baseline[0], dy1 = pos[1] - 0.5 * baseline[1];
        const double dx2 = pos[0] + 0.5 * baseline[0], dy2 = pos[1] + 0.5 * baseline[1];
        path = std::sqrt(dist * dist + dx2 * dx2 + dy2 * dy2) -
               std::sqrt(dist * dist + dx1 * dx1 + dy1 * dy1);
      } else {
        path = (pos[0] * baseline[0] + pos[1] * baseline[1]) / dist;
      }
      sum += w * std::polar(1.0, k * path);
    }
  }
  return ComplexCoherence::from_complex(sum / scene.total_intensity());
}

namespace {
double sinc(double u) {
  if (std::fabs(u) < 1e-8) return 1.0 - u * u / 6.0;
  return std::sin(u) / u;
}
}  // namespace

ComplexCoherence uniform_source_cdc(double width, double offset, const BaselineGeometry& geometry) {
  if (width < 0.0) throw DataError("strip width must be >= 0");
  const double k = geometry.wavenumber();
  const double d = geometry.detector_separation();
  const double dist = geometry.source_distance();
  const double mag = std::fabs(sinc(k * d * width / (2.0 * dist)));
  const double phase = k * offset * d / dist;
  return ComplexCoherence(mag, phase);
}

double gaussian_source_visibility(double sigma_y, const BaselineGeometry& geometry) {
  if (!(sigma_y > 0.0)) throw DataError("sigma_y must be positive");
  const double sigma_d =
      geometry.wavelength() * geometry.source_distance() / (kTwoPi * sigma_y);
  const double d = geometry.detector_separation();
  return std::exp(-d * d / (2.0 * sigma_d * sigma_d));
}

double phase_to_angle(double phi, const BaselineGeometry& geometry) {
  return phi / (geometry.wavenumber() * geometry.detector_separation());
}

double angle_to_phase(double theta, const BaselineGeometry& geometry, bool wrap) {
  const double phi = geometry.wavenumber() * geometry.detector_separation() * theta;
  return wrap ? wrap_phase(phi) : phi;
}

double invert_visibility_to_size(double visibility, const BaselineGeometry& geometry,
                                 SourceModel model) {
  if (!(visibility > 0.0 && visibility < 1.0)) {
    throw DataError("visibility must lie strictly between 0 and 1 to invert");
  }
  const double k = geometry.wavenumber();
  const double d = geometry.detector_separation();
  const double dist = geometry.source_distance();
  if (model == SourceModel::Gaussian) {
    return geometry.wavelength() * dist * std::sqrt(2.0 * std::log(1.0 / visibility)) /
           (kTwoPi * d);
  }
  // Uniform strip: bisect |sinc(u)| = visibility on (0, pi) where sinc decreases 1 -> 0.
  double lo = 0.0, hi = kPi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sinc(mid) > visibility) lo = mid; else hi = mid;
  }
  const double u = 0.5 * (lo + hi);
  return 2.0 * dist * u / (k * d);
}

}  // namespace cdc
