#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "cdc/coherence.hpp"
#include "cdc/simulator.hpp"

namespace cdc {

/// Square N x N detector array in the observation plane.
struct DetectorArray {
  int n = 2;
  double pitch = 0.0;     // meters between adjacent detectors
  double distance = 0.0;  // source-plane distance, meters
  double wavelength = 0.0;

  void validate() const;
  /// Unaliased source-plane field of view, lambda * distance / pitch.
  double field_of_view() const { return wavelength * distance / pitch; }
};

/// Detector pitch that makes the baseline lattice Nyquist-sample a source field of
/// the given width.
double matched_detector_pitch(double wavelength, double distance, double field_width);

/// CDC per unique baseline vector on the dense (2N-1) x (2N-1) lattice. The map is
/// Hermitian (gamma(-b) = conj gamma(b)) with gamma(0) = 1 by construction.
class CoherenceMap {
 public:
  explicit CoherenceMap(int array_size);

  int array_size() const { return n_; }
  int lattice_size() const { return 2 * n_ - 1; }

  /// Baseline components in units of the detector pitch, each in [-(N-1), N-1].
  std::complex<double> baseline_value(int bx, int by) const;
  /// Writes (bx, by) and mirrors the conjugate to (-bx, -by); the zero baseline is
  /// pinned to 1.
  void set_baseline(int bx, int by, std::complex<double> value);

  bool fov_warning() const { return fov_warning_; }
  void set_fov_warning(bool warn) { fov_warning_ = warn; }

 private:
  std::size_t index(int bx, int by) const;
  int n_;
  bool fov_warning_ = false;
  std::vector<std::complex<double>> values_;
};

/// Per-scheme Gaussian perturbation of the map, in the coordinates the
/// uncertainties are reported in (magnitude and phase) by default.
struct NoiseModel {
  double magnitude_std = 0.0;
  double phase_std = 0.0;
  std::uint64_t seed = 0;
  enum class Mode { MagnitudePhase, ReIm };
  Mode mode = Mode::MagnitudePhase;

  /// Benchmark uncertainties: Count (0.022, 0.25), Click (0.025, 0.35),
  /// Traditional (0.16, 1.0).
  static NoiseModel for_scheme(Scheme scheme, std::uint64_t seed);
  void validate() const;
};

/// Van Cittert-Zernike forward model: one cdc_from_scene evaluation per unique
/// baseline (all detector pairs sharing a separation share a CDC).
CoherenceMap forward_coherence_map(const SourceScene& scene, const DetectorArray& array);

/// Independent Gaussian perturbations on one half-lattice, mirrored to preserve
/// Hermitian symmetry; zero baseline untouched; deterministic per seed.
CoherenceMap add_cdc_noise(const CoherenceMap& map, const NoiseModel& model);

/// Output grid for the reconstruction; zeros select the natural DFT-conjugate grid
/// (size 2N-1, pixel pitch lambda * distance / (size * detector pitch)).
struct OutputGridSpec {
  int size = 0;
  double pixel_pitch = 0.0;
};

struct ReconstructionResult {
  SourceScene image;        // clamped to >= 0, the displayable product
  std::vector<double> raw;  // unclamped inverse-transform values, row-major
  int rows;
  int cols;
  double pixel_pitch;
  double min_raw;
  double negative_fraction;  // fraction of pixels clamped
  double total_raw;          // equals gamma(0) = 1 on the natural grid
};

/// Inverse 2D discrete Fourier transform of the coherence map onto the source
/// plane, I(r) = (1/M^2) sum_b gamma(b) exp(-i k r.b / D).
ReconstructionResult reconstruct_image(const CoherenceMap& map, const DetectorArray& array,
                                       const OutputGridSpec& grid = {});

/// Reference for noiseless reconstruction quality: the scene with its spectrum
/// truncated to the baseline frequencies the array samples, clamped and scaled the
/// same way as a reconstruction.
SourceScene make_bandlimited_reference(const SourceScene& scene, const DetectorArray& array);

struct ImageMetrics {
  double rmse = 0.0;             // after scaling both images to unit total
  double normalized_rmse = 0.0;  // rmse / (max - min) of the scaled reference
  double contrast = 0.0;         // Michelson contrast of the reconstruction
  double correlation = 0.0;      // Pearson, 0 when either image is constant
};

ImageMetrics image_metrics(const SourceScene& reconstruction, const SourceScene& reference);

/// Shipped smooth grayscale test pattern (two Gaussian spots and a soft bar).
SourceScene make_test_pattern(int rows, int cols, double pixel_pitch);

}  // namespace cdc
