#pragma once

#include <array>
#include <complex>
#include <vector>

#include "cdc/errors.hpp"

namespace cdc {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wrap an angle into [0, 2pi).
double wrap_phase(double phi);

/// Shortest angular distance between two phases, in [0, pi].
double circular_distance(double a, double b);

/// The estimand gamma = |gamma| e^{i phi}: magnitude in [0,1], phase stored in [0, 2pi).
class ComplexCoherence {
 public:
  ComplexCoherence(double magnitude, double phase);
  static ComplexCoherence from_complex(std::complex<double> value);

  double magnitude() const { return magnitude_; }
  double phase() const { return phase_; }
  std::complex<double> value() const;

 private:
  double magnitude_;
  double phase_;
};

/// Two-detector far-field geometry: separation d, source distance D, wavelength lambda.
class BaselineGeometry {
 public:
  BaselineGeometry(double detector_separation, double source_distance, double wavelength,
                   double far_field_warn_ratio = 0.1);

  double detector_separation() const { return d_; }
  double source_distance() const { return big_d_; }
  double wavelength() const { return lambda_; }
  double wavenumber() const { return kTwoPi / lambda_; }

  /// False when d/D exceeds the configured ratio and the linearized phase kernel
  /// starts to lose validity.
  bool far_field_valid() const { return d_ / big_d_ <= warn_ratio_; }

 private:
  double d_, big_d_, lambda_, warn_ratio_;
};

/// 2D incoherent source intensity grid. Positions are metres in the source plane,
/// grid centre sits at center_offset from the optical axis.
class SourceScene {
 public:
  SourceScene(std::vector<double> intensity, int rows, int cols, double pixel_pitch,
              std::array<double, 2> center_offset = {0.0, 0.0});

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double pixel_pitch() const { return pitch_; }
  const std::array<double, 2>& center_offset() const { return offset_; }
  const std::vector<double>& intensity() const { return intensity_; }

  double at(int row, int col) const { return intensity_[static_cast<std::size_t>(row) * cols_ + col]; }
  double total_intensity() const { return total_; }

  /// Physical (x, y) position of a pixel centre; x runs along columns, y along rows.
  std::array<double, 2> position(int row, int col) const;

 private:
  std::vector<double> intensity_;
  int rows_, cols_;
  double pitch_;
  std::array<double, 2> offset_;
  double total_;
};

enum class SourceModel { Gaussian, UniformStrip };

/// Discrete van Cittert-Zernike forward map: normalized sum of I(r') e^{ik r'.b/D}.
/// With exact_distance the phase uses the un-linearized path difference (debug mode).
ComplexCoherence cdc_from_scene(const SourceScene& scene, const BaselineGeometry& geometry,
                                std::array<double, 2> baseline, bool exact_distance = false);

/// Closed form for a uniform 1D strip of width a centred at offset s:
/// |gamma| = |sinc(k d a / 2D)|, phase = k s d / D.
ComplexCoherence uniform_source_cdc(double width, double offset, const BaselineGeometry& geometry);

/// Closed form for a Gaussian source of std sigma_y: exp[-d^2 / (2 sigma_d^2)],
/// sigma_d = lambda D / (2 pi sigma_y).
double gaussian_source_visibility(double sigma_y, const BaselineGeometry& geometry);

/// theta = phi / (k d).
double phase_to_angle(double phi, const BaselineGeometry& geometry);

/// phi = k d theta; raw (unwrapped) unless wrap is requested.
double angle_to_phase(double theta, const BaselineGeometry& geometry, bool wrap = false);

/// Invert a visibility to a source size. Gaussian: sigma_y in closed form.
/// UniformStrip: smallest a with |sinc(k d a / 2D)| = visibility (pre-first-zero branch).
double invert_visibility_to_size(double visibility, const BaselineGeometry& geometry,
                                 SourceModel model);

/// Beam-diameter convention: diameter = factor * sigma. The experimental mapping of
/// sigma_y = 3.50 um to a 16.5 um diameter fixes the default; it is configuration,
/// not physics, and never enters the math operations above.
inline constexpr double kDefaultSigmaToDiameter = 16.5 / 3.5;

}  // namespace cdc
