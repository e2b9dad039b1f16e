#include <algorithm>
#include <cmath>
#include <vector>

#include "cdc/coherence.hpp"
#include "cdc/errors.hpp"
#include "doctest.h"

using namespace cdc;

namespace {

// Experimental geometry: 48 mm separation, 595 mm distance, 820 nm light.
BaselineGeometry bench_geometry() { return BaselineGeometry(48e-3, 595e-3, 820e-9); }

SourceScene strip_scene(double width, double offset, int samples) {
  // 1D strip along x, one row.
  std::vector<double> grid(samples, 1.0);
  return SourceScene(grid, 1, samples, width / samples, {offset, 0.0});
}

}  // namespace

TEST_CASE("phase wrapping and circular distance") {
  CHECK(wrap_phase(-0.1) == doctest::Approx(kTwoPi - 0.1));
  CHECK(wrap_phase(kTwoPi + 0.25) == doctest::Approx(0.25));
  CHECK(circular_distance(0.1, kTwoPi - 0.1) == doctest::Approx(0.2));
}

TEST_CASE("coherence value invariants") {
  CHECK_THROWS_AS(ComplexCoherence(1.5, 0.0), DataError);
  CHECK_THROWS_AS(ComplexCoherence(-0.1, 0.0), DataError);
  ComplexCoherence c(0.5, -1.0);
  CHECK(c.phase() == doctest::Approx(kTwoPi - 1.0));
  auto r = ComplexCoherence::from_complex({0.0, 0.25});
  CHECK(r.magnitude() == doctest::Approx(0.25));
  CHECK(r.phase() == doctest::Approx(kPi / 2));
}

TEST_CASE("geometry validation") {
  CHECK_THROWS_AS(BaselineGeometry(0.0, 1.0, 1e-6), DataError);
  CHECK(bench_geometry().far_field_valid());
  BaselineGeometry tight(0.5, 1.0, 1e-6);
  CHECK_FALSE(tight.far_field_valid());
}

TEST_CASE("point source gives unit magnitude and the linear phase") {
  auto geom = bench_geometry();
  std::vector<double> grid(9, 0.0);
  grid[4] = 2.5;  // centre pixel of a 3x3 grid
  SourceScene scene(grid, 3, 3, 1e-6, {5e-6, 0.0});
  auto value = cdc_from_scene(scene, geom, {geom.detector_separation(), 0.0});
  CHECK(value.magnitude() == doctest::Approx(1.0).epsilon(1e-12));
  const double expect =
      wrap_phase(geom.wavenumber() * 5e-6 * geom.detector_separation() / geom.source_distance());
  CHECK(circular_distance(value.phase(), expect) < 1e-9);
}

TEST_CASE("uniform strip matches the sinc closed form") {
  auto geom = bench_geometry();
  // Keep the width below the first sinc zero (~10.2 um here) so the closed form's
  // phase convention matches the discrete sum without a sign flip.
  const double width = 8e-6, offset = 4e-6;
  auto closed = uniform_source_cdc(width, offset, geom);
  auto discrete = cdc_from_scene(strip_scene(width, offset, 512), geom,
                                 {geom.detector_separation(), 0.0});
  CHECK(std::fabs(discrete.magnitude() - closed.magnitude()) <= 1e-3);
  CHECK(circular_distance(discrete.phase(), closed.phase()) <= 1e-3);
}

TEST_CASE("sinc special points") {
  auto geom = bench_geometry();
  CHECK(uniform_source_cdc(0.0, 0.0, geom).magnitude() == doctest::Approx(1.0));
  // First zero: k d a / 2D = pi.
  const double a0 = kTwoPi * geom.source_distance() /
                    (geom.wavenumber() * geom.detector_separation());
  CHECK(uniform_source_cdc(a0 / 1.0, 0.0, geom).magnitude() < 1e-12);
}

TEST_CASE("gaussian closed form and scene agreement") {
  auto geom = bench_geometry();
  const double sigma = 3.5e-6;
  const double vis = gaussian_source_visibility(sigma, geom);
  CHECK(vis == doctest::Approx(0.096).epsilon(0.01));

  // Discretize a Gaussian profile over +-6 sigma.
  const int n = 4096;
  const double extent = 12.0 * sigma;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) {
    const double x = (i - 0.5 * (n - 1)) * extent / n;
    grid[i] = std::exp(-x * x / (2.0 * sigma * sigma));
  }
  SourceScene scene(grid, 1, n, extent / n);
  auto discrete = cdc_from_scene(scene, geom, {geom.detector_separation(), 0.0});
  CHECK(std::fabs(discrete.magnitude() - vis) <= 1e-3);
}

TEST_CASE("gaussian visibility limits") {
  auto geom = bench_geometry();
  CHECK(gaussian_source_visibility(1e-12, geom) == doctest::Approx(1.0));
  const double sigma_d = geom.wavelength() * geom.source_distance() / (kTwoPi * 3.5e-6);
  // Construct the half-maximum separation directly.
  BaselineGeometry half(sigma_d * std::sqrt(2.0 * std::log(2.0)), geom.source_distance(),
                        geom.wavelength());
  CHECK(gaussian_source_visibility(3.5e-6, half) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("phase and angle conversions") {
  auto geom = bench_geometry();
  CHECK(phase_to_angle(0.0, geom) == 0.0);
  CHECK(phase_to_angle(4.32, geom) == doctest::Approx(1.17e-5).epsilon(1e-2));
  for (double x : {0.0, 1.0, 3.9, 6.1}) {
    CHECK(angle_to_phase(phase_to_angle(x, geom), geom) == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("visibility inversion") {
  auto geom = bench_geometry();
  SUBCASE("gaussian round trip") {
    const double sigma = 3.5e-6;
    const double vis = gaussian_source_visibility(sigma, geom);
    CHECK(invert_visibility_to_size(vis, geom, SourceModel::Gaussian) ==
          doctest::Approx(sigma).epsilon(1e-9));
  }
  SUBCASE("experimental value maps to 3.50 um") {
    CHECK(invert_visibility_to_size(0.096, geom, SourceModel::Gaussian) ==
          doctest::Approx(3.50e-6).epsilon(0.01));
  }
  SUBCASE("uniform strip round trip in the pre-first-zero regime") {
    for (double a : {2e-6, 5e-6, 9e-6}) {
      const double vis = uniform_source_cdc(a, 0.0, geom).magnitude();
      CHECK(invert_visibility_to_size(vis, geom, SourceModel::UniformStrip) ==
            doctest::Approx(a).epsilon(1e-8));
    }
  }
  SUBCASE("degenerate visibilities are rejected") {
    CHECK_THROWS_AS(invert_visibility_to_size(0.0, geom, SourceModel::Gaussian), DataError);
    CHECK_THROWS_AS(invert_visibility_to_size(1.0, geom, SourceModel::UniformStrip), DataError);
  }
}

TEST_CASE("scene properties") {
  auto geom = bench_geometry();
  auto scene = strip_scene(16.5e-6, 2e-6, 128);

  SUBCASE("normalization invariance") {
    std::vector<double> scaled(scene.intensity());
    for (double& v : scaled) v *= 37.5;
    SourceScene scene2(scaled, scene.rows(), scene.cols(), scene.pixel_pitch(),
                       scene.center_offset());
    auto a = cdc_from_scene(scene, geom, {geom.detector_separation(), 0.0});
    auto b = cdc_from_scene(scene2, geom, {geom.detector_separation(), 0.0});
    CHECK(a.magnitude() == doctest::Approx(b.magnitude()).epsilon(1e-12));
    CHECK(circular_distance(a.phase(), b.phase()) < 1e-12);
  }

  SUBCASE("translation multiplies by a pure phase") {
    const double shift = 3e-6;
    SourceScene moved(scene.intensity(), scene.rows(), scene.cols(), scene.pixel_pitch(),
                      {scene.center_offset()[0] + shift, 0.0});
    std::array<double, 2> baseline{geom.detector_separation(), 0.0};
    auto a = cdc_from_scene(scene, geom, baseline);
    auto b = cdc_from_scene(moved, geom, baseline);
    CHECK(b.magnitude() == doctest::Approx(a.magnitude()).epsilon(1e-12));
    const double expected_shift =
        geom.wavenumber() * shift * baseline[0] / geom.source_distance();
    CHECK(circular_distance(b.phase(), a.phase() + expected_shift) < 1e-9);
  }

  SUBCASE("baseline negation conjugates") {
    std::array<double, 2> baseline{geom.detector_separation(), 0.0};
    auto a = cdc_from_scene(scene, geom, baseline);
    auto b = cdc_from_scene(scene, geom, {-baseline[0], -baseline[1]});
    CHECK(a.magnitude() == doctest::Approx(b.magnitude()).epsilon(1e-12));
    CHECK(circular_distance(a.phase(), -b.phase()) < 1e-9);
  }

  SUBCASE("magnitude bounded by one for random scenes") {
    std::vector<double> noisy(64);
    unsigned state = 12345;
    for (double& v : noisy) {
      state = state * 1664525u + 1013904223u;
      v = (state >> 8) % 1000 / 999.0;
    }
    SourceScene rnd(noisy, 8, 8, 1e-6);
    for (double bx : {1e-3, 20e-3, 80e-3}) {
      CHECK(cdc_from_scene(rnd, geom, {bx, 0.5e-3}).magnitude() <= 1.0);
    }
  }

  SUBCASE("zero scene is rejected") {
    std::vector<double> zeros(16, 0.0);
    CHECK_THROWS_AS(SourceScene(zeros, 4, 4, 1e-6), DataError);
  }
}

TEST_CASE("exact-distance debug kernel agrees in the deep far field") {
  auto geom = bench_geometry();
  auto scene = strip_scene(16.5e-6, 0.0, 64);
  std::array<double, 2> baseline{geom.detector_separation(), 0.0};
  auto lin = cdc_from_scene(scene, geom, baseline, false);
  auto exact = cdc_from_scene(scene, geom, baseline, true);
  // The exact kernel keeps the Fresnel-order curvature the linearized one drops.
  CHECK(std::fabs(lin.magnitude() - exact.magnitude()) < 5e-3);
}
