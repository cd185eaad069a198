#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "spinsense/errors.hpp"

using namespace spinsense;
using fixtures::cone_fields;
using fixtures::nv_measurements;
using fixtures::nv_setup;

namespace {

SearchRegion upper_half(double edge = 16.0, double pitch = 0.5) {
  SearchRegion r;
  r.lower = Vec3(-edge / 2, -edge / 2, 0.5);
  r.upper = Vec3(edge / 2, edge / 2, edge / 2);
  r.pitch = pitch;
  return r;
}

}  // namespace

TEST_CASE("forward couplings") {
  LocalizationSetup setup;
  setup.sensor = spin_half("S");
  setup.target = spin_half("T");
  CouplingMeasurement m;
  m.field = MagneticField(Vec3(0, 0, 100));
  m.transitions = {{1, 0}, {1, 0}};
  const std::vector<CouplingMeasurement> ms{m};
  const double r = 4.0;
  const auto a = forward_couplings(Vec3(0, 0, r), ms, setup);
  CHECK(a[0] == doctest::Approx(-2.0 * kDipolePrefactor / (r * r * r)).epsilon(1e-12));
  // single state-pair interaction carries the ±1/2 moments
  const Vec3 up(0, 0, 0.5);
  CHECK(pair_interaction_nu(up, up, GeometryVector(Vec3(0, 0, r))) ==
        doctest::Approx(-2.0 * kDipolePrefactor / (4 * r * r * r)).epsilon(1e-12));

  const Vec3 dir = Vec3(0.3, -0.4, 0.8).normalized();
  const auto near = forward_couplings(3.0 * dir, ms, setup);
  const auto far = forward_couplings(6.0 * dir, ms, setup);
  CHECK(far[0] == doctest::Approx(near[0] / 8).epsilon(1e-12));
  CHECK_THROWS_AS(forward_couplings(Vec3(0, 0, 0.01), ms, setup), DegenerateGeometry);
}

TEST_CASE("noiseless round trip") {
  const auto setup = nv_setup();
  const auto fields = cone_fields(6, 30.0, 300.0);
  for (const Vec3& truth : {Vec3(1.5, -2.0, 3.0), Vec3(-2.5, 0.7, 4.2), Vec3(0.4, 3.1, 2.2)}) {
    const auto ms = nv_measurements(setup, fields, truth, 0.001);
    const auto res = localize(ms, setup, upper_half());
    CHECK((res.position - truth).norm() <= 1e-3);
    CHECK(res.residual >= 0.0);
    CHECK(res.covariance.isApprox(res.covariance.transpose()));
    Eigen::SelfAdjointEigenSolver<Mat3> eig(res.covariance);
    CHECK(eig.eigenvalues().minCoeff() >= 0.0);
  }
}

TEST_CASE("degenerate minima are reported") {
  const auto setup = nv_setup();
  const Vec3 truth(1.5, -2.0, 3.0);
  const auto ms = nv_measurements(setup, cone_fields(6, 30.0, 300.0), truth, 0.001);
  const auto res = localize(ms, setup, SearchRegion::cube(Vec3::Zero(), 12.0));
  bool plus = false, minus = false;
  for (const auto& c : res.candidates) {
    plus = plus || (c.position - truth).norm() < 1e-3;
    minus = minus || (c.position + truth).norm() < 1e-3;
  }
  CHECK(plus);
  CHECK(minus);
}

TEST_CASE("optimum beats every coarse grid point") {
  const auto setup = nv_setup();
  auto ms = nv_measurements(setup, cone_fields(6, 30.0, 300.0), Vec3(-1.2, 2.2, 3.3), 0.01);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0, 0.01);
  for (auto& m : ms) m.a_measured += noise(rng);
  const auto region = upper_half(10.0, 0.5);
  const auto res = localize(ms, setup, region);
  for (double x = region.lower.x(); x <= region.upper.x() + 1e-9; x += region.pitch)
    for (double y = region.lower.y(); y <= region.upper.y() + 1e-9; y += region.pitch)
      for (double z = region.lower.z(); z <= region.upper.z() + 1e-9; z += region.pitch)
        CHECK(res.residual <= localization_chi2(Vec3(x, y, z), ms, setup) + 1e-12);

  const auto again = localize(ms, setup, region);
  CHECK(again.position == res.position);
  CHECK(again.residual == res.residual);
}

TEST_CASE("insufficient orientations") {
  const auto setup = nv_setup();
  const Vec3 truth(1, 1, 3);
  auto one = nv_measurements(setup, {MagneticField(Vec3(0, 0, 300))}, truth, 0.01);
  CHECK_THROWS_AS(localize(one, setup, upper_half()), InsufficientData);
  // repeating one orientation does not help
  auto repeated = nv_measurements(setup, std::vector<MagneticField>(5, MagneticField(Vec3(0, 0, 300))), truth, 0.01);
  CHECK_THROWS_AS(localize(repeated, setup, upper_half()), InsufficientData);
  auto collinear = nv_measurements(
      setup, {MagneticField(Vec3(0, 0, 300)), MagneticField(Vec3(0, 0, 200)), MagneticField(Vec3(0, 0, -250))}, truth,
      0.01);
  CHECK_THROWS_AS(localize(collinear, setup, upper_half()), InsufficientData);
}

TEST_CASE("translation and rotation covariance") {
  auto setup = nv_setup();
  const auto fields = cone_fields(6, 30.0, 300.0);
  const Vec3 truth(1.0, -1.5, 2.5);
  auto ms = nv_measurements(setup, fields, truth, 0.01);
  for (auto& m : ms) m.a_measured *= 1.03;
  const Vec3 probe(0.8, -1.1, 2.9);
  const double chi = localization_chi2(probe, ms, setup);

  auto shifted = setup;
  const Vec3 shift(3.0, -7.0, 1.5);
  shifted.sensor_position += shift;
  const auto a0 = forward_couplings(probe, ms, setup);
  const auto a1 = forward_couplings(probe + shift, ms, shifted);
  for (std::size_t i = 0; i < a0.size(); ++i) CHECK(a1[i] == doctest::Approx(a0[i]).epsilon(1e-12));

  const Mat3 rot = Eigen::AngleAxisd(0.7, Vec3(1, 2, -1).normalized()).toRotationMatrix();
  auto rotated = setup;
  rotated.sensor.axes = rot * setup.sensor.axes;
  rotated.target.axes = rot * setup.target.axes;
  auto ms_rot = ms;
  for (auto& m : ms_rot) m.field = MagneticField(rot * m.field.gauss);
  CHECK(std::abs(localization_chi2(rot * probe, ms_rot, rotated) - chi) < 1e-9 * (1 + chi));
}

TEST_CASE("uncertainty ellipsoid") {
  const double sigma = 0.3;
  const auto e = uncertainty_ellipsoid(Mat3(sigma * sigma * Mat3::Identity()), 0.95);
  CHECK(e.quantile == doctest::Approx(7.8147).epsilon(1e-4));
  for (int k = 0; k < 3; ++k) CHECK(e.semi_axes[k] == doctest::Approx(sigma * std::sqrt(e.quantile)));

  Mat3 flat = Mat3::Zero();
  flat(0, 0) = 0.04;
  flat(1, 1) = 0.09;
  const auto f = uncertainty_ellipsoid(flat, 0.6827);
  CHECK(f.degenerate[0]);
  CHECK(!f.degenerate[1]);
  CHECK(f.semi_axes[0] == 0.0);
  CHECK(f.semi_axes.allFinite());
  CHECK_THROWS_AS(uncertainty_ellipsoid(flat, 1.0), InvalidInput);
}
