#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <random>

#include "spinsense/errors.hpp"
#include "spinsense/spin_model.hpp"

using namespace spinsense;
using cd = std::complex<double>;
using M3 = std::array<std::array<cd, 3>, 3>;

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

// Spin-1 matrices written out by hand, |+1>, |0>, |-1> ordering.
M3 sx() {
  const double r = 1.0 / std::sqrt(2.0);
  return {{{0, r, 0}, {r, 0, r}, {0, r, 0}}};
}
M3 sy() {
  const double r = 1.0 / std::sqrt(2.0);
  return {{{0, cd(0, -r), 0}, {cd(0, r), 0, cd(0, -r)}, {0, cd(0, r), 0}}};
}
M3 sz() { return {{{1, 0, 0}, {0, 0, 0}, {0, 0, -1}}}; }

M3 add(const M3& a, const M3& b, double kb = 1.0) {
  M3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[i][j] = a[i][j] + kb * b[i][j];
  return c;
}
M3 mul(const M3& a, const M3& b) {
  M3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}
cd expect(const M3& op, const std::array<cd, 3>& v) {
  cd s = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += std::conj(v[i]) * op[i][j] * v[j];
  return s;
}

// Ground state of a spin-1 Hamiltonian by power iteration on (shift - H).
Vec3 oracle_ground_moment(double d, double e, const Mat3& axes, const Vec3& b_lab, double gamma) {
  const Vec3 b = axes.transpose() * b_lab;
  M3 h{};
  h = add(h, mul(sz(), sz()), d);
  h = add(h, add(mul(sx(), sx()), mul(sy(), sy()), -1.0), e);
  h = add(h, sx(), gamma * b.x());
  h = add(h, sy(), gamma * b.y());
  h = add(h, sz(), gamma * b.z());
  double norm = 0;
  for (auto& row : h)
    for (auto& x : row) norm += std::abs(x);
  M3 shifted{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) shifted[i][j] = (i == j ? norm : 0.0) - h[i][j];
  std::array<cd, 3> v{cd(0.3, 0.1), cd(0.5, -0.2), cd(0.7, 0.4)};
  for (int it = 0; it < 20000; ++it) {
    std::array<cd, 3> w{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) w[i] += shifted[i][j] * v[j];
    double n = 0;
    for (auto& x : w) n += std::norm(x);
    n = std::sqrt(n);
    for (int i = 0; i < 3; ++i) v[i] = w[i] / n;
  }
  const Vec3 local(expect(sx(), v).real(), expect(sy(), v).real(), expect(sz(), v).real());
  return axes * local;
}

}  // namespace

TEST_CASE("hamiltonian examples") {
  CHECK(build_hamiltonian(spin_half(), MagneticField()).norm() == 0.0);

  const auto ds2 = spin_one("DS2", 296.6, 300.3, Mat3::Identity());
  const auto es = eigensystem(build_hamiltonian(ds2, MagneticField()));
  CHECK(es.energies[0] == doctest::Approx(-3.7).epsilon(1e-12));
  CHECK(std::abs(es.energies[1]) < 1e-9);
  CHECK(es.energies[2] == doctest::Approx(596.9).epsilon(1e-12));

  const auto half = eigensystem(build_hamiltonian(spin_half(), MagneticField(Vec3(0, 0, 89))));
  CHECK(half.energies[0] == doctest::Approx(-124.6));
  CHECK(half.energies[1] == doctest::Approx(124.6));
}

TEST_CASE("eigensystem conventions and errors") {
  const auto zero = eigensystem(CMatrix::Zero(2, 2));
  CHECK(zero.energies.isZero());
  CHECK((zero.states - CMatrix::Identity(2, 2)).norm() < 1e-12);

  CMatrix diag = CMatrix::Zero(3, 3);
  diag(0, 0) = 596.9;
  diag(1, 1) = -3.7;
  const auto es = eigensystem(diag);
  CHECK(es.energies[0] == doctest::Approx(-3.7));
  CHECK(es.energies[2] == doctest::Approx(596.9));
  for (int j = 0; j < 3; ++j) {
    Eigen::Index k;
    es.states.col(j).cwiseAbs().maxCoeff(&k);
    CHECK(std::abs(es.states(k, j).imag()) < 1e-15);
    CHECK(es.states(k, j).real() > 0.0);
  }

  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(eigensystem(bad), NonHermitianInput);
}

TEST_CASE("resonance frequencies") {
  auto f = resonance_frequencies(spin_half(), MagneticField(Vec3(0, 0, 89)));
  REQUIRE(f.size() == 1);
  CHECK(f[0].frequency == doctest::Approx(249.2).epsilon(1e-12));

  f = resonance_frequencies(spin_half(), MagneticField());
  REQUIRE(f.size() == 1);
  CHECK(f[0].frequency == doctest::Approx(0.0));

  f = resonance_frequencies(spin_one("DS2", 296.6, 300.3, Mat3::Identity()), MagneticField());
  REQUIRE(f.size() == 3);
  CHECK(f[0].frequency == doctest::Approx(3.7));
  CHECK(f[1].frequency == doctest::Approx(596.9));
  CHECK(f[2].frequency == doctest::Approx(600.6));
}

TEST_CASE("dipole expectations") {
  const MagneticField bz(Vec3(0, 0, 50));
  const Vec3 up = dipole_expectation(spin_half(), bz, 1);
  CHECK((up - Vec3(0, 0, 0.5)).norm() < 1e-12);
  CHECK_THROWS_AS(dipole_expectation(spin_half(), bz, 2), IndexOutOfRange);

  const auto nv = nv_center("NV", Vec3::UnitZ());
  const auto zero = eigenstate_for_m(nv, MagneticField(Vec3(0, 0, 3000)), 0);
  CHECK(dipole_expectation(nv, MagneticField(Vec3(0, 0, 3000)), zero).norm() < 1e-9);
}

TEST_CASE("spin-1 ground-state moment matches an explicit-matrix oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const Vec3 nv_axis = Vec3(1, 1, 1).normalized();
  // DS2-like species with arbitrary axes, field along the NV axis.
  const Mat3 axes = axes_from_zx(Vec3(0.3, -0.5, 0.8).normalized(), Vec3(1, 0, 0));
  const auto ds2 = spin_one("DS2", 296.6, 300.3, axes);
  const MagneticField field = MagneticField::along(nv_axis, 89);
  const Vec3 got = dipole_expectation(ds2, field, 0);
  const Vec3 want = oracle_ground_moment(296.6, 300.3, axes, field.gauss, kElectronGamma);
  CHECK((got - want).norm() < 1e-8);

  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 r = random_rotation(rng);
    const double d = 3000 * (u(rng) + 1), e = 200 * u(rng);
    const Vec3 b(300 * u(rng), 300 * u(rng), 300 * u(rng));
    const auto sp = spin_one("x", d, e, r);
    CHECK((dipole_expectation(sp, MagneticField(b), 0) - oracle_ground_moment(d, e, r, b, kElectronGamma)).norm() <
          1e-7);
  }
}

TEST_CASE("spin-model invariants") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 axes = random_rotation(rng);
    const Vec3 b(400 * u(rng), 400 * u(rng), 400 * u(rng));
    const auto sp = spin_one("s", 2870 * (u(rng) + 1.2), 100 * u(rng), axes);
    const CMatrix h = build_hamiltonian(sp, MagneticField(b));
    CHECK((h - h.adjoint()).norm() == 0.0);
    CHECK(std::abs(h.trace() - std::complex<double>(2.0 * sp.zfs_d, 0.0)) < 1e-9);

    const auto es = eigensystem(h);
    const CMatrix u_mat = es.states;
    CHECK((u_mat.adjoint() * u_mat - CMatrix::Identity(3, 3)).norm() < 1e-9);
    const CMatrix rebuilt = u_mat * es.energies.cast<std::complex<double>>().asDiagonal() * u_mat.adjoint();
    CHECK((rebuilt - h).norm() <= 1e-9 * h.norm());
    for (int i = 1; i < 3; ++i) CHECK(es.energies[i] >= es.energies[i - 1]);

    // rotating the field and the principal frame together
    const Mat3 rot = random_rotation(rng);
    const auto rotated = spin_one("s", sp.zfs_d, sp.zfs_e, rot * axes);
    const auto es_rot = eigensystem(build_hamiltonian(rotated, MagneticField(rot * b)));
    CHECK((es_rot.energies - es.energies).cwiseAbs().maxCoeff() < 1e-9);

    // spin-1/2: isotropic Zeeman splitting and moments along ±B/2
    const auto half = spin_half();
    const auto f = resonance_frequencies(half, MagneticField(b));
    CHECK(f[0].frequency == doctest::Approx(kElectronGamma * b.norm()).epsilon(1e-12));
    const Vec3 lo = dipole_expectation(half, MagneticField(b), 0);
    const Vec3 hi = dipole_expectation(half, MagneticField(b), 1);
    CHECK((lo + 0.5 * b.normalized()).norm() < 1e-9);
    CHECK((hi - 0.5 * b.normalized()).norm() < 1e-9);
  }
}

TEST_CASE("species validation") {
  auto sp = spin_half();
  sp.zfs_d = 1.0;
  CHECK_THROWS_AS(sp.validate(), InvalidSpecies);
  sp = spin_half();
  sp.multiplicity = 4;
  CHECK_THROWS_AS(sp.validate(), InvalidSpecies);
  sp = spin_half();
  sp.axes(0, 0) = 1.0 + 1e-6;
  CHECK_THROWS_AS(sp.validate(), InvalidSpecies);
  sp = spin_half();
  sp.axes.col(2) *= -1.0;
  CHECK_THROWS_AS(sp.validate(), InvalidSpecies);
  sp = spin_half();
  sp.gamma = 0.0;
  CHECK_THROWS_AS(sp.validate(), InvalidSpecies);
}
