#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "spinsense/entangle_sense.hpp"
#include "spinsense/errors.hpp"

using namespace spinsense;

namespace {

// Smallest subset size whose squared couplings reach threshold² of the total,
// by exhaustive enumeration.
std::size_t brute_force_n_eff(const std::vector<double>& a, double threshold) {
  const std::size_t n = a.size();
  double total = 0;
  for (double x : a) total += x * x;
  const double target = threshold * threshold * total * (1.0 - 1e-12);
  std::size_t best = n;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const auto k = static_cast<std::size_t>(__builtin_popcount(mask));
    if (k >= best) continue;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) s += a[i] * a[i];
    if (s >= target) best = k;
  }
  return best;
}

SensorPairGeometry half_pair(double d, double s) {
  return SensorPairGeometry::symmetric(d, s, 0.0, spin_half("s1"), spin_half("s2"));
}

}  // namespace

TEST_CASE("entangled state bookkeeping") {
  const auto psi1 = EntangledState::from_name("psi1");
  const auto psi2 = EntangledState::from_name("psi2");
  CHECK(effective_coupling(psi2, 0.100, 0.060) == doctest::Approx(0.040));
  CHECK(effective_coupling(psi1, 0.100, 0.060) == doctest::Approx(0.160));
  CHECK(effective_coupling(psi2, 0.07, 0.07) == 0.0);
  CHECK(effective_coupling(EntangledState::from_name("phi_DQ"), 2 * 0.013, 0.027) == doctest::Approx(0.001));

  for (const char* name : {"single", "psi1", "psi2", "phi_SQ", "phi_DQ"})
    CHECK(EntangledState::from_name(name).name() == name);
  CHECK_THROWS_AS(EntangledState::from_name("psi3"), InvalidInput);

  const auto single = EntangledState::from_name("single");
  CHECK(single.w1 == 1);
  CHECK(single.w2 == 0);
  CHECK(psi2.w2 == -1);
  CHECK(EntangledState::from_name("phi_SQ").role1 == TransitionRole::SingleQuantum);
  CHECK(EntangledState::from_name("phi_DQ").role1 == TransitionRole::DoubleQuantum);
}

TEST_CASE("NV transitions by role") {
  const auto nv = nv_center("NV", Vec3(1, 1, 1));
  const auto field = MagneticField::along(Vec3(1, 1, 1), 89);
  const auto sq = transition_for_role(nv, field, TransitionRole::SingleQuantum);
  const auto dq = transition_for_role(nv, field, TransitionRole::DoubleQuantum);
  CHECK(sq.from == eigenstate_for_m(nv, field, 0));
  CHECK(sq.to == eigenstate_for_m(nv, field, -1));
  CHECK(dq.from == eigenstate_for_m(nv, field, 1));
  // DQ moment change is twice the SQ one along the axis
  const Vec3 m_sq = transition_moment(nv, field, sq), m_dq = transition_moment(nv, field, dq);
  CHECK((m_dq - 2.0 * m_sq).norm() < 1e-6);
}

TEST_CASE("coupling maps") {
  const MagneticField bz(Vec3(0, 0, 100));
  const auto target = spin_half("t");
  GridSpec grid;
  grid.x_min = grid.y_min = -20;
  grid.x_max = grid.y_max = 20;
  grid.nx = grid.ny = 41;

  SUBCASE("single sensor map is axially symmetric") {
    const auto geom = SensorPairGeometry::symmetric(9, 0, 0, spin_half(), spin_half());
    const auto map = coupling_map(geom, EntangledState::from_name("single"), target, bz, grid);
    for (std::size_t k = 0; k < 41; ++k) {
      CHECK(map.at(k, 20) == doctest::Approx(map.at(20, k)).epsilon(1e-12));
      CHECK(map.at(k, 20) == doctest::Approx(map.at(40 - k, 20)).epsilon(1e-12));
    }
  }
  SUBCASE("psi2 null on the bisecting plane and mirror symmetry") {
    const auto geom = half_pair(9, 4);
    const auto psi2 = coupling_map(geom, EntangledState::from_name("psi2"), target, bz, grid);
    const auto psi1 = coupling_map(geom, EntangledState::from_name("psi1"), target, bz, grid);
    for (std::size_t iy = 0; iy < 41; ++iy) {
      CHECK(psi2.at(20, iy) < 1e-15);
      for (std::size_t ix = 0; ix < 41; ++ix) {
        CHECK(psi2.at(ix, iy) == doctest::Approx(psi2.at(40 - ix, iy)).epsilon(1e-12));
        CHECK(psi1.at(ix, iy) == doctest::Approx(psi1.at(40 - ix, iy)).epsilon(1e-12));
      }
    }
    // enhanced and suppressed regions both occur
    int enhanced = 0, suppressed = 0;
    for (std::size_t k = 0; k < psi1.values.size(); ++k) {
      if (psi1.values[k] > psi2.values[k] + 1e-12) ++enhanced;
      if (psi2.values[k] > psi1.values[k] + 1e-12) ++suppressed;
    }
    CHECK(enhanced > 0);
    CHECK(suppressed > 0);
  }
  SUBCASE("triangle bounds") {
    const auto geom = half_pair(7, 5);
    const PairCouplingModel model(geom, EntangledState::from_name("psi1"), target, bz);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-25, 25);
    for (int i = 0; i < 500; ++i) {
      const auto [a1, a2] = model.sensor_couplings(Vec3(u(rng), u(rng), 0));
      const double lo = std::abs(std::abs(a1) - std::abs(a2)), hi = std::abs(a1) + std::abs(a2);
      for (double v : {std::abs(a1 + a2), std::abs(a1 - a2)}) {
        CHECK(v >= lo - 1e-15);
        CHECK(v <= hi + 1e-15);
      }
    }
  }
  SUBCASE("grid point on a sensor") {
    GridSpec g;
    g.nx = g.ny = 1;
    g.x_min = g.x_max = 0;
    g.y_min = g.y_max = 0;
    g.z = -9;
    const auto geom = SensorPairGeometry::symmetric(9, 0, 0, spin_half(), spin_half());
    CHECK_THROWS_AS(coupling_map(geom, EntangledState::from_name("single"), target, bz, g), DegenerateGeometry);
  }
}

TEST_CASE("effective sensing area") {
  const std::vector<double> one{0.3};
  for (double thr : {0.1, 0.5, 0.99}) CHECK(effective_sensing_area(one, thr).n_eff == 1);
  for (std::size_t n : {1u, 7u, 10u, 100u, 333u}) {
    const std::vector<double> eq(n, 0.05);
    CHECK(effective_sensing_area(eq, 0.7).n_eff == static_cast<std::size_t>(std::ceil(0.49 * n - 1e-9)));
  }
  CHECK_THROWS_AS(effective_sensing_area(std::vector<double>{}), EmptyInput);
  CHECK_THROWS_AS(effective_sensing_area(one, 1.5), InvalidInput);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + trial % 20;
    std::vector<double> a(n);
    for (auto& x : a) x = std::pow(u(rng), 3) * (u(rng) < 0.5 ? -1 : 1);
    const double thr = 0.2 + 0.75 * u(rng);
    const auto got = effective_sensing_area(a, thr).n_eff;
    CHECK(got == brute_force_n_eff(a, thr));
    std::vector<double> scaled(a);
    for (auto& x : scaled) x *= 37.5;
    CHECK(effective_sensing_area(scaled, thr).n_eff == got);
    CHECK(effective_sensing_area(a, thr * 0.8).n_eff <= got);
  }
}

TEST_CASE("resolution scan") {
  ResolutionScanConfig cfg;
  cfg.realizations = 150;
  cfg.seed = 42;
  cfg.field = MagneticField::along(Vec3(std::sin(0.9553), 0, std::cos(0.9553)), 89);
  const std::vector<double> depth{9.0};
  const std::vector<double> seps{0.5, 16.0};
  const auto rows = resolution_scan(depth, seps, cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ratio > 1.0);
  CHECK(rows[1].ratio <= 1.0);

  const std::vector<double> one_sep{4.0};
  const auto a = resolution_scan(depth, one_sep, cfg);
  cfg.threads = 3;
  const auto b = resolution_scan(depth, one_sep, cfg);
  CHECK(a[0].area_single == b[0].area_single);
  CHECK(a[0].area_psi2 == b[0].area_psi2);
}
