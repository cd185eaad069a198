#include "spinsense/entangle_sense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "spinsense/errors.hpp"

namespace spinsense {

// ---------------------------------------------------------------------------
// bath sampling

void BathConfig::validate() const {
  if (!(density >= 0.0) || !std::isfinite(density)) throw InvalidInput("bath density must be >= 0");
  if (extent < 0.0 || !std::isfinite(extent)) throw InvalidInput("bath extent must be >= 0");
  if (!(depth > 0.0)) throw InvalidInput("sensor depth must be positive");
  if (realizations < 1) throw InvalidInput("need at least one bath realization");
  if (multiplicity != 2 && multiplicity != 3) throw InvalidInput("bath multiplicity must be 2 or 3");
}

double BathConfig::effective_extent(double separation) const {
  return extent > 0.0 ? extent : auto_extent(depth, separation);
}

SurfaceBath sample_bath(const BathConfig& config, std::size_t index) {
  config.validate();
  SurfaceBath bath;
  if (config.density == 0.0) return bath;
  const double half = config.effective_extent();
  auto rng = substream(config.seed, index);
  std::poisson_distribution<long> count_dist(config.density * 4.0 * half * half);
  std::uniform_real_distribution<double> pos(-half, half);
  std::uniform_int_distribution<int> state(0, config.multiplicity - 1);
  const long n = count_dist(rng);
  bath.spins.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    BathSpin s;
    const double x = pos(rng);
    const double y = pos(rng);
    s.position = Vec3(x, y, 0.0);
    s.state = state(rng);
    bath.spins.push_back(s);
  }
  return bath;
}

double truncation_fraction(double depth, double half_width) {
  // ∫_R^∞ ρ dρ / (ρ² + d²)³ relative to the full integral, for ΣA², then
  // converted to the change in S = sqrt(ΣA²).
  const double q = depth * depth / (depth * depth + half_width * half_width);
  const double lost_sq = q * q;
  return 1.0 - std::sqrt(1.0 - lost_sq);
}

double auto_extent(double depth, double separation) {
  if (!(depth > 0.0)) throw InvalidInput("depth must be positive");
  double half = 5.0 * depth + 0.5 * separation;
  while (truncation_fraction(depth, half - 0.5 * separation) >= 0.01) half *= 1.25;
  return half;
}

// ---------------------------------------------------------------------------
// states

EntangledState EntangledState::make(StateKind kind) {
  using R = TransitionRole;
  switch (kind) {
    case StateKind::Single: return {kind, 1, 0, R::SingleQuantum, R::SingleQuantum};
    case StateKind::Psi1: return {kind, 1, 1, R::DoubleQuantum, R::DoubleQuantum};
    case StateKind::Psi2: return {kind, 1, -1, R::DoubleQuantum, R::DoubleQuantum};
    case StateKind::PhiSQ: return {kind, 1, -1, R::SingleQuantum, R::SingleQuantum};
    case StateKind::PhiDQ: return {kind, 1, -1, R::DoubleQuantum, R::SingleQuantum};
  }
  throw InvalidInput("unknown state kind");
}

EntangledState EntangledState::from_name(const std::string& name) {
  if (name == "single") return make(StateKind::Single);
  if (name == "psi1") return make(StateKind::Psi1);
  if (name == "psi2") return make(StateKind::Psi2);
  if (name == "phi_SQ") return make(StateKind::PhiSQ);
  if (name == "phi_DQ") return make(StateKind::PhiDQ);
  throw InvalidInput("unknown entangled state '" + name + "'");
}

std::string EntangledState::name() const {
  switch (kind) {
    case StateKind::Single: return "single";
    case StateKind::Psi1: return "psi1";
    case StateKind::Psi2: return "psi2";
    case StateKind::PhiSQ: return "phi_SQ";
    case StateKind::PhiDQ: return "phi_DQ";
  }
  return "unknown";
}

StatePair transition_for_role(const SpinSpecies& species, const MagneticField& field,
                              TransitionRole role) {
  if (species.multiplicity == 2) return {1, 0};
  const std::size_t minus = eigenstate_for_m(species, field, -1.0);
  const std::size_t from = role == TransitionRole::SingleQuantum ? eigenstate_for_m(species, field, 0.0)
                                                                 : eigenstate_for_m(species, field, 1.0);
  if (from == minus) throw InvalidInput(species.name + ": ms labels are ambiguous in this field");
  return {from, minus};
}

double effective_coupling(const EntangledState& state, double a1, double a2) {
  return std::abs(state.w1 * a1 + state.w2 * a2);
}

// ---------------------------------------------------------------------------
// geometry and coupling model

SensorPairGeometry SensorPairGeometry::symmetric(double depth, double separation, double azimuth,
                                                 SpinSpecies s1, SpinSpecies s2) {
  SensorPairGeometry g;
  g.sensor1 = std::move(s1);
  g.sensor2 = std::move(s2);
  const Vec3 u(std::cos(azimuth), std::sin(azimuth), 0.0);
  g.position1 = Vec3(0, 0, -depth) - 0.5 * separation * u;
  g.position2 = Vec3(0, 0, -depth) + 0.5 * separation * u;
  g.validate();
  return g;
}

void SensorPairGeometry::validate() const {
  sensor1.validate();
  sensor2.validate();
  if (!(position1.z() < 0.0) || !(position2.z() < 0.0))
    throw InvalidInput("sensors must sit below the interface (z < 0)");
  if (!position1.allFinite() || !position2.allFinite()) throw InvalidInput("sensor positions must be finite");
}

PairCouplingModel::PairCouplingModel(const SensorPairGeometry& geom, const EntangledState& state,
                                     const SpinSpecies& target, const MagneticField& field,
                                     double prefactor)
    : state_(state), position1_(geom.position1), position2_(geom.position2), prefactor_(prefactor) {
  geom.validate();
  moment1_ = transition_moment(geom.sensor1, field, transition_for_role(geom.sensor1, field, state.role1));
  moment2_ = transition_moment(geom.sensor2, field, transition_for_role(geom.sensor2, field, state.role2));
  target_moment_ = transition_moment(target, field, transition_for_role(target, field, TransitionRole::SingleQuantum));
}

std::pair<double, double> PairCouplingModel::sensor_couplings(const Vec3& p) const {
  const double a1 = coupling_from_moments(moment1_, target_moment_, GeometryVector(p - position1_), prefactor_);
  const double a2 = state_.w2 == 0
                        ? 0.0
                        : coupling_from_moments(moment2_, target_moment_, GeometryVector(p - position2_), prefactor_);
  return {a1, a2};
}

double PairCouplingModel::effective(const Vec3& p) const {
  const auto [a1, a2] = sensor_couplings(p);
  return effective_coupling(state_, a1, a2);
}

// ---------------------------------------------------------------------------
// maps and areas

void GridSpec::validate() const {
  if (nx < 1 || ny < 1) throw InvalidInput("grid needs at least one point per axis");
  if ((nx > 1 && !(x_max > x_min)) || (ny > 1 && !(y_max > y_min)))
    throw InvalidInput("grid spacing must be positive");
}

CouplingMap coupling_map(const SensorPairGeometry& geom, const EntangledState& state,
                         const SpinSpecies& target, const MagneticField& field, const GridSpec& grid,
                         double prefactor, unsigned threads) {
  grid.validate();
  const PairCouplingModel model(geom, state, target, field, prefactor);
  CouplingMap map;
  map.xs.resize(grid.nx);
  map.ys.resize(grid.ny);
  for (std::size_t i = 0; i < grid.nx; ++i) map.xs[i] = grid.x_min + grid.dx() * static_cast<double>(i);
  for (std::size_t j = 0; j < grid.ny; ++j) map.ys[j] = grid.y_min + grid.dy() * static_cast<double>(j);
  map.values.assign(grid.nx * grid.ny, 0.0);
  parallel_for(grid.ny, threads, [&](std::size_t iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix)
      map.values[iy * grid.nx + ix] = model.effective(Vec3(map.xs[ix], map.ys[iy], grid.z));
  });
  return map;
}

SensingArea effective_sensing_area(std::span<const double> couplings, double threshold) {
  if (couplings.empty()) throw EmptyInput("effective_sensing_area needs at least one coupling");
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidInput("threshold must lie in (0, 1)");
  std::vector<double> sq(couplings.size());
  std::transform(couplings.begin(), couplings.end(), sq.begin(), [](double a) { return a * a; });
  std::stable_sort(sq.begin(), sq.end(), std::greater<>());
  CompensatedSum total;
  for (double v : sq) total.add(v);
  const double target = threshold * threshold * total.value() * (1.0 - 1e-12);
  SensingArea out;
  out.s_total = std::sqrt(total.value());
  CompensatedSum running;
  for (std::size_t i = 0; i < sq.size(); ++i) {
    running.add(sq[i]);
    if (running.value() >= target) {
      out.n_eff = i + 1;
      return out;
    }
  }
  out.n_eff = sq.size();
  return out;
}

double map_sensing_area(const CouplingMap& map, double threshold) {
  const double dx = map.xs.size() > 1 ? map.xs[1] - map.xs[0] : 1.0;
  const double dy = map.ys.size() > 1 ? map.ys[1] - map.ys[0] : 1.0;
  return static_cast<double>(effective_sensing_area(map.values, threshold).n_eff) * dx * dy;
}

std::vector<ResolutionRow> resolution_scan(std::span<const double> depths,
                                           std::span<const double> separations,
                                           const ResolutionScanConfig& config) {
  if (config.realizations < 1) throw InvalidInput("need at least one realization");
  if (!(config.density > 0.0)) throw InvalidInput("density must be positive");
  struct Task {
    double d, s;
  };
  std::vector<Task> tasks;
  for (double d : depths)
    for (double s : separations) {
      if (!(d > 0.0) || s < 0.0) throw InvalidInput("depths must be positive and separations >= 0");
      tasks.push_back({d, s});
    }
  const auto single_state = EntangledState::make(StateKind::Single);
  const auto psi2_state = EntangledState::make(StateKind::Psi2);

  std::vector<ResolutionRow> rows(tasks.size());
  const auto n_real = static_cast<std::size_t>(config.realizations);
  // one slot per (row, realization) so any thread count yields the same sums
  std::vector<double> n_single(tasks.size() * n_real), n_psi2(tasks.size() * n_real);
  std::vector<PairCouplingModel> single_models, psi2_models;
  std::vector<BathConfig> baths;
  for (std::size_t row = 0; row < tasks.size(); ++row) {
    const auto geom = SensorPairGeometry::symmetric(tasks[row].d, tasks[row].s, config.azimuth,
                                                    config.sensor, config.sensor);
    single_models.emplace_back(geom, single_state, config.target, config.field, config.prefactor);
    psi2_models.emplace_back(geom, psi2_state, config.target, config.field, config.prefactor);
    BathConfig bc;
    bc.density = config.density;
    bc.depth = tasks[row].d;
    bc.extent = config.extent > 0.0 ? config.extent : auto_extent(tasks[row].d, tasks[row].s);
    bc.realizations = config.realizations;
    bc.seed = substream(config.seed, row)();
    bc.multiplicity = config.target.multiplicity;
    baths.push_back(bc);
  }

  parallel_for(tasks.size() * n_real, config.threads, [&](std::size_t k) {
    const std::size_t row = k / n_real, r = k % n_real;
    const SurfaceBath bath = sample_bath(baths[row], r);
    if (bath.spins.empty()) {
      n_single[k] = n_psi2[k] = 0.0;
      return;
    }
    std::vector<double> a_single, a_psi2;
    a_single.reserve(bath.spins.size());
    a_psi2.reserve(bath.spins.size());
    for (const auto& spin : bath.spins) {
      const auto [a1, a2] = psi2_models[row].sensor_couplings(spin.position);
      a_single.push_back(single_models[row].effective(spin.position));
      a_psi2.push_back(effective_coupling(psi2_state, a1, a2));
    }
    n_single[k] = static_cast<double>(effective_sensing_area(a_single, config.threshold).n_eff);
    n_psi2[k] = static_cast<double>(effective_sensing_area(a_psi2, config.threshold).n_eff);
  });

  for (std::size_t row = 0; row < tasks.size(); ++row) {
    CompensatedSum s1, s2;
    for (std::size_t r = 0; r < n_real; ++r) {
      s1.add(n_single[row * n_real + r]);
      s2.add(n_psi2[row * n_real + r]);
    }
    auto& out = rows[row];
    out.depth = tasks[row].d;
    out.separation = tasks[row].s;
    out.area_single = s1.value() / static_cast<double>(n_real) / config.density;
    out.area_psi2 = s2.value() / static_cast<double>(n_real) / config.density;
    out.ratio = out.area_psi2 > 0.0 ? out.area_single / out.area_psi2 : 0.0;
  }
  return rows;
}

}  // namespace spinsense
