#include "spinsense/dipolar.hpp"

#include <cmath>

#include "spinsense/errors.hpp"

namespace spinsense {

GeometryVector::GeometryVector(const Vec3& r) : r_(r), length_(r.norm()) {
  if (!r.allFinite()) throw InvalidInput("displacement must be finite");
  if (length_ < kMinSeparation)
    throw DegenerateGeometry("spins closer than " + std::to_string(kMinSeparation) + " nm");
}

double pair_interaction_nu(const Vec3& phi1, const Vec3& phi2, const GeometryVector& geom,
                           double prefactor) {
  const double r = geom.length();
  const Vec3 u = geom.vec() / r;
  return prefactor / (r * r * r) * (phi1.dot(phi2) - 3.0 * phi1.dot(u) * phi2.dot(u));
}

Vec3 transition_moment(const SpinSpecies& species, const MagneticField& field, StatePair t) {
  const auto n = static_cast<std::size_t>(species.multiplicity);
  if (t.from >= n || t.to >= n)
    throw IndexOutOfRange("transition index out of range for " + species.name);
  if (t.from == t.to) throw InvalidInput("transition must connect two different states");
  const auto phi = dipole_moments(species, field);
  return phi[t.from] - phi[t.to];
}

double measurable_coupling(const SpinSpecies& sensor, const SpinSpecies& target,
                           const TransitionPair& trans, const MagneticField& field,
                           const GeometryVector& geom, double prefactor) {
  const auto ns = static_cast<std::size_t>(sensor.multiplicity);
  const auto nt = static_cast<std::size_t>(target.multiplicity);
  if (trans.sensor.from >= ns || trans.sensor.to >= ns || trans.target.from >= nt ||
      trans.target.to >= nt)
    throw IndexOutOfRange("transition index out of range");
  if (trans.sensor.from == trans.sensor.to || trans.target.from == trans.target.to)
    throw InvalidInput("transition must connect two different states");
  const auto ps = dipole_moments(sensor, field);
  const auto pt = dipole_moments(target, field);
  const auto nu = [&](std::size_t js, std::size_t jt) {
    return pair_interaction_nu(ps[js], pt[jt], geom, prefactor);
  };
  const auto [j1, j1p] = trans.sensor;
  const auto [j2, j2p] = trans.target;
  return (nu(j1, j2) - nu(j1, j2p)) - (nu(j1p, j2) - nu(j1p, j2p));
}

double coupling_from_moments(const Vec3& sensor_moment, const Vec3& target_moment,
                             const GeometryVector& geom, double prefactor) {
  return pair_interaction_nu(sensor_moment, target_moment, geom, prefactor);
}

double distance_from_coupling(double coupling_mhz, double angular_factor, double prefactor) {
  if (!(coupling_mhz > 0.0) || !std::isfinite(coupling_mhz))
    throw InvalidInput("coupling must be positive");
  if (angular_factor == 0.0 || !std::isfinite(angular_factor))
    throw InvalidInput("angular factor must be nonzero");
  return std::cbrt(prefactor * std::abs(angular_factor) / coupling_mhz);
}

}  // namespace spinsense
