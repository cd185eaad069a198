#pragma once

#include <cstddef>

#include "spinsense/numerics.hpp"
#include "spinsense/spin_model.hpp"

namespace spinsense {

/// Dipolar coupling constant for two g = 2 electron spins, MHz·nm³.
inline constexpr double kDipolePrefactor = 52.04;
/// Separations below this raise DegenerateGeometry, nm.
inline constexpr double kMinSeparation = 0.05;

/// Lab-frame displacement between two spins, nm. Construction rejects
/// near-coincident spins.
class GeometryVector {
 public:
  explicit GeometryVector(const Vec3& r);
  const Vec3& vec() const { return r_; }
  double length() const { return length_; }

 private:
  Vec3 r_;
  double length_;
};

struct StatePair {
  std::size_t from = 0;
  std::size_t to = 1;
};

/// Sensor and target transitions j -> j'.
struct TransitionPair {
  StatePair sensor;
  StatePair target;
};

/// ν = (a/r³)[Φ₁·Φ₂ − 3(Φ₁·r̂)(Φ₂·r̂)], signed, MHz.
double pair_interaction_nu(const Vec3& phi1, const Vec3& phi2, const GeometryVector& geom,
                           double prefactor = kDipolePrefactor);

/// Φ_j − Φ_j' for one transition of `species` in `field`.
Vec3 transition_moment(const SpinSpecies& species, const MagneticField& field, StatePair t);

/// Measurable coupling (ν₁₂ − ν₁₂′) − (ν₁′₂ − ν₁′₂′), signed, MHz.
double measurable_coupling(const SpinSpecies& sensor, const SpinSpecies& target,
                           const TransitionPair& trans, const MagneticField& field,
                           const GeometryVector& geom, double prefactor = kDipolePrefactor);

/// Same quantity from precomputed transition moments. The four-term
/// difference collapses to ν(ΔΦ₁, ΔΦ₂) because ν is bilinear.
double coupling_from_moments(const Vec3& sensor_moment, const Vec3& target_moment,
                             const GeometryVector& geom, double prefactor = kDipolePrefactor);

/// r = (a·|factor| / A)^(1/3), nm.
double distance_from_coupling(double coupling_mhz, double angular_factor,
                              double prefactor = kDipolePrefactor);

/// Angular factor for an estimate from an NV single-quantum (0 <-> -1)
/// coupling to a spin-1/2 target displaced along the field axis: the axial
/// value 2 times the unit NV moment change times the ½ target moment.
inline constexpr double kNvAxialTargetFactor = 1.0;

}  // namespace spinsense
