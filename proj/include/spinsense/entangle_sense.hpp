#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spinsense/bath.hpp"
#include "spinsense/dipolar.hpp"
#include "spinsense/spin_model.hpp"

namespace spinsense {

enum class StateKind { Single, Psi1, Psi2, PhiSQ, PhiDQ };

/// Which sensor transition a state uses. Spin-1/2 sensors have only one.
enum class TransitionRole {
  SingleQuantum,  ///< ms 0 <-> -1
  DoubleQuantum,  ///< ms +1 <-> -1
};

/// Two-sensor state and its coupling combination rule |w₁A₁ + w₂A₂|.
struct EntangledState {
  StateKind kind = StateKind::Single;
  int w1 = 1;
  int w2 = 0;
  TransitionRole role1 = TransitionRole::SingleQuantum;
  TransitionRole role2 = TransitionRole::SingleQuantum;

  static EntangledState make(StateKind kind);
  /// Accepts "single", "psi1", "psi2", "phi_SQ", "phi_DQ".
  static EntangledState from_name(const std::string& name);
  std::string name() const;
};

/// Transition (from, to) on `species` implementing `role` in `field`.
/// For spin-1/2 this is upper -> lower regardless of role.
StatePair transition_for_role(const SpinSpecies& species, const MagneticField& field,
                              TransitionRole role);

/// |w₁A₁ + w₂A₂|, MHz.
double effective_coupling(const EntangledState& state, double a1, double a2);

/// Two sensors below a flat interface at z = 0. Depth is measured to the
/// pair midpoint; separation is the horizontal distance.
struct SensorPairGeometry {
  SpinSpecies sensor1;
  SpinSpecies sensor2;
  Vec3 position1 = Vec3(0, 0, -9);
  Vec3 position2 = Vec3(0, 0, -9);

  /// Sensors at depth d, horizontally separated by s along azimuth φ
  /// (radians from lab x), centered under the origin.
  static SensorPairGeometry symmetric(double depth, double separation, double azimuth,
                                      SpinSpecies s1, SpinSpecies s2);

  double depth() const { return -0.5 * (position1.z() + position2.z()); }
  double separation() const { return (position2 - position1).head<2>().norm(); }
  Vec3 midpoint() const { return 0.5 * (position1 + position2); }
  void validate() const;
};

/// Per-sensor couplings to a target species at arbitrary positions, with the
/// transition moments fixed once for the field and state.
class PairCouplingModel {
 public:
  PairCouplingModel(const SensorPairGeometry& geom, const EntangledState& state,
                    const SpinSpecies& target, const MagneticField& field,
                    double prefactor = kDipolePrefactor);

  std::pair<double, double> sensor_couplings(const Vec3& target_position) const;
  double effective(const Vec3& target_position) const;

  const EntangledState& state() const { return state_; }

 private:
  EntangledState state_;
  Vec3 position1_, position2_;
  Vec3 moment1_, moment2_, target_moment_;
  double prefactor_;
};

struct GridSpec {
  double x_min = -20, x_max = 20;
  double y_min = -20, y_max = 20;
  std::size_t nx = 81, ny = 81;
  double z = 0.0;

  void validate() const;
  double dx() const { return nx > 1 ? (x_max - x_min) / static_cast<double>(nx - 1) : 0.0; }
  double dy() const { return ny > 1 ? (y_max - y_min) / static_cast<double>(ny - 1) : 0.0; }
};

struct CouplingMap {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> values;  ///< row-major, values[iy * nx + ix], MHz

  double at(std::size_t ix, std::size_t iy) const { return values[iy * xs.size() + ix]; }
};

CouplingMap coupling_map(const SensorPairGeometry& geom, const EntangledState& state,
                         const SpinSpecies& target, const MagneticField& field,
                         const GridSpec& grid, double prefactor = kDipolePrefactor,
                         unsigned threads = 1);

inline constexpr double kSensingThreshold = 0.70;

struct SensingArea {
  std::size_t n_eff = 0;
  double s_total = 0.0;  ///< sqrt(ΣA²), MHz
};

/// Fewest strongest spins whose quadrature sum reaches `threshold` of the
/// total. Equal couplings keep their input order.
SensingArea effective_sensing_area(std::span<const double> couplings,
                                   double threshold = kSensingThreshold);

/// Map-derived area: cells needed to reach the threshold times cell area.
double map_sensing_area(const CouplingMap& map, double threshold = kSensingThreshold);

struct ResolutionScanConfig {
  double density = 0.01;
  int realizations = 1000;
  std::uint64_t seed = 1;
  double threshold = kSensingThreshold;
  double azimuth = 0.0;  ///< separation direction, radians
  double extent = 0.0;   ///< 0 selects the automatic extent per row
  SpinSpecies sensor = spin_half("sensor");
  SpinSpecies target = spin_half("bath");
  MagneticField field;
  double prefactor = kDipolePrefactor;
  unsigned threads = 1;
};

struct ResolutionRow {
  double depth = 0.0;
  double separation = 0.0;
  double area_single = 0.0;  ///< nm², mean N_eff / density
  double area_psi2 = 0.0;
  double ratio = 0.0;  ///< area_single / area_psi2
};

/// Mean effective sensing areas (single sensor vs psi2) per (d, s) row.
std::vector<ResolutionRow> resolution_scan(std::span<const double> depths,
                                           std::span<const double> separations,
                                           const ResolutionScanConfig& config);

}  // namespace spinsense
