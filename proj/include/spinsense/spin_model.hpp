#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinsense/numerics.hpp"

namespace spinsense {

using CMatrix = Eigen::MatrixXcd;

/// Free-electron gyromagnetic ratio, MHz/G.
inline constexpr double kElectronGamma = 2.8;
/// NV ground-state zero-field splitting, MHz.
inline constexpr double kNvZeroFieldSplitting = 2870.0;

/// A spin's multiplicity, zero-field splitting and principal frame.
///
/// `axes` holds the principal x, y, z unit vectors as columns, expressed in
/// the lab frame. Energies are in MHz, fields in Gauss.
struct SpinSpecies {
  std::string name = "spin-1/2";
  int multiplicity = 2;
  double zfs_d = 0.0;
  double zfs_e = 0.0;
  Mat3 axes = Mat3::Identity();
  double gamma = kElectronGamma;

  double spin() const { return 0.5 * (multiplicity - 1); }
  Vec3 principal_z() const { return axes.col(2); }

  /// Throws InvalidSpecies when an invariant is broken.
  void validate() const;
};

/// Right-handed orthonormal triad with the given z direction. The x axis is
/// the lab axis least aligned with z, orthogonalized.
Mat3 axes_from_z(const Vec3& z);
/// Right-handed triad from a z direction and a hint for x (orthogonalized).
Mat3 axes_from_zx(const Vec3& z, const Vec3& x_hint);

SpinSpecies spin_half(std::string name = "spin-1/2", double gamma = kElectronGamma);
SpinSpecies spin_one(std::string name, double d, double e, const Mat3& axes,
                     double gamma = kElectronGamma);
/// NV center along `axis` with D = 2870 MHz, E = 0.
SpinSpecies nv_center(std::string name, const Vec3& axis, double gamma = kElectronGamma);

struct MagneticField {
  Vec3 gauss = Vec3::Zero();

  MagneticField() = default;
  explicit MagneticField(const Vec3& g);
  static MagneticField along(const Vec3& direction, double magnitude_gauss);
  double magnitude() const { return gauss.norm(); }
};

/// Spin matrices in the |m = S⟩ ... |m = -S⟩ basis.
struct SpinOperators {
  CMatrix x, y, z;
};
SpinOperators spin_operators(int multiplicity);

/// H = D Sz² + E (Sx² - Sy²) + γ B·S with operators in the principal frame.
CMatrix build_hamiltonian(const SpinSpecies& species, const MagneticField& field);

struct EigenSystem {
  Eigen::VectorXd energies;  ///< ascending, MHz
  CMatrix states;            ///< eigenvector columns
};

/// Hermitian eigendecomposition with the largest-magnitude component of every
/// eigenvector made real and positive.
EigenSystem eigensystem(const CMatrix& h);

struct Transition {
  std::size_t lower = 0;
  std::size_t upper = 0;
  double frequency = 0.0;  ///< MHz, >= 0
};

/// All pairwise level differences, sorted by frequency.
std::vector<Transition> resonance_frequencies(const SpinSpecies& species,
                                              const MagneticField& field);

/// Lab-frame ⟨S⟩ of eigenstate `j`.
Vec3 dipole_expectation(const SpinSpecies& species, const MagneticField& field, std::size_t j);

/// Lab-frame ⟨S⟩ of every eigenstate, ascending energy order.
std::vector<Vec3> dipole_moments(const SpinSpecies& species, const MagneticField& field);

/// Index of the eigenstate with the largest weight on |m⟩ (principal-frame
/// basis). `m` is the magnetic quantum number, e.g. -1, 0, +1 or ±0.5.
std::size_t eigenstate_for_m(const SpinSpecies& species, const MagneticField& field, double m);

}  // namespace spinsense
