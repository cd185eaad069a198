#include "spinsense/spin_model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "spinsense/errors.hpp"

namespace spinsense {

namespace {

constexpr double kAxesTolerance = 1e-10;
constexpr double kHermitianTolerance = 1e-9;

void fix_phase(CMatrix& states) {
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    Eigen::Index best = 0;
    double best_mag = -1.0;
    for (Eigen::Index r = 0; r < states.rows(); ++r) {
      const double mag = std::abs(states(r, c));
      // ties resolve to the lowest row index
      if (mag > best_mag * (1.0 + 1e-12)) {
        best_mag = mag;
        best = r;
      }
    }
    if (best_mag > 0.0) states.col(c) *= std::conj(states(best, c)) / best_mag;
  }
}

}  // namespace

void SpinSpecies::validate() const {
  if (multiplicity != 2 && multiplicity != 3)
    throw InvalidSpecies(name + ": multiplicity must be 2 or 3");
  if (multiplicity == 2 && (zfs_d != 0.0 || zfs_e != 0.0))
    throw InvalidSpecies(name + ": spin-1/2 cannot carry zero-field splitting");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw InvalidSpecies(name + ": gamma must be positive");
  if (!std::isfinite(zfs_d) || !std::isfinite(zfs_e))
    throw InvalidSpecies(name + ": D and E must be finite");
  const Mat3 gram = axes.transpose() * axes;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kAxesTolerance)
    throw InvalidSpecies(name + ": principal axes are not orthonormal");
  if (axes.determinant() < 0.0) throw InvalidSpecies(name + ": principal axes are left-handed");
}

Mat3 axes_from_z(const Vec3& z) {
  const Vec3 zn = z.normalized();
  Eigen::Index least = 0;
  zn.cwiseAbs().minCoeff(&least);
  return axes_from_zx(zn, Vec3::Unit(least));
}

Mat3 axes_from_zx(const Vec3& z, const Vec3& x_hint) {
  if (z.norm() == 0.0) throw InvalidSpecies("principal z axis has zero length");
  const Vec3 zn = z.normalized();
  Vec3 x = x_hint - x_hint.dot(zn) * zn;
  if (x.norm() < 1e-12) throw InvalidSpecies("x hint is parallel to z");
  x.normalize();
  const Vec3 y = zn.cross(x);
  Mat3 m;
  m.col(0) = x;
  m.col(1) = y;
  m.col(2) = zn;
  return m;
}

SpinSpecies spin_half(std::string name, double gamma) {
  SpinSpecies s;
  s.name = std::move(name);
  s.gamma = gamma;
  s.validate();
  return s;
}

SpinSpecies spin_one(std::string name, double d, double e, const Mat3& axes, double gamma) {
  SpinSpecies s;
  s.name = std::move(name);
  s.multiplicity = 3;
  s.zfs_d = d;
  s.zfs_e = e;
  s.axes = axes;
  s.gamma = gamma;
  s.validate();
  return s;
}

SpinSpecies nv_center(std::string name, const Vec3& axis, double gamma) {
  return spin_one(std::move(name), kNvZeroFieldSplitting, 0.0, axes_from_z(axis), gamma);
}

MagneticField::MagneticField(const Vec3& g) : gauss(g) {
  if (!g.allFinite()) throw InvalidInput("magnetic field components must be finite");
}

MagneticField MagneticField::along(const Vec3& direction, double magnitude_gauss) {
  if (direction.norm() == 0.0) throw InvalidInput("field direction has zero length");
  return MagneticField(direction.normalized() * magnitude_gauss);
}

SpinOperators spin_operators(int multiplicity) {
  using C = std::complex<double>;
  SpinOperators ops;
  if (multiplicity == 2) {
    ops.x = CMatrix::Zero(2, 2);
    ops.y = CMatrix::Zero(2, 2);
    ops.z = CMatrix::Zero(2, 2);
    ops.x(0, 1) = ops.x(1, 0) = 0.5;
    ops.y(0, 1) = C(0, -0.5);
    ops.y(1, 0) = C(0, 0.5);
    ops.z(0, 0) = 0.5;
    ops.z(1, 1) = -0.5;
    return ops;
  }
  if (multiplicity == 3) {
    const double r = 1.0 / std::sqrt(2.0);
    ops.x = CMatrix::Zero(3, 3);
    ops.y = CMatrix::Zero(3, 3);
    ops.z = CMatrix::Zero(3, 3);
    ops.x(0, 1) = ops.x(1, 0) = ops.x(1, 2) = ops.x(2, 1) = r;
    ops.y(0, 1) = ops.y(1, 2) = C(0, -r);
    ops.y(1, 0) = ops.y(2, 1) = C(0, r);
    ops.z(0, 0) = 1.0;
    ops.z(2, 2) = -1.0;
    return ops;
  }
  throw InvalidSpecies("multiplicity must be 2 or 3");
}

CMatrix build_hamiltonian(const SpinSpecies& species, const MagneticField& field) {
  species.validate();
  const SpinOperators s = spin_operators(species.multiplicity);
  // field components in the principal frame
  const Vec3 b = species.axes.transpose() * field.gauss;
  CMatrix h = species.gamma * (b.x() * s.x + b.y() * s.y + b.z() * s.z);
  if (species.multiplicity == 3) {
    h += species.zfs_d * (s.z * s.z) + species.zfs_e * (s.x * s.x - s.y * s.y);
  }
  // exact Hermiticity
  const CMatrix sym = 0.5 * (h + h.adjoint());
  return sym;
}

EigenSystem eigensystem(const CMatrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0) throw InvalidInput("eigensystem needs a square matrix");
  const double scale = h.cwiseAbs().maxCoeff();
  const double asym = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTolerance * scale)
    throw NonHermitianInput("matrix deviates from Hermitian by " + std::to_string(asym));

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (h + h.adjoint()));
  if (solver.info() != Eigen::Success) throw NoConvergence("Hermitian eigensolver failed");
  EigenSystem out;
  out.energies = solver.eigenvalues();
  out.states = solver.eigenvectors();
  fix_phase(out.states);
  return out;
}

std::vector<Transition> resonance_frequencies(const SpinSpecies& species,
                                              const MagneticField& field) {
  const EigenSystem es = eigensystem(build_hamiltonian(species, field));
  std::vector<Transition> out;
  const auto n = static_cast<std::size_t>(es.energies.size());
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j + 1; k < n; ++k)
      out.push_back({j, k, std::abs(es.energies(k) - es.energies(j))});
  std::stable_sort(out.begin(), out.end(),
                   [](const Transition& a, const Transition& b) { return a.frequency < b.frequency; });
  return out;
}

std::vector<Vec3> dipole_moments(const SpinSpecies& species, const MagneticField& field) {
  const EigenSystem es = eigensystem(build_hamiltonian(species, field));
  const SpinOperators s = spin_operators(species.multiplicity);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(es.states.cols()));
  for (Eigen::Index j = 0; j < es.states.cols(); ++j) {
    const Eigen::VectorXcd v = es.states.col(j);
    const Vec3 principal(v.dot(s.x * v).real(), v.dot(s.y * v).real(), v.dot(s.z * v).real());
    out.push_back(species.axes * principal);
  }
  return out;
}

Vec3 dipole_expectation(const SpinSpecies& species, const MagneticField& field, std::size_t j) {
  if (j >= static_cast<std::size_t>(species.multiplicity))
    throw IndexOutOfRange("eigenstate index " + std::to_string(j) + " out of range for " + species.name);
  return dipole_moments(species, field)[j];
}

std::size_t eigenstate_for_m(const SpinSpecies& species, const MagneticField& field, double m) {
  const double s = species.spin();
  const double idx = s - m;
  if (idx < 0.0 || idx > 2.0 * s || std::abs(idx - std::round(idx)) > 1e-9)
    throw IndexOutOfRange("magnetic quantum number " + std::to_string(m) + " invalid for " + species.name);
  const auto row = static_cast<Eigen::Index>(std::lround(idx));
  const EigenSystem es = eigensystem(build_hamiltonian(species, field));
  Eigen::Index best = 0;
  double best_w = -1.0;
  for (Eigen::Index j = 0; j < es.states.cols(); ++j) {
    const double w = std::norm(es.states(row, j));
    if (w > best_w + 1e-12) {
      best_w = w;
      best = j;
    }
  }
  return static_cast<std::size_t>(best);
}

}  // namespace spinsense
