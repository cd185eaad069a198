#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "spinsense/dipolar.hpp"

namespace spinsense {

/// One measured coupling at a given field configuration. Transition indices
/// refer to eigenstates in ascending-energy order at that field.
struct CouplingMeasurement {
  MagneticField field;
  TransitionPair transitions;
  double a_measured = 0.0;  ///< MHz
  double sigma = 1.0;       ///< 1σ, MHz

  void validate() const;
};

/// Sensor and target species plus the sensor location, nm.
struct LocalizationSetup {
  SpinSpecies sensor;
  SpinSpecies target = spin_half("target");
  Vec3 sensor_position = Vec3::Zero();
  double prefactor = kDipolePrefactor;
};

/// Axis-aligned search box sampled at `pitch`.
struct SearchRegion {
  Vec3 lower = Vec3::Constant(-15.0);
  Vec3 upper = Vec3::Constant(15.0);
  double pitch = 0.5;

  static SearchRegion cube(const Vec3& center, double edge, double pitch = 0.5);
  void validate() const;
};

struct LocalizeOptions {
  double x_tol = 1e-4;       ///< simplex diameter at convergence, nm
  int max_iterations = 5000;
  double delta_chi2 = 9.0;   ///< candidate window above the best minimum
  std::size_t max_candidates = 32;
  unsigned threads = 1;
};

struct LocalizationCandidate {
  Vec3 position;
  double chi2 = 0.0;
};

struct LocalizationResult {
  Vec3 position = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();  ///< nm²
  double residual = 0.0;           ///< χ² at the optimum
  std::vector<LocalizationCandidate> candidates;  ///< ascending χ², best first
  bool well_determined = true;  ///< false when the Jacobian is rank deficient
};

/// Predicted signed couplings, one per measurement, for a target at
/// `candidate`.
std::vector<double> forward_couplings(const Vec3& candidate,
                                      std::span<const CouplingMeasurement> measurements,
                                      const LocalizationSetup& setup);

/// χ² of a candidate position.
double localization_chi2(const Vec3& candidate, std::span<const CouplingMeasurement> measurements,
                         const LocalizationSetup& setup);

/// Grid search plus simplex refinement of χ² = Σ((A_pred − A_meas)/σ)².
LocalizationResult localize(std::span<const CouplingMeasurement> measurements,
                            const LocalizationSetup& setup, const SearchRegion& region,
                            const LocalizeOptions& options = {});

/// Covariance of the position estimate from the Gauss-Newton expansion of χ²
/// at `position`.
Mat3 position_covariance(const Vec3& position, std::span<const CouplingMeasurement> measurements,
                         const LocalizationSetup& setup, bool* full_rank = nullptr);

struct Ellipsoid {
  Vec3 semi_axes = Vec3::Zero();  ///< nm, ascending
  Mat3 axes = Mat3::Identity();   ///< unit axis directions as columns
  std::array<bool, 3> degenerate{};  ///< zero-variance directions
  double quantile = 0.0;             ///< χ²(3) quantile used for scaling
};

/// Confidence ellipsoid of a 3D Gaussian position estimate.
Ellipsoid uncertainty_ellipsoid(const Mat3& covariance, double confidence);
Ellipsoid uncertainty_ellipsoid(const LocalizationResult& result, double confidence);

}  // namespace spinsense
