#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spinsense/numerics.hpp"

namespace spinsense {

/// Random interface-spin bath parameters. Spins live on the z = 0 plane in
/// the square |x|, |y| <= extent.
struct BathConfig {
  double density = 0.01;  ///< spins per nm²
  double extent = 0.0;    ///< half-width, nm; 0 selects auto_extent(depth)
  double depth = 9.0;     ///< sensor depth below the interface, nm
  std::uint64_t seed = 1;
  int realizations = 1000;
  int multiplicity = 2;  ///< bath spin multiplicity (state index range)

  void validate() const;
  /// Extent actually sampled (auto rule applied when extent == 0).
  double effective_extent(double separation = 0.0) const;
};

struct BathSpin {
  Vec3 position;
  int state = 0;
};

struct SurfaceBath {
  std::vector<BathSpin> spins;
};

/// Bath realization `index`; fully determined by (config.seed, index).
SurfaceBath sample_bath(const BathConfig& config, std::size_t index);

/// Estimated fraction of the quadrature-summed coupling S lost by
/// truncating the interface at lateral radius `half_width`, for a sensor at
/// `depth`. Uses the 1/r³ far-field kernel.
double truncation_fraction(double depth, double half_width);

/// Smallest half-width >= 5·depth + separation/2 (grown by 25% steps) whose
/// truncation fraction is below 1%.
double auto_extent(double depth, double separation = 0.0);

}  // namespace spinsense
