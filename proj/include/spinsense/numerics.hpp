#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spinsense {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Neumaier-compensated accumulator. Used for every ensemble average so
/// results do not depend on the order realizations are folded in.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Independent generator for task `stream` of a run seeded with `seed`.
/// The (seed, stream) pair fully determines the sequence.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; callers write into per-index slots so the result
/// does not depend on scheduling.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

/// Resolves a requested thread count (0 = hardware concurrency).
unsigned resolve_threads(unsigned requested);

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead minimization. Stops when the simplex diameter (max vertex
/// distance from the best vertex) falls below `x_tol` or after `max_iter`.
SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                          std::vector<double> start, double initial_step,
                          double x_tol, int max_iter);

/// Evenly spaced samples on [start, stop] (inclusive), count >= 2.
std::vector<double> linspace(double start, double stop, std::size_t count);

/// First time at which `values` drops below `level`, linearly interpolated.
/// Empty when the curve never crosses.
std::optional<double> first_crossing_time(std::span<const double> times,
                           std::span<const double> values, double level);

/// One-sided discrete Fourier magnitudes |X_k|, k = 0 .. N/2, of a real
/// sequence (unnormalized).
std::vector<double> real_dft_magnitudes(std::span<const double> values);

}  // namespace spinsense
