#include "spinsense/localize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

#include "spinsense/errors.hpp"

namespace spinsense {

namespace {

constexpr double kBlocked = 1e300;

struct PreparedMeasurement {
  Vec3 sensor_moment;
  Vec3 target_moment;
  double a_measured;
  double sigma;
};

std::vector<PreparedMeasurement> prepare(std::span<const CouplingMeasurement> measurements,
                                         const LocalizationSetup& setup) {
  std::vector<PreparedMeasurement> out;
  out.reserve(measurements.size());
  for (const auto& m : measurements) {
    m.validate();
    out.push_back({transition_moment(setup.sensor, m.field, m.transitions.sensor),
                   transition_moment(setup.target, m.field, m.transitions.target), m.a_measured,
                   m.sigma});
  }
  return out;
}

double chi2_prepared(const Vec3& r, const std::vector<PreparedMeasurement>& prepared,
                     const LocalizationSetup& setup) {
  const Vec3 d = r - setup.sensor_position;
  if (!(d.norm() >= kMinSeparation)) return kBlocked;
  const GeometryVector geom(d);
  CompensatedSum sum;
  for (const auto& m : prepared) {
    const double res =
        (coupling_from_moments(m.sensor_moment, m.target_moment, geom, setup.prefactor) - m.a_measured) /
        m.sigma;
    sum.add(res * res);
  }
  return sum.value();
}

// Fewer than three distinct orientations, or all of them on one line, leave
// the iso-coupling surfaces without a unique intersection.
void check_orientations(std::span<const CouplingMeasurement> measurements) {
  std::vector<Vec3> dirs;
  bool has_zero = false;
  for (const auto& m : measurements) {
    const double b = m.field.magnitude();
    if (b == 0.0) {
      has_zero = true;
      continue;
    }
    const Vec3 u = m.field.gauss / b;
    if (std::none_of(dirs.begin(), dirs.end(), [&](const Vec3& v) { return (v - u).norm() < 1e-9; }))
      dirs.push_back(u);
  }
  const std::size_t distinct = dirs.size() + (has_zero ? 1 : 0);
  if (distinct < 3)
    throw InsufficientData("localization needs at least 3 distinct field orientations, got " +
                           std::to_string(distinct));
  bool spread = false;
  for (std::size_t i = 1; i < dirs.size() && !spread; ++i) spread = dirs[0].cross(dirs[i]).norm() > 1e-6;
  if (!spread) throw InsufficientData("field orientations are collinear");
}

}  // namespace

void CouplingMeasurement::validate() const {
  if (!std::isfinite(a_measured)) throw InvalidInput("measured coupling must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("measurement sigma must be positive");
  if (!field.gauss.allFinite()) throw InvalidInput("field must be finite");
}

SearchRegion SearchRegion::cube(const Vec3& center, double edge, double pitch) {
  SearchRegion r;
  r.lower = center - Vec3::Constant(0.5 * edge);
  r.upper = center + Vec3::Constant(0.5 * edge);
  r.pitch = pitch;
  return r;
}

void SearchRegion::validate() const {
  if (!(pitch > 0.0)) throw InvalidInput("search pitch must be positive");
  if (!lower.allFinite() || !upper.allFinite() || (upper - lower).minCoeff() < 0.0)
    throw InvalidInput("search region bounds are invalid");
  if (((upper - lower) / pitch).maxCoeff() > 2000.0) throw InvalidInput("search grid is too fine");
}

std::vector<double> forward_couplings(const Vec3& candidate,
                                      std::span<const CouplingMeasurement> measurements,
                                      const LocalizationSetup& setup) {
  const GeometryVector geom(candidate - setup.sensor_position);
  std::vector<double> out;
  out.reserve(measurements.size());
  for (const auto& m : measurements)
    out.push_back(measurable_coupling(setup.sensor, setup.target, m.transitions, m.field, geom,
                                      setup.prefactor));
  return out;
}

double localization_chi2(const Vec3& candidate, std::span<const CouplingMeasurement> measurements,
                         const LocalizationSetup& setup) {
  GeometryVector(candidate - setup.sensor_position);
  return chi2_prepared(candidate, prepare(measurements, setup), setup);
}

Mat3 position_covariance(const Vec3& position, std::span<const CouplingMeasurement> measurements,
                         const LocalizationSetup& setup, bool* full_rank) {
  const auto prepared = prepare(measurements, setup);
  const double h = 1e-5 * std::max(1.0, (position - setup.sensor_position).norm());
  Eigen::MatrixXd jac(prepared.size(), 3);
  for (int k = 0; k < 3; ++k) {
    Vec3 lo = position, hi = position;
    lo[k] -= h;
    hi[k] += h;
    const GeometryVector g_lo(lo - setup.sensor_position), g_hi(hi - setup.sensor_position);
    for (std::size_t i = 0; i < prepared.size(); ++i) {
      const auto& m = prepared[i];
      const double up = coupling_from_moments(m.sensor_moment, m.target_moment, g_hi, setup.prefactor);
      const double dn = coupling_from_moments(m.sensor_moment, m.target_moment, g_lo, setup.prefactor);
      jac(static_cast<Eigen::Index>(i), k) = (up - dn) / (2.0 * h * m.sigma);
    }
  }
  const Mat3 info = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(info);
  const Vec3 lambda = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(lambda.maxCoeff(), std::numeric_limits<double>::min());
  Vec3 inv = Vec3::Zero();
  bool rank_ok = true;
  for (int k = 0; k < 3; ++k) {
    if (lambda[k] > cutoff)
      inv[k] = 1.0 / lambda[k];
    else
      rank_ok = false;
  }
  if (full_rank) *full_rank = rank_ok;
  Mat3 cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (cov + cov.transpose());
}

LocalizationResult localize(std::span<const CouplingMeasurement> measurements,
                            const LocalizationSetup& setup, const SearchRegion& region,
                            const LocalizeOptions& options) {
  region.validate();
  setup.sensor.validate();
  setup.target.validate();
  check_orientations(measurements);
  const auto prepared = prepare(measurements, setup);

  std::array<std::size_t, 3> n{};
  for (int k = 0; k < 3; ++k)
    n[k] = static_cast<std::size_t>(std::floor((region.upper[k] - region.lower[k]) / region.pitch + 1e-9)) + 1;
  auto point = [&](std::size_t i, std::size_t j, std::size_t k) {
    return Vec3(region.lower.x() + region.pitch * static_cast<double>(i),
                region.lower.y() + region.pitch * static_cast<double>(j),
                region.lower.z() + region.pitch * static_cast<double>(k));
  };
  auto flat = [&](std::size_t i, std::size_t j, std::size_t k) { return (i * n[1] + j) * n[2] + k; };

  std::vector<double> grid(n[0] * n[1] * n[2]);
  parallel_for(n[0], resolve_threads(options.threads), [&](std::size_t i) {
    for (std::size_t j = 0; j < n[1]; ++j)
      for (std::size_t k = 0; k < n[2]; ++k) grid[flat(i, j, k)] = chi2_prepared(point(i, j, k), prepared, setup);
  });
  const double grid_best = *std::min_element(grid.begin(), grid.end());
  if (!(grid_best < kBlocked)) throw InvalidInput("search region contains no admissible point");

  // Local minima of the coarse grid within the candidate window.
  std::vector<std::pair<double, Vec3>> seeds;
  for (std::size_t i = 0; i < n[0]; ++i)
    for (std::size_t j = 0; j < n[1]; ++j)
      for (std::size_t k = 0; k < n[2]; ++k) {
        const double v = grid[flat(i, j, k)];
        if (v > grid_best + options.delta_chi2) continue;
        bool minimum = true;
        for (int di = -1; di <= 1 && minimum; ++di)
          for (int dj = -1; dj <= 1 && minimum; ++dj)
            for (int dk = -1; dk <= 1 && minimum; ++dk) {
              if (di == 0 && dj == 0 && dk == 0) continue;
              const auto ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj,
                         kk = static_cast<long>(k) + dk;
              if (ii < 0 || jj < 0 || kk < 0 || ii >= static_cast<long>(n[0]) ||
                  jj >= static_cast<long>(n[1]) || kk >= static_cast<long>(n[2]))
                continue;
              if (grid[flat(ii, jj, kk)] < v) minimum = false;
            }
        if (minimum) seeds.emplace_back(v, point(i, j, k));
      }
  std::stable_sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (seeds.size() > options.max_candidates) seeds.resize(options.max_candidates);

  auto objective = [&](std::span<const double> x) { return chi2_prepared(Vec3(x[0], x[1], x[2]), prepared, setup); };
  std::vector<LocalizationCandidate> refined;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const Vec3& start = seeds[s].second;
    const auto fit = nelder_mead(objective, {start.x(), start.y(), start.z()}, 0.25 * region.pitch,
                                 options.x_tol, options.max_iterations);
    if (!fit.converged) {
      if (s == 0) throw NoConvergence("simplex refinement exceeded its iteration cap");
      continue;
    }
    const Vec3 pos(fit.x[0], fit.x[1], fit.x[2]);
    const bool duplicate = std::any_of(refined.begin(), refined.end(), [&](const LocalizationCandidate& c) {
      return (c.position - pos).norm() < 10.0 * options.x_tol;
    });
    if (!duplicate) refined.push_back({pos, fit.value});
  }
  std::stable_sort(refined.begin(), refined.end(),
                   [](const LocalizationCandidate& a, const LocalizationCandidate& b) { return a.chi2 < b.chi2; });
  const double best = refined.front().chi2;
  std::erase_if(refined, [&](const LocalizationCandidate& c) { return c.chi2 > best + options.delta_chi2; });

  LocalizationResult result;
  result.position = refined.front().position;
  result.residual = std::max(best, 0.0);
  result.candidates = std::move(refined);
  result.covariance = position_covariance(result.position, measurements, setup, &result.well_determined);
  return result;
}

Ellipsoid uncertainty_ellipsoid(const Mat3& covariance, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidInput("confidence must lie in (0, 1)");
  if (!covariance.allFinite() || (covariance - covariance.transpose()).norm() > 1e-9 * (1.0 + covariance.norm()))
    throw InvalidInput("covariance must be finite and symmetric");
  Ellipsoid out;
  out.quantile = boost::math::quantile(boost::math::chi_squared_distribution<double>(3.0), confidence);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(covariance);
  const Vec3 lambda = eig.eigenvalues();
  const double scale = std::max(std::abs(lambda.maxCoeff()), std::numeric_limits<double>::min());
  for (int k = 0; k < 3; ++k) {
    out.degenerate[k] = lambda[k] <= 1e-12 * scale;
    out.semi_axes[k] = out.degenerate[k] ? 0.0 : std::sqrt(lambda[k] * out.quantile);
  }
  out.axes = eig.eigenvectors();
  return out;
}

Ellipsoid uncertainty_ellipsoid(const LocalizationResult& result, double confidence) {
  return uncertainty_ellipsoid(result.covariance, confidence);
}

}  // namespace spinsense
