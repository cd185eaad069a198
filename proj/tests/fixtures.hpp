#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "spinsense/localize.hpp"

namespace fixtures {

using namespace spinsense;

/// `count` field directions on a cone of half-angle `cone_deg` about z,
/// plus the axis itself, all at `gauss`.
inline std::vector<MagneticField> cone_fields(std::size_t count, double cone_deg, double gauss) {
  std::vector<MagneticField> out{MagneticField(Vec3(0, 0, gauss))};
  const double th = cone_deg * std::numbers::pi / 180.0;
  for (std::size_t k = 0; k + 1 < count; ++k) {
    const double ph = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count - 1);
    out.emplace_back(gauss * Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
  }
  return out;
}

/// NV sensor (0 -> -1) against a spin-1/2 target (upper -> lower).
inline std::vector<CouplingMeasurement> nv_measurements(const LocalizationSetup& setup,
                                                        const std::vector<MagneticField>& fields,
                                                        const Vec3& target, double sigma) {
  std::vector<CouplingMeasurement> out;
  for (const auto& f : fields) {
    CouplingMeasurement m;
    m.field = f;
    m.transitions.sensor = {eigenstate_for_m(setup.sensor, f, 0), eigenstate_for_m(setup.sensor, f, -1)};
    m.transitions.target = {1, 0};
    m.sigma = sigma;
    out.push_back(m);
  }
  const auto a = forward_couplings(target, out, setup);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].a_measured = a[i];
  return out;
}

inline LocalizationSetup nv_setup() {
  LocalizationSetup s;
  s.sensor = nv_center("NV1", Vec3::UnitZ());
  s.target = spin_half("DS");
  return s;
}

}  // namespace fixtures
