#include "spinsense/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spinsense/bath_dynamics.hpp"
#include "spinsense/errors.hpp"

namespace spinsense {

DeerTrace deer_trace(double a_eff, double t2, double p, std::span<const double> times) {
  if (!(t2 > 0.0) || !(p > 0.0)) throw InvalidInput("T2 and p must be positive");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw InvalidInput("times must be strictly increasing");
  DeerTrace trace;
  trace.times.assign(times.begin(), times.end());
  trace.values.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    trace.values[i] = stretched_envelope(times[i], t2, p) *
                      std::cos(2.0 * std::numbers::pi * a_eff * times[i]);
  return trace;
}

double entangling_time(double coupling_mhz) {
  if (!(std::abs(coupling_mhz) > 0.0)) throw InvalidInput("coupling must be nonzero");
  return 1.0 / (8.0 * std::abs(coupling_mhz));
}

void SpectrumScan::validate() const {
  if (!(f_step > 0.0)) throw InvalidInput("frequency step must be positive");
  if (!(f_max >= f_min) || f_min < 0.0) throw InvalidInput("frequency scan range is empty");
  if (!(evolution_time > 0.0)) throw InvalidInput("evolution time must be positive");
}

DeerSpectrum deer_spectrum(const SensorPairGeometry& sensors, const EntangledState& state,
                           std::span<const DarkSpin> dark_spins, const MagneticField& field,
                           const SpectrumScan& scan, double prefactor) {
  scan.validate();
  sensors.validate();
  DeerSpectrum out;
  const auto n_bins = static_cast<std::size_t>(std::floor((scan.f_max - scan.f_min) / scan.f_step + 1e-9)) + 1;
  out.spectrum.frequencies.resize(n_bins);
  out.spectrum.amplitudes.assign(n_bins, 0.0);
  for (std::size_t k = 0; k < n_bins; ++k)
    out.spectrum.frequencies[k] = scan.f_min + scan.f_step * static_cast<double>(k);

  const Vec3 m1 = transition_moment(sensors.sensor1, field, transition_for_role(sensors.sensor1, field, state.role1));
  const Vec3 m2 = transition_moment(sensors.sensor2, field, transition_for_role(sensors.sensor2, field, state.role2));

  for (std::size_t s = 0; s < dark_spins.size(); ++s) {
    const auto& spin = dark_spins[s];
    const auto moments = dipole_moments(spin.species, field);
    const GeometryVector r1(spin.position - sensors.position1);
    const GeometryVector r2(spin.position - sensors.position2);
    for (const auto& tr : resonance_frequencies(spin.species, field)) {
      if (tr.frequency < scan.f_min - 0.5 * scan.f_step || tr.frequency > scan.f_max + 0.5 * scan.f_step) continue;
      const Vec3 target = moments[tr.upper] - moments[tr.lower];
      const double a1 = coupling_from_moments(m1, target, r1, prefactor);
      const double a2 = state.w2 == 0 ? 0.0 : coupling_from_moments(m2, target, r2, prefactor);
      const double a_eff = effective_coupling(state, a1, a2);
      const double amp = 1.0 - std::cos(2.0 * std::numbers::pi * a_eff * scan.evolution_time);
      if (!(amp > 1e-12)) continue;
      out.peaks.push_back({tr.frequency, amp, a_eff, s, tr});
      const auto bin = static_cast<std::size_t>(std::clamp(
          std::lround((tr.frequency - scan.f_min) / scan.f_step), 0L, static_cast<long>(n_bins - 1)));
      out.spectrum.amplitudes[bin] += amp;
    }
  }
  std::stable_sort(out.peaks.begin(), out.peaks.end(),
                   [](const SpectrumPeak& a, const SpectrumPeak& b) { return a.frequency < b.frequency; });
  return out;
}

FftPeaks fft_peaks(const DeerTrace& trace) {
  const auto& t = trace.times;
  if (t.size() != trace.values.size()) throw InvalidInput("trace arrays differ in length");
  if (t.size() < 16) throw InvalidInput("FFT analysis needs at least 16 samples");
  const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-6 * dt) throw NonUniformGrid("trace time grid is not uniform");

  const auto n = static_cast<double>(t.size());
  const auto mags = real_dft_magnitudes(trace.values);
  FftPeaks out;
  out.resolution = 1.0 / (n * dt);
  out.spectrum.frequencies.resize(mags.size());
  out.spectrum.amplitudes.resize(mags.size());
  for (std::size_t k = 0; k < mags.size(); ++k) {
    const bool edge = k == 0 || (t.size() % 2 == 0 && k == mags.size() - 1);
    out.spectrum.frequencies[k] = static_cast<double>(k) * out.resolution;
    out.spectrum.amplitudes[k] = mags[k] / n * (edge ? 1.0 : 2.0);
  }
  // Peak search on the raw magnitudes: a fall-off from DC with no rise is
  // envelope leakage rather than an oscillation.
  const auto best = std::max_element(mags.begin() + 1, mags.end()) - mags.begin();
  if (mags[static_cast<std::size_t>(best)] <= mags[static_cast<std::size_t>(best) - 1]) return out;
  out.peak_frequency = out.spectrum.frequencies[static_cast<std::size_t>(best)];
  out.oscillation = true;
  return out;
}

void SensitivityParams::validate() const {
  const double positive[] = {a_eff, t2, p, contrast, n_avg, t_deer};
  for (double v : positive)
    if (!(v > 0.0) || std::isnan(v)) throw InvalidParams("sensitivity parameters must be positive");
  if (contrast > 1.0) throw InvalidParams("contrast must lie in (0, 1]");
  if (t_init < 0.0 || t_readout < 0.0 || t_other < 0.0)
    throw InvalidParams("overhead times must be nonnegative");
}

double sensitivity(const SensitivityParams& q) {
  q.validate();
  const double t = q.t_deer;
  const double coherent = std::numbers::pi * q.a_eff * std::sqrt(t) * stretched_envelope(t, q.t2, q.p);
  const double readout = std::sqrt(1.0 + 1.0 / (q.contrast * q.contrast * q.n_avg));
  const double overhead = std::sqrt(1.0 + q.t_ext() / t);
  return readout * overhead / coherent;
}

OptimalTime optimal_deer_time(SensitivityParams params) {
  params.t_deer = params.t2;
  params.validate();
  auto eta = [&](double t) {
    params.t_deer = t;
    return sensitivity(params);
  };
  const double hi = 10.0 * params.t2;
  const double lo = 1e-5 * params.t2;
  constexpr int kGrid = 400;
  std::vector<double> grid(kGrid);
  for (int i = 0; i < kGrid; ++i) grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (kGrid - 1));
  int best = 0;
  double best_eta = eta(grid[0]);
  for (int i = 1; i < kGrid; ++i) {
    const double e = eta(grid[i]);
    if (e < best_eta) {
      best_eta = e;
      best = i;
    }
  }
  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, kGrid - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = eta(c), fd = eta(d);
  while (b - a > 1e-5) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eta(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eta(d);
    }
  }
  OptimalTime out;
  out.t_deer = 0.5 * (a + b);
  out.eta = eta(out.t_deer);
  if (best_eta < out.eta) {
    out.t_deer = grid[best];
    out.eta = best_eta;
  }
  return out;
}

double gain_db(double eta_ref, double eta_new) {
  if (!(eta_ref > 0.0) || !(eta_new > 0.0)) throw InvalidParams("sensitivities must be positive");
  return 10.0 * std::log10(eta_ref / eta_new);
}

}  // namespace spinsense
