#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spinsense/entangle_sense.hpp"

namespace spinsense {

struct DeerTrace {
  std::vector<double> times;   ///< μs, strictly increasing
  std::vector<double> values;
  std::string sensor_state;
  std::vector<std::string> targets;
  MagneticField field;
};

/// exp(-(t/T₂)^p)·cos(2π A_eff t). T₂ may be +infinity.
DeerTrace deer_trace(double a_eff, double t2, double p, std::span<const double> times);

/// Optimal entangling evolution time 1/(8A), μs.
double entangling_time(double coupling_mhz);

struct Spectrum {
  std::vector<double> frequencies;  ///< MHz, ascending
  std::vector<double> amplitudes;
};

struct DarkSpin {
  SpinSpecies species;
  Vec3 position;  ///< nm
};

struct SpectrumScan {
  double f_min = 0.0;
  double f_max = 1000.0;
  double f_step = 0.5;
  double evolution_time = 1.0;  ///< fixed DEER evolution time, μs

  void validate() const;
};

struct SpectrumPeak {
  double frequency = 0.0;  ///< MHz
  double amplitude = 0.0;
  double coupling = 0.0;  ///< effective coupling of the sensor state, MHz
  std::size_t spin = 0;   ///< index into the dark-spin list
  Transition transition;
};

struct DeerSpectrum {
  Spectrum spectrum;
  std::vector<SpectrumPeak> peaks;
};

/// Frequency-swept DEER: every dark-spin resonance in range shows up as a
/// peak of height 1 - cos(2π A_eff t_evo) on a flat baseline.
DeerSpectrum deer_spectrum(const SensorPairGeometry& sensors, const EntangledState& state,
                           std::span<const DarkSpin> dark_spins, const MagneticField& field,
                           const SpectrumScan& scan, double prefactor = kDipolePrefactor);

struct FftPeaks {
  Spectrum spectrum;
  double peak_frequency = 0.0;  ///< MHz; 0 when no oscillation is found
  double resolution = 0.0;      ///< one bin, 1/(N·dt)
  bool oscillation = false;
};

/// Single-sided amplitude spectrum and the dominant nonzero-frequency peak.
FftPeaks fft_peaks(const DeerTrace& trace);

struct SensitivityParams {
  double a_eff = 0.1;  ///< MHz
  double t2 = 10.0;    ///< μs
  double p = 1.0;
  double contrast = 0.3;
  double n_avg = 0.1;  ///< photons per readout
  double t_init = 3.0;
  double t_readout = 1.0;
  double t_other = 1.0;
  double t_deer = 1.0;

  double t_ext() const { return t_init + t_readout + t_other; }
  void validate() const;
};

/// η = [π A √t e^{-(t/T₂)^p}]⁻¹ √(1 + 1/(C² n)) √(1 + t_ext/t) with t = t_DEER.
double sensitivity(const SensitivityParams& params);

struct OptimalTime {
  double t_deer = 0.0;
  double eta = 0.0;
};

/// argmin over t in (0, 10·T₂] of η; `params.t_deer` is ignored.
OptimalTime optimal_deer_time(SensitivityParams params);

/// 10·log10(eta_ref / eta_new).
double gain_db(double eta_ref, double eta_new);

}  // namespace spinsense
