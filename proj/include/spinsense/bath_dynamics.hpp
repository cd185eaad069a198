#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "spinsense/bath.hpp"
#include "spinsense/entangle_sense.hpp"

namespace spinsense {

/// Sensor pair, bath species and field shared by the decoherence
/// simulations.
struct BathSimulation {
  SensorPairGeometry geometry;
  SpinSpecies bath_species = spin_half("bath");
  MagneticField field;
  double prefactor = kDipolePrefactor;
  unsigned threads = 1;
};

/// Coherence curve averaged over bath realizations.
struct CoherenceCurve {
  std::vector<double> times;   ///< μs
  std::vector<double> signal;  ///< in [-1, 1]
  std::vector<double> stderr_;
};

/// Quasi-static free-induction factor of one bath spin: cos(π A t).
double fid_factor(double coupling, double t);

/// Hahn-echo factor of one bath spin whose ±A/2 detuning switches as a
/// symmetric telegraph process with `flip_rate` (1/μs), stationary start,
/// refocusing pulse at t/2.
double echo_factor(double coupling, double flip_rate, double t);

/// FID averaged over realizations: ⟨Π_i cos(π A_eff,i t)⟩.
CoherenceCurve fid_signal(const BathSimulation& sim, const EntangledState& state,
                          const BathConfig& config, std::span<const double> times);

/// Hahn echo averaged over realizations: ⟨Π_i echo_factor(A_eff,i, k, t)⟩.
CoherenceCurve hahn_echo_signal(const BathSimulation& sim, const EntangledState& state,
                                const BathConfig& config, double flip_rate,
                                std::span<const double> times);

/// Echo curves for several coupling models evaluated on the same bath
/// realizations (one curve per model, in order).
std::vector<CoherenceCurve> hahn_echo_signals(std::span<const PairCouplingModel> models,
                                              const BathConfig& config, double flip_rate,
                                              std::span<const double> times, unsigned threads = 1);
std::vector<CoherenceCurve> fid_signals(std::span<const PairCouplingModel> models,
                                        const BathConfig& config, std::span<const double> times,
                                        unsigned threads = 1);

struct DecayFit {
  double t2 = 0.0;  ///< μs
  double p = 1.0;
  double rms_residual = 0.0;
  double oscillation_fraction = 0.0;  ///< dominant residual DFT power / signal power
};

struct DecayFitOptions {
  double p_min = 0.5;
  double p_max = 3.0;
  double max_rms = 0.05;
  double max_oscillation_fraction = 0.20;
};

/// Least-squares fit of exp(-(t/T₂)^p). Throws FitDiverged when the curve
/// does not decay, the residual is too large, or the residual carries a
/// coherent oscillation.
DecayFit fit_decay(std::span<const double> times, std::span<const double> values,
                   const DecayFitOptions& options = {});

/// exp(-(t/T₂)^p).
double stretched_envelope(double t, double t2, double p);

struct TelegraphConfig {
  double rate_on_off = 0.0;  ///< 1/μs
  double rate_off_on = 0.0;  ///< 1/μs
  bool initial_on = true;

  void validate() const;
};

struct TelegraphTrajectory {
  bool initial_on = true;
  std::vector<double> switch_times;  ///< ascending, μs

  bool on_at(double t) const;
  /// Total time spent "on" during [0, t].
  double on_time(double t) const;
};

TelegraphTrajectory telegraph_trajectory(const TelegraphConfig& config, double duration,
                                         std::uint64_t seed);
TelegraphTrajectory telegraph_trajectory(const TelegraphConfig& config, double duration,
                                         std::mt19937_64& rng);

enum class MetastableRegime { On, Off, Switching };

struct MetastableOptions {
  int trajectories = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// DEER trace of a target that is on (oscillates), off (envelope only) or
/// switching (telegraph-averaged accumulated phase).
std::vector<double> metastable_deer_trace(MetastableRegime regime, double coupling, double t2,
                                          double p, std::span<const double> times,
                                          const TelegraphConfig& telegraph,
                                          const MetastableOptions& options = {});

/// Coherence magnitude env(t)·|⟨exp(i 2πA τ_on(t))⟩| of the same process.
/// Equals the bare envelope for the on and off regimes; telegraph phase
/// scatter makes it decay faster while switching.
std::vector<double> metastable_coherence(MetastableRegime regime, double coupling, double t2, double p,
                                         std::span<const double> times, const TelegraphConfig& telegraph,
                                         const MetastableOptions& options = {});

}  // namespace spinsense
