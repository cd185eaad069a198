#include "spinsense/bath_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "spinsense/errors.hpp"

namespace spinsense {

namespace {

void check_times(std::span<const double> times) {
  if (times.empty()) throw InvalidInput("time grid is empty");
  if (times.front() < 0.0) throw InvalidInput("times must start at or after 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw InvalidInput("times must be strictly ascending");
}

// per-realization values laid out as [realization][model][time]
template <class Factor>
std::vector<CoherenceCurve> ensemble_curves(std::span<const PairCouplingModel> models,
                                            const BathConfig& config, std::span<const double> times,
                                            unsigned threads, Factor factor) {
  config.validate();
  check_times(times);
  const std::size_t n_real = static_cast<std::size_t>(config.realizations);
  const std::size_t n_mod = models.size();
  const std::size_t n_t = times.size();
  std::vector<double> samples(n_real * n_mod * n_t, 1.0);

  parallel_for(n_real, threads, [&](std::size_t r) {
    const SurfaceBath bath = sample_bath(config, r);
    std::vector<double> couplings(bath.spins.size());
    for (std::size_t m = 0; m < n_mod; ++m) {
      for (std::size_t i = 0; i < bath.spins.size(); ++i)
        couplings[i] = models[m].effective(bath.spins[i].position);
      double* row = &samples[(r * n_mod + m) * n_t];
      for (std::size_t k = 0; k < n_t; ++k) {
        double prod = 1.0;
        for (double a : couplings) prod *= factor(a, times[k]);
        row[k] = prod;
      }
    }
  });

  std::vector<CoherenceCurve> curves(n_mod);
  for (std::size_t m = 0; m < n_mod; ++m) {
    auto& c = curves[m];
    c.times.assign(times.begin(), times.end());
    c.signal.resize(n_t);
    c.stderr_.resize(n_t);
    for (std::size_t k = 0; k < n_t; ++k) {
      CompensatedSum sum, sum_sq;
      for (std::size_t r = 0; r < n_real; ++r) {
        const double v = samples[(r * n_mod + m) * n_t + k];
        sum.add(v);
        sum_sq.add(v * v);
      }
      const double n = static_cast<double>(n_real);
      const double mean = sum.value() / n;
      const double var = n > 1 ? std::max(0.0, (sum_sq.value() - n * mean * mean) / (n - 1)) : 0.0;
      c.signal[k] = std::clamp(mean, -1.0, 1.0);
      c.stderr_[k] = std::sqrt(var / n);
    }
  }
  return curves;
}

BathConfig resolve_extent(const BathSimulation& sim, BathConfig config) {
  const double deepest = std::max(-sim.geometry.position1.z(), -sim.geometry.position2.z());
  config.depth = deepest;
  if (config.extent == 0.0) config.extent = auto_extent(deepest, sim.geometry.separation());
  return config;
}

}  // namespace

double fid_factor(double coupling, double t) { return std::cos(std::numbers::pi * coupling * t); }

double echo_factor(double coupling, double flip_rate, double t) {
  if (flip_rate < 0.0) throw InvalidInput("flip rate must be >= 0");
  const double v = std::numbers::pi * coupling;  // half-splitting, rad/μs
  const double g = flip_rate;
  const double alpha_sq = g * g - v * v;
  const double decay = std::exp(-g * t);
  if (std::abs(alpha_sq) * t * t < 1e-8) {
    // series in α²t² about the critically damped point
    const double a2t2 = alpha_sq * t * t;
    const double sinh_term = t * (1.0 + a2t2 / 6.0);
    const double cosh_term = 0.5 * t * t * (1.0 + a2t2 / 12.0);
    return decay * (1.0 + g * sinh_term + g * g * cosh_term);
  }
  if (alpha_sq > 0.0) {
    const double a = std::sqrt(alpha_sq);
    // e^{-gt}·sinh(at) and e^{-gt}·cosh(at) without overflow
    const double ep = std::exp((a - g) * t);
    const double em = std::exp(-(a + g) * t);
    const double s = 0.5 * (ep - em);
    const double c = 0.5 * (ep + em);
    return decay + g / a * s + g * g / alpha_sq * (c - decay);
  }
  const double w = std::sqrt(-alpha_sq);
  return decay * (1.0 + g / w * std::sin(w * t) + g * g / (w * w) * (1.0 - std::cos(w * t)));
}

CoherenceCurve fid_signal(const BathSimulation& sim, const EntangledState& state,
                          const BathConfig& config, std::span<const double> times) {
  const PairCouplingModel model(sim.geometry, state, sim.bath_species, sim.field, sim.prefactor);
  return fid_signals(std::span(&model, 1), resolve_extent(sim, config), times, sim.threads).front();
}

CoherenceCurve hahn_echo_signal(const BathSimulation& sim, const EntangledState& state,
                                const BathConfig& config, double flip_rate,
                                std::span<const double> times) {
  const PairCouplingModel model(sim.geometry, state, sim.bath_species, sim.field, sim.prefactor);
  return hahn_echo_signals(std::span(&model, 1), resolve_extent(sim, config), flip_rate, times,
                           sim.threads)
      .front();
}

std::vector<CoherenceCurve> fid_signals(std::span<const PairCouplingModel> models,
                                        const BathConfig& config, std::span<const double> times,
                                        unsigned threads) {
  return ensemble_curves(models, config, times, threads,
                         [](double a, double t) { return fid_factor(a, t); });
}

std::vector<CoherenceCurve> hahn_echo_signals(std::span<const PairCouplingModel> models,
                                              const BathConfig& config, double flip_rate,
                                              std::span<const double> times, unsigned threads) {
  if (flip_rate < 0.0) throw InvalidInput("flip rate must be >= 0");
  return ensemble_curves(models, config, times, threads,
                         [flip_rate](double a, double t) { return echo_factor(a, flip_rate, t); });
}

// ---------------------------------------------------------------------------
// decay fitting

double stretched_envelope(double t, double t2, double p) {
  if (!std::isfinite(t2)) return 1.0;
  return std::exp(-std::pow(t / t2, p));
}

DecayFit fit_decay(std::span<const double> times, std::span<const double> values,
                   const DecayFitOptions& options) {
  if (times.size() != values.size()) throw InvalidInput("times and values differ in length");
  if (times.size() < 8) throw InvalidInput("decay fit needs at least 8 points");
  check_times(times);
  const double lo = *std::min_element(values.begin(), values.end());
  if (lo > 1.0 - 1e-3) throw FitDiverged("curve shows no decay");

  const double p_span = options.p_max - options.p_min;
  auto unpack = [&](std::span<const double> x) {
    const double t2 = std::exp(x[0]);
    const double p = options.p_min + p_span * 0.5 * (1.0 + std::tanh(x[1]));
    return std::pair{t2, p};
  };
  auto sse = [&](std::span<const double> x) {
    const auto [t2, p] = unpack(x);
    double s = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double r = values[i] - stretched_envelope(times[i], t2, p);
      s += r * r;
    }
    return s;
  };

  const auto crossing = first_crossing_time(times, values, std::exp(-1.0));
  const double t_guess = crossing ? std::max(*crossing, 1e-6) : 2.0 * times.back();
  SimplexResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (double p0 : {0.8, 1.5, 2.5}) {
    const double u0 = std::atanh(std::clamp(2.0 * (p0 - options.p_min) / p_span - 1.0, -0.999, 0.999));
    auto r = nelder_mead(sse, {std::log(t_guess), u0}, 0.3, 1e-10, 4000);
    if (r.value < best.value) best = r;
  }
  const auto [t2, p] = unpack(best.x);
  DecayFit fit;
  fit.t2 = t2;
  fit.p = p;
  fit.rms_residual = std::sqrt(best.value / static_cast<double>(times.size()));

  std::vector<double> resid(times.size());
  double signal_power = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    resid[i] = values[i] - stretched_envelope(times[i], t2, p);
    signal_power += values[i] * values[i];
  }
  const auto mags = real_dft_magnitudes(resid);
  const double n = static_cast<double>(times.size());
  double peak = 0.0;
  for (std::size_t k = 1; k < mags.size(); ++k) peak = std::max(peak, 2.0 * mags[k] * mags[k] / n);
  fit.oscillation_fraction = signal_power > 0.0 ? peak / signal_power : 0.0;

  if (fit.t2 > 100.0 * times.back()) throw FitDiverged("no decay within the sampled window");
  if (fit.oscillation_fraction > options.max_oscillation_fraction)
    throw FitDiverged("residual carries a coherent oscillation; envelope model rejected");
  if (fit.rms_residual > options.max_rms)
    throw FitDiverged("stretched-exponential residual " + std::to_string(fit.rms_residual) +
                      " exceeds threshold");
  return fit;
}

// ---------------------------------------------------------------------------
// telegraph process

void TelegraphConfig::validate() const {
  if (!(rate_on_off >= 0.0) || !(rate_off_on >= 0.0) || !std::isfinite(rate_on_off) ||
      !std::isfinite(rate_off_on))
    throw InvalidInput("telegraph rates must be finite and >= 0");
}

bool TelegraphTrajectory::on_at(double t) const {
  const auto n = std::upper_bound(switch_times.begin(), switch_times.end(), t) - switch_times.begin();
  return (n % 2 == 0) ? initial_on : !initial_on;
}

double TelegraphTrajectory::on_time(double t) const {
  double total = 0.0, last = 0.0;
  bool on = initial_on;
  for (double s : switch_times) {
    if (s >= t) break;
    if (on) total += s - last;
    last = s;
    on = !on;
  }
  if (on) total += t - last;
  return total;
}

TelegraphTrajectory telegraph_trajectory(const TelegraphConfig& config, double duration,
                                         std::mt19937_64& rng) {
  config.validate();
  if (!(duration > 0.0)) throw InvalidInput("duration must be positive");
  TelegraphTrajectory traj;
  traj.initial_on = config.initial_on;
  bool on = config.initial_on;
  double t = 0.0;
  for (;;) {
    const double rate = on ? config.rate_on_off : config.rate_off_on;
    if (rate == 0.0) break;
    std::exponential_distribution<double> hold(rate);
    t += hold(rng);
    if (t >= duration) break;
    traj.switch_times.push_back(t);
    on = !on;
  }
  return traj;
}

TelegraphTrajectory telegraph_trajectory(const TelegraphConfig& config, double duration,
                                         std::uint64_t seed) {
  auto rng = substream(seed, 0);
  return telegraph_trajectory(config, duration, rng);
}

namespace {

// ⟨exp(i 2πA τ_on(t))⟩ over telegraph trajectories, one value per time.
std::vector<std::complex<double>> telegraph_phase_average(double coupling, std::span<const double> times,
                                                          const TelegraphConfig& telegraph,
                                                          const MetastableOptions& options) {
  telegraph.validate();
  if (options.trajectories < 1) throw InvalidInput("need at least one trajectory");
  const auto n_traj = static_cast<std::size_t>(options.trajectories);
  const std::size_t n_t = times.size();
  const double two_pi_a = 2.0 * std::numbers::pi * coupling;
  std::vector<double> phases(n_traj * n_t);
  const double duration = std::max(times.back(), 1e-12);
  parallel_for(n_traj, options.threads, [&](std::size_t k) {
    auto rng = substream(options.seed, k);
    const auto traj = telegraph_trajectory(telegraph, duration, rng);
    for (std::size_t i = 0; i < n_t; ++i) phases[k * n_t + i] = two_pi_a * traj.on_time(times[i]);
  });
  std::vector<std::complex<double>> out(n_t);
  for (std::size_t i = 0; i < n_t; ++i) {
    CompensatedSum re, im;
    for (std::size_t k = 0; k < n_traj; ++k) {
      re.add(std::cos(phases[k * n_t + i]));
      im.add(std::sin(phases[k * n_t + i]));
    }
    out[i] = {re.value() / static_cast<double>(n_traj), im.value() / static_cast<double>(n_traj)};
  }
  return out;
}

}  // namespace

std::vector<double> metastable_deer_trace(MetastableRegime regime, double coupling, double t2,
                                          double p, std::span<const double> times,
                                          const TelegraphConfig& telegraph,
                                          const MetastableOptions& options) {
  check_times(times);
  if (!(t2 > 0.0) || !(p > 0.0)) throw InvalidInput("T2 and p must be positive");
  std::vector<double> out(times.size());
  const double two_pi_a = 2.0 * std::numbers::pi * coupling;
  switch (regime) {
    case MetastableRegime::On:
      for (std::size_t i = 0; i < times.size(); ++i)
        out[i] = stretched_envelope(times[i], t2, p) * std::cos(two_pi_a * times[i]);
      return out;
    case MetastableRegime::Off:
      for (std::size_t i = 0; i < times.size(); ++i) out[i] = stretched_envelope(times[i], t2, p);
      return out;
    case MetastableRegime::Switching:
      break;
  }
  const auto avg = telegraph_phase_average(coupling, times, telegraph, options);
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = stretched_envelope(times[i], t2, p) * avg[i].real();
  return out;
}

std::vector<double> metastable_coherence(MetastableRegime regime, double coupling, double t2, double p,
                                         std::span<const double> times, const TelegraphConfig& telegraph,
                                         const MetastableOptions& options) {
  check_times(times);
  if (!(t2 > 0.0) || !(p > 0.0)) throw InvalidInput("T2 and p must be positive");
  std::vector<double> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = stretched_envelope(times[i], t2, p);
  if (regime != MetastableRegime::Switching) return out;
  const auto avg = telegraph_phase_average(coupling, times, telegraph, options);
  for (std::size_t i = 0; i < times.size(); ++i) out[i] *= std::abs(avg[i]);
  return out;
}

}  // namespace spinsense
