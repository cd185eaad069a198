#include "spinsense/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spinsense/errors.hpp"

namespace spinsense {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const ExperimentConfig& cfg, const std::string& header) : out_(path) {
    if (!out_) throw InvalidInput("cannot write " + path.string());
    out_ << "# spinsense " << kVersion << " config_hash=" << config_hash(cfg) << " seed=" << cfg.seed << '\n'
         << header << '\n';
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) out_ << ',';
      out_ << num(v);
      first = false;
    }
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << num(values[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const fs::path& path, const ExperimentConfig& cfg, json body) {
  body["_meta"] = {{"tool", "spinsense"}, {"version", kVersion}, {"config_hash", config_hash(cfg)}, {"seed", cfg.seed}};
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << body.dump(2) << '\n';
}

template <class T>
const T& need(const std::optional<T>& section, const char* name) {
  if (!section) throw ConfigError(std::string("config: missing section '") + name + "'");
  return *section;
}

const SensorPairGeometry& sensors_of(const ExperimentConfig& cfg) { return need(cfg.sensors, "sensors"); }
const MagneticField& field_of(const ExperimentConfig& cfg) { return need(cfg.field, "field"); }

std::vector<DarkSpin> dark_spins_of(const ExperimentConfig& cfg) {
  std::vector<DarkSpin> out;
  for (const auto& e : cfg.dark_spins) out.push_back({cfg.species_named(e.species), e.position});
  return out;
}

/// Strongest effective coupling of a dark spin over its transitions.
double strongest_coupling(const SensorPairGeometry& geom, const EntangledState& state, const DarkSpin& spin,
                          const MagneticField& field) {
  DeerSpectrum spec = deer_spectrum(geom, state, std::span(&spin, 1), field,
                                    SpectrumScan{0.0, 1e7, 1e7, 1.0});
  double best = 0.0;
  for (const auto& p : spec.peaks) best = std::max(best, p.coupling);
  return best;
}

}  // namespace

OutputFiles cmd_spectrum(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto& scan = need(cfg.spectrum, "spectrum");
  const auto& geom = sensors_of(cfg);
  if (!cfg.field && !cfg.field_sweep) throw ConfigError("config: spectrum needs 'field' or 'field_sweep'");
  if (cfg.dark_spins.empty()) throw ConfigError("config: spectrum needs at least one dark spin");
  const auto state = EntangledState::from_name(cfg.state);
  const auto spins = dark_spins_of(cfg);
  OutputFiles files;

  if (cfg.field) {
    const auto result = deer_spectrum(geom, state, spins, *cfg.field, scan);
    CsvWriter csv(out_dir / "spectrum.csv", cfg, "f_MHz,amplitude");
    for (std::size_t k = 0; k < result.spectrum.frequencies.size(); ++k)
      csv.row({result.spectrum.frequencies[k], result.spectrum.amplitudes[k]});
    files.push_back(out_dir / "spectrum.csv");

    json peaks = json::array();
    for (const auto& p : result.peaks)
      peaks.push_back({{"frequency_MHz", p.frequency}, {"amplitude", p.amplitude}, {"coupling_MHz", p.coupling},
                       {"spin", p.spin}, {"species", cfg.dark_spins[p.spin].species},
                       {"lower", p.transition.lower}, {"upper", p.transition.upper}});
    write_json(out_dir / "peaks.json", cfg,
               {{"state", state.name()}, {"field_G", vec_json(cfg.field->gauss)}, {"peaks", peaks}});
    files.push_back(out_dir / "peaks.json");
  }
  if (cfg.field_sweep) {
    const auto& sw = *cfg.field_sweep;
    CsvWriter csv(out_dir / "sweep.csv", cfg, "B_G,spin,lower,upper,f_MHz");
    for (double b : linspace(sw.from, sw.to, sw.steps)) {
      const auto field = MagneticField::along(sw.direction, b);
      for (std::size_t s = 0; s < spins.size(); ++s)
        for (const auto& tr : resonance_frequencies(spins[s].species, field))
          csv.row({b, static_cast<double>(s), static_cast<double>(tr.lower), static_cast<double>(tr.upper),
                   tr.frequency});
    }
    files.push_back(out_dir / "sweep.csv");
  }
  return files;
}

OutputFiles cmd_deer(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto& deer = need(cfg.deer, "deer");
  const auto state = EntangledState::from_name(cfg.state);
  double a_eff = 0.0;
  if (deer.a_eff) {
    a_eff = *deer.a_eff;
  } else {
    const auto spins = dark_spins_of(cfg);
    a_eff = strongest_coupling(sensors_of(cfg), state, spins.at(deer.target), field_of(cfg));
  }
  const auto times = linspace(0.0, deer.t_max, deer.samples);
  auto trace = deer_trace(a_eff, deer.t2, deer.p, times);
  trace.sensor_state = state.name();
  OutputFiles files;
  {
    CsvWriter csv(out_dir / "trace.csv", cfg, "t_us,value");
    for (std::size_t i = 0; i < times.size(); ++i) csv.row({times[i], trace.values[i]});
    files.push_back(out_dir / "trace.csv");
  }
  const auto fft = fft_peaks(trace);
  {
    CsvWriter csv(out_dir / "fft.csv", cfg, "f_MHz,amplitude");
    for (std::size_t k = 0; k < fft.spectrum.frequencies.size(); ++k)
      csv.row({fft.spectrum.frequencies[k], fft.spectrum.amplitudes[k]});
    files.push_back(out_dir / "fft.csv");
  }
  write_json(out_dir / "fft.json", cfg,
             {{"state", state.name()},
              {"a_eff_MHz", a_eff},
              {"peak_frequency_MHz", fft.peak_frequency},
              {"resolution_MHz", fft.resolution},
              {"oscillation", fft.oscillation},
              {"entangling_time_us", a_eff > 0.0 ? json(entangling_time(a_eff)) : json(nullptr)}});
  files.push_back(out_dir / "fft.json");

  if (deer.telegraph) {
    MetastableOptions opt{deer.trajectories, cfg.seed, cfg.threads};
    const auto on = metastable_deer_trace(MetastableRegime::On, a_eff, deer.t2, deer.p, times, *deer.telegraph, opt);
    const auto off = metastable_deer_trace(MetastableRegime::Off, a_eff, deer.t2, deer.p, times, *deer.telegraph, opt);
    const auto sw =
        metastable_deer_trace(MetastableRegime::Switching, a_eff, deer.t2, deer.p, times, *deer.telegraph, opt);
    const auto coh =
        metastable_coherence(MetastableRegime::Switching, a_eff, deer.t2, deer.p, times, *deer.telegraph, opt);
    CsvWriter csv(out_dir / "metastable.csv", cfg, "t_us,on,off,switching,switching_coherence");
    for (std::size_t i = 0; i < times.size(); ++i) csv.row({times[i], on[i], off[i], sw[i], coh[i]});
    files.push_back(out_dir / "metastable.csv");
  }
  return files;
}

OutputFiles cmd_map_resolution(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto& m = need(cfg.map, "map");
  const auto& target = cfg.species_named(m.target);
  const MagneticField field = cfg.field.value_or(MagneticField());
  OutputFiles files;
  if (cfg.sensors) {
    for (const auto& name : m.states) {
      const auto state = EntangledState::from_name(name);
      const auto map = coupling_map(*cfg.sensors, state, target, field, m.grid, kDipolePrefactor, cfg.threads);
      const auto path = out_dir / ("map_" + state.name() + ".csv");
      CsvWriter csv(path, cfg, "x_nm,y_nm,A_MHz");
      for (std::size_t iy = 0; iy < map.ys.size(); ++iy)
        for (std::size_t ix = 0; ix < map.xs.size(); ++ix) csv.row({map.xs[ix], map.ys[iy], map.at(ix, iy)});
      files.push_back(path);
    }
  }
  if (!m.depths.empty() || !m.separations.empty()) {
    if (m.depths.empty() || m.separations.empty())
      throw ConfigError("config.map: resolution scan needs both 'depths' and 'separations'");
    ResolutionScanConfig rc;
    rc.density = m.density;
    rc.realizations = m.realizations;
    rc.seed = cfg.seed;
    rc.threshold = m.threshold;
    rc.extent = m.extent;
    rc.target = target;
    rc.field = field;
    rc.threads = cfg.threads;
    if (cfg.sensors) {
      rc.sensor = cfg.sensors->sensor1;
      const Vec3 d = cfg.sensors->position2 - cfg.sensors->position1;
      if (d.head<2>().norm() > 0.0) rc.azimuth = std::atan2(d.y(), d.x());
    }
    const auto rows = resolution_scan(m.depths, m.separations, rc);
    CsvWriter csv(out_dir / "resolution.csv", cfg, "depth_nm,separation_nm,area_single_nm2,area_psi2_nm2,ratio");
    for (const auto& r : rows) csv.row({r.depth, r.separation, r.area_single, r.area_psi2, r.ratio});
    files.push_back(out_dir / "resolution.csv");
  }
  if (files.empty()) throw ConfigError("config.map: nothing to compute (give 'sensors' or a depth/separation scan)");
  return files;
}

OutputFiles cmd_bath(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto& b = need(cfg.bath, "bath");
  const auto& geom = sensors_of(cfg);
  const auto& bath_species = cfg.species_named(b.species);
  const MagneticField field = cfg.field.value_or(MagneticField());

  std::vector<PairCouplingModel> models;
  for (const auto& name : b.states)
    models.emplace_back(geom, EntangledState::from_name(name), bath_species, field);

  BathConfig bc;
  bc.density = b.density;
  bc.depth = std::max(-geom.position1.z(), -geom.position2.z());
  bc.extent = b.extent > 0.0 ? b.extent : auto_extent(bc.depth, geom.separation());
  bc.seed = cfg.seed;
  bc.realizations = b.realizations;
  bc.multiplicity = bath_species.multiplicity;

  const auto times = linspace(0.0, b.t_max, b.samples);
  const auto curves = b.mode == "fid" ? fid_signals(models, bc, times, cfg.threads)
                                      : hahn_echo_signals(models, bc, b.flip_rate, times, cfg.threads);

  std::string header = "t_us";
  for (const auto& m : models) header += "," + m.state().name() + "," + m.state().name() + "_stderr";
  const auto csv_path = out_dir / ("bath_" + b.mode + ".csv");
  {
    CsvWriter csv(csv_path, cfg, header);
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<double> row{times[i]};
      for (const auto& c : curves) {
        row.push_back(c.signal[i]);
        row.push_back(c.stderr_[i]);
      }
      csv.row(row);
    }
  }
  json fits = json::object();
  for (std::size_t k = 0; k < models.size(); ++k) {
    json entry;
    const auto t_e = first_crossing_time(times, curves[k].signal, std::exp(-1.0));
    entry["one_over_e_time_us"] = t_e ? json(*t_e) : json(nullptr);
    try {
      const auto fit = fit_decay(times, curves[k].signal);
      entry["t2_us"] = fit.t2;
      entry["p"] = fit.p;
      entry["rms_residual"] = fit.rms_residual;
    } catch (const FitDiverged& e) {
      entry["fit_error"] = e.what();
    }
    fits[models[k].state().name()] = entry;
  }
  write_json(out_dir / "bath_fits.json", cfg,
             {{"mode", b.mode}, {"extent_nm", bc.extent}, {"realizations", bc.realizations}, {"fits", fits}});
  return {csv_path, out_dir / "bath_fits.json"};
}

std::vector<CouplingMeasurement> read_measurements_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open measurement file " + path.string());
  std::vector<CouplingMeasurement> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!cells.empty() && cells[0].find("Bx") != std::string::npos) continue;
    if (cells.size() != 9)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 9 columns");
    double v[9];
    for (int i = 0; i < 9; ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cells[i] + "'");
      }
    }
    CouplingMeasurement m;
    m.field = MagneticField(Vec3(v[0], v[1], v[2]));
    m.transitions = {{static_cast<std::size_t>(v[3]), static_cast<std::size_t>(v[4])},
                     {static_cast<std::size_t>(v[5]), static_cast<std::size_t>(v[6])}};
    m.a_measured = v[7];
    m.sigma = v[8];
    try {
      m.validate();
    } catch (const Error& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(m);
  }
  return out;
}

OutputFiles cmd_localize(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto& l = need(cfg.localize, "localize");
  if (!l.measurements) throw ConfigError("config.localize: no measurement file given");
  const auto measurements = read_measurements_csv(*l.measurements);
  LocalizationSetup setup{cfg.species_named(l.sensor), cfg.species_named(l.target), l.sensor_position,
                          kDipolePrefactor};
  LocalizeOptions opt;
  opt.threads = cfg.threads;
  const auto result = localize(measurements, setup, l.region, opt);
  const auto ell = uncertainty_ellipsoid(result, l.confidence);

  json cov = json::array();
  for (int i = 0; i < 3; ++i) cov.push_back(vec_json(result.covariance.row(i).transpose()));
  json candidates = json::array();
  for (const auto& c : result.candidates) candidates.push_back({{"position_nm", vec_json(c.position)}, {"chi2", c.chi2}});
  json axes = json::array();
  for (int i = 0; i < 3; ++i) axes.push_back(vec_json(ell.axes.col(i)));
  write_json(out_dir / "localize.json", cfg,
             {{"position_nm", vec_json(result.position)},
              {"covariance_nm2", cov},
              {"residual", result.residual},
              {"well_determined", result.well_determined},
              {"candidates", candidates},
              {"ellipsoid",
               {{"confidence", l.confidence},
                {"semi_axes_nm", vec_json(ell.semi_axes)},
                {"axes", axes},
                {"degenerate", ell.degenerate}}}});
  return {out_dir / "localize.json"};
}

OutputFiles cmd_sensitivity(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto& s = need(cfg.sensitivity, "sensitivity");
  auto describe = [](const SensitivityParams& q) {
    return json{{"a_eff_MHz", q.a_eff}, {"t2_us", q.t2},       {"p", q.p},
                {"contrast", q.contrast}, {"n_avg", q.n_avg}, {"t_ext_us", q.t_ext()}};
  };
  const auto ref = optimal_deer_time(s.reference);
  const auto cand = optimal_deer_time(s.candidate);
  SensitivityParams ref_same = s.reference, cand_same = s.candidate;
  ref_same.t_deer = cand_same.t_deer = s.candidate.t_deer;
  write_json(out_dir / "sensitivity.json", cfg,
             {{"reference", {{"params", describe(s.reference)}, {"t_star_us", ref.t_deer}, {"eta", ref.eta}}},
              {"candidate", {{"params", describe(s.candidate)}, {"t_star_us", cand.t_deer}, {"eta", cand.eta}}},
              {"gain_db_at_optima", gain_db(ref.eta, cand.eta)},
              {"gain_db_at_t_deer",
               {{"t_deer_us", s.candidate.t_deer},
                {"gain_db", gain_db(sensitivity(ref_same), sensitivity(cand_same))}}}});
  return {out_dir / "sensitivity.json"};
}

}  // namespace spinsense
