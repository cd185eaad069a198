#include "spinsense/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include "spinsense/errors.hpp"

namespace spinsense {

using nlohmann::json;

namespace {

// Typed access to one JSON object that remembers which keys were read, so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) fail("missing key '" + key + "'");
    return node_.at(key);
  }

  Section child(const std::string& key) { return Section(raw(key), path_ + "." + key); }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail("'" + key + "' must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  template <class Int>
  Int integer(const std::string& key, Int fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) return static_cast<Int>(v.get<std::uint64_t>());
      if (v.get<std::int64_t>() < 0) fail("'" + key + "' must be nonnegative");
    }
    return static_cast<Int>(v.get<std::int64_t>());
  }

  std::string text(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  Vec3 vec3(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array() || v.size() != 3) fail("'" + key + "' must be a 3-element array");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) fail("'" + key + "' must contain numbers");
      out[i] = v[i].get<double>();
    }
    if (!out.allFinite()) fail("'" + key + "' must be finite");
    return out;
  }
  Vec3 vec3(const std::string& key, const Vec3& fallback) { return has(key) ? vec3(key) : fallback; }

  std::vector<double> numbers(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) fail("'" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail("'" + key + "' must contain numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) fail("'" + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) fail("'" + key + "' must contain strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, _] : node_.items())
      if (!seen_.count(key)) fail("unknown key '" + key + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  const std::string& path() const { return path_; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

SpinSpecies parse_species(const std::string& name, Section s) {
  SpinSpecies sp;
  sp.name = name;
  sp.multiplicity = s.integer<int>("multiplicity", 2);
  sp.zfs_d = s.number("D", 0.0);
  sp.zfs_e = s.number("E", 0.0);
  sp.gamma = s.number("gamma", kElectronGamma);
  const Vec3 z = s.vec3("z_axis", Vec3::UnitZ());
  if (!(z.norm() > 0.0)) s.fail("z_axis must be nonzero");
  sp.axes = s.has("x_axis") ? axes_from_zx(z.normalized(), s.vec3("x_axis")) : axes_from_z(z.normalized());
  s.finish();
  try {
    sp.validate();
  } catch (const Error& e) {
    s.fail(e.what());
  }
  return sp;
}

Vec3 unit(Section& s, const std::string& key, const ExperimentConfig& cfg) {
  // Either an explicit vector or the principal axis of a named species.
  if (s.raw(key).is_string()) return cfg.species_named(s.text(key)).principal_z();
  const Vec3 v = s.vec3(key);
  if (!(v.norm() > 0.0)) s.fail("'" + key + "' must be nonzero");
  return v.normalized();
}

MagneticField parse_field(Section s, const ExperimentConfig& cfg) {
  MagneticField f;
  if (s.has("gauss")) {
    f = MagneticField(s.vec3("gauss"));
  } else {
    const double b = s.number("magnitude");
    f = MagneticField::along(unit(s, "direction", cfg), b);
  }
  s.finish();
  return f;
}

SensorPairGeometry parse_sensors(Section s, const ExperimentConfig& cfg) {
  const auto& s1 = cfg.species_named(s.text("sensor1"));
  const auto& s2 = cfg.species_named(s.text("sensor2", s1.name));
  SensorPairGeometry g;
  if (s.has("position1") || s.has("position2")) {
    g.sensor1 = s1;
    g.sensor2 = s2;
    g.position1 = s.vec3("position1");
    g.position2 = s.vec3("position2");
  } else {
    g = SensorPairGeometry::symmetric(s.number("depth"), s.number("separation", 0.0),
                                      s.number("azimuth_deg", 0.0) * std::numbers::pi / 180.0, s1, s2);
  }
  s.finish();
  try {
    g.validate();
  } catch (const Error& e) {
    s.fail(e.what());
  }
  return g;
}

SensitivityParams parse_sensitivity_params(Section s) {
  SensitivityParams q;
  q.a_eff = s.number("a_eff");
  q.t2 = s.number("t2");
  q.p = s.number("p", q.p);
  q.contrast = s.number("contrast", q.contrast);
  q.n_avg = s.number("n_avg");
  q.t_init = s.number("t_init", q.t_init);
  q.t_readout = s.number("t_readout", q.t_readout);
  q.t_other = s.number("t_other", q.t_other);
  q.t_deer = s.number("t_deer", q.t2);
  s.finish();
  try {
    q.validate();
  } catch (const Error& e) {
    s.fail(e.what());
  }
  return q;
}

void check_state(Section& s, const std::string& name) {
  try {
    EntangledState::from_name(name);
  } catch (const Error& e) {
    s.fail(e.what());
  }
}

}  // namespace

const SpinSpecies& ExperimentConfig::species_named(const std::string& name) const {
  const auto it = species.find(name);
  if (it == species.end()) throw ConfigError("unknown species '" + name + "'");
  return it->second;
}

ExperimentConfig parse_config_impl(const json& doc) {
  ExperimentConfig cfg;
  cfg.source = doc;
  Section root(doc, "config");
  cfg.seed = root.integer<std::uint64_t>("seed", 1);
  cfg.threads = root.integer<unsigned>("threads", 1);

  if (root.has("species")) {
    const auto& node = root.raw("species");
    if (!node.is_object()) root.fail("'species' must be an object");
    for (const auto& [name, value] : node.items())
      cfg.species.emplace(name, parse_species(name, Section(value, "config.species." + name)));
  }
  // Built-in bath species unless the config overrides it.
  cfg.species.emplace("bath", spin_half("bath"));

  if (root.has("field")) cfg.field = parse_field(root.child("field"), cfg);
  if (root.has("field_sweep")) {
    auto s = root.child("field_sweep");
    FieldSweep sw;
    sw.direction = unit(s, "direction", cfg);
    sw.from = s.number("from", sw.from);
    sw.to = s.number("to", sw.to);
    sw.steps = s.integer<std::size_t>("steps", sw.steps);
    if (sw.steps < 2 || sw.to < sw.from) s.fail("sweep needs to >= from and at least 2 steps");
    s.finish();
    cfg.field_sweep = sw;
  }
  if (root.has("sensors")) cfg.sensors = parse_sensors(root.child("sensors"), cfg);
  if (root.has("state")) {
    cfg.state = root.text("state");
    check_state(root, cfg.state);
  }
  if (root.has("dark_spins")) {
    const auto& arr = root.raw("dark_spins");
    if (!arr.is_array()) root.fail("'dark_spins' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section s(arr[i], "config.dark_spins[" + std::to_string(i) + "]");
      DarkSpinEntry e{s.text("species"), s.vec3("position")};
      cfg.species_named(e.species);
      s.finish();
      cfg.dark_spins.push_back(e);
    }
  }
  if (root.has("spectrum")) {
    auto s = root.child("spectrum");
    SpectrumScan scan;
    scan.f_min = s.number("f_min", scan.f_min);
    scan.f_max = s.number("f_max", scan.f_max);
    scan.f_step = s.number("f_step", scan.f_step);
    scan.evolution_time = s.number("evolution_time", scan.evolution_time);
    s.finish();
    try {
      scan.validate();
    } catch (const Error& e) {
      s.fail(e.what());
    }
    cfg.spectrum = scan;
  }
  if (root.has("deer")) {
    auto s = root.child("deer");
    DeerSection d;
    if (s.has("a_eff")) d.a_eff = s.number("a_eff");
    d.target = s.integer<std::size_t>("target", d.target);
    if (s.has("t2")) d.t2 = s.number("t2");
    d.p = s.number("p", d.p);
    d.t_max = s.number("t_max", d.t_max);
    d.samples = s.integer<std::size_t>("samples", d.samples);
    d.trajectories = s.integer<int>("trajectories", d.trajectories);
    if (s.has("telegraph")) {
      auto t = s.child("telegraph");
      TelegraphConfig tc;
      tc.rate_on_off = t.number("rate_on_off");
      tc.rate_off_on = t.number("rate_off_on");
      tc.initial_on = t.has("initial_on") ? t.raw("initial_on").get<bool>() : true;
      t.finish();
      try {
        tc.validate();
      } catch (const Error& e) {
        t.fail(e.what());
      }
      d.telegraph = tc;
    }
    if (!(d.t2 > 0.0) || !(d.p > 0.0) || !(d.t_max > 0.0) || d.samples < 16 || d.trajectories < 1)
      s.fail("deer needs positive t2, p, t_max, trajectories and at least 16 samples");
    if (!d.a_eff && d.target >= cfg.dark_spins.size()) s.fail("'target' does not name a dark spin");
    s.finish();
    cfg.deer = d;
  }
  if (root.has("bath")) {
    auto s = root.child("bath");
    BathSection b;
    b.mode = s.text("mode", b.mode);
    if (b.mode != "fid" && b.mode != "echo") s.fail("mode must be 'fid' or 'echo'");
    b.species = s.text("species", b.species);
    cfg.species_named(b.species);
    b.density = s.number("density", b.density);
    b.extent = s.number("extent", b.extent);
    b.realizations = s.integer<int>("realizations", b.realizations);
    b.flip_rate = s.number("flip_rate", b.flip_rate);
    b.t_max = s.number("t_max", b.t_max);
    b.samples = s.integer<std::size_t>("samples", b.samples);
    if (s.has("states")) b.states = s.strings("states");
    for (const auto& st : b.states) check_state(s, st);
    if (b.density < 0.0 || b.extent < 0.0 || b.realizations < 1 || b.flip_rate < 0.0 || !(b.t_max > 0.0) ||
        b.samples < 2)
      s.fail("bath parameters out of range");
    s.finish();
    cfg.bath = b;
  }
  if (root.has("map")) {
    auto s = root.child("map");
    MapSection m;
    if (s.has("grid")) {
      auto g = s.child("grid");
      m.grid.x_min = g.number("x_min", m.grid.x_min);
      m.grid.x_max = g.number("x_max", m.grid.x_max);
      m.grid.y_min = g.number("y_min", m.grid.y_min);
      m.grid.y_max = g.number("y_max", m.grid.y_max);
      m.grid.nx = g.integer<std::size_t>("nx", m.grid.nx);
      m.grid.ny = g.integer<std::size_t>("ny", m.grid.ny);
      m.grid.z = g.number("z", m.grid.z);
      g.finish();
      try {
        m.grid.validate();
      } catch (const Error& e) {
        g.fail(e.what());
      }
    }
    m.target = s.text("target", m.target);
    cfg.species_named(m.target);
    if (s.has("states")) m.states = s.strings("states");
    for (const auto& st : m.states) check_state(s, st);
    if (s.has("depths")) m.depths = s.numbers("depths");
    if (s.has("separations")) m.separations = s.numbers("separations");
    m.density = s.number("density", m.density);
    m.realizations = s.integer<int>("realizations", m.realizations);
    m.threshold = s.number("threshold", m.threshold);
    m.extent = s.number("extent", m.extent);
    if (!(m.density > 0.0) || m.realizations < 1 || !(m.threshold > 0.0 && m.threshold <= 1.0))
      s.fail("resolution parameters out of range");
    s.finish();
    cfg.map = m;
  }
  if (root.has("localize")) {
    auto s = root.child("localize");
    LocalizeSection l;
    l.sensor = s.text("sensor");
    l.target = s.text("target");
    cfg.species_named(l.sensor);
    cfg.species_named(l.target);
    l.sensor_position = s.vec3("sensor_position", l.sensor_position);
    l.region = SearchRegion::cube(l.sensor_position, 30.0);
    if (s.has("region")) {
      auto r = s.child("region");
      l.region.lower = r.vec3("lower", l.region.lower);
      l.region.upper = r.vec3("upper", l.region.upper);
      l.region.pitch = r.number("pitch", l.region.pitch);
      r.finish();
      try {
        l.region.validate();
      } catch (const Error& e) {
        r.fail(e.what());
      }
    }
    l.confidence = s.number("confidence", l.confidence);
    if (!(l.confidence > 0.0 && l.confidence < 1.0)) s.fail("confidence must lie in (0, 1)");
    if (s.has("measurements")) l.measurements = s.text("measurements");
    s.finish();
    cfg.localize = l;
  }
  if (root.has("sensitivity")) {
    auto s = root.child("sensitivity");
    SensitivitySection q{parse_sensitivity_params(s.child("reference")),
                         parse_sensitivity_params(s.child("candidate"))};
    s.finish();
    cfg.sensitivity = q;
  }
  root.finish();
  return cfg;
}

ExperimentConfig parse_config(const json& doc) {
  try {
    return parse_config_impl(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  auto cfg = parse_config(doc);
  // Relative measurement paths resolve against the config's directory.
  if (cfg.localize && cfg.localize->measurements && cfg.localize->measurements->is_relative())
    cfg.localize->measurements = path.parent_path() / *cfg.localize->measurements;
  return cfg;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.source.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace spinsense
