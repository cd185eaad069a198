#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinsense/bath_dynamics.hpp"
#include "spinsense/localize.hpp"
#include "spinsense/protocols.hpp"

namespace spinsense {

inline constexpr const char* kVersion = "0.1.0";

struct FieldSweep {
  Vec3 direction = Vec3::UnitZ();
  double from = 0.0;  ///< G
  double to = 300.0;
  std::size_t steps = 61;
};

struct DarkSpinEntry {
  std::string species;
  Vec3 position = Vec3::Zero();
};

struct DeerSection {
  std::optional<double> a_eff;  ///< MHz; derived from the first dark spin when absent
  std::size_t target = 0;       ///< index into dark_spins
  double t2 = std::numeric_limits<double>::infinity();
  double p = 1.0;
  double t_max = 20.0;
  std::size_t samples = 256;
  std::optional<TelegraphConfig> telegraph;
  int trajectories = 10000;
};

struct BathSection {
  std::string mode = "echo";  ///< "fid" or "echo"
  std::string species = "bath";
  double density = 0.01;
  double extent = 0.0;
  int realizations = 1000;
  double flip_rate = 0.05;
  double t_max = 300.0;
  std::size_t samples = 301;
  std::vector<std::string> states{"single", "psi1", "psi2"};
};

struct MapSection {
  GridSpec grid;
  std::string target = "bath";
  std::vector<std::string> states{"single", "psi2"};
  std::vector<double> depths;
  std::vector<double> separations;
  double density = 0.01;
  int realizations = 1000;
  double threshold = kSensingThreshold;
  double extent = 0.0;
};

struct LocalizeSection {
  std::string sensor;
  std::string target;
  Vec3 sensor_position = Vec3::Zero();
  SearchRegion region;
  double confidence = 0.6827;
  std::optional<std::filesystem::path> measurements;
};

struct SensitivitySection {
  SensitivityParams reference;
  SensitivityParams candidate;
};

/// Parsed experiment description. Species are referenced by name.
struct ExperimentConfig {
  nlohmann::json source;  ///< normalized input, hashed into output headers
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::map<std::string, SpinSpecies> species;
  std::optional<MagneticField> field;
  std::optional<FieldSweep> field_sweep;
  std::optional<SensorPairGeometry> sensors;
  std::string state = "psi2";
  std::vector<DarkSpinEntry> dark_spins;
  std::optional<SpectrumScan> spectrum;
  std::optional<DeerSection> deer;
  std::optional<BathSection> bath;
  std::optional<MapSection> map;
  std::optional<LocalizeSection> localize;
  std::optional<SensitivitySection> sensitivity;

  const SpinSpecies& species_named(const std::string& name) const;
};

/// Schema check and conversion. Unknown keys and unresolved species names
/// raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a hash of the normalized config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace spinsense
