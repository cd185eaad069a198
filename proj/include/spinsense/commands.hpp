#pragma once

#include <filesystem>
#include <vector>

#include "spinsense/config.hpp"

namespace spinsense {

/// Each command reads its sections of `config`, writes result files into
/// `out_dir` and returns their paths. Missing sections raise ConfigError;
/// numerical failures propagate as the library's own errors.
using OutputFiles = std::vector<std::filesystem::path>;

OutputFiles cmd_spectrum(const ExperimentConfig& config, const std::filesystem::path& out_dir);
OutputFiles cmd_deer(const ExperimentConfig& config, const std::filesystem::path& out_dir);
OutputFiles cmd_map_resolution(const ExperimentConfig& config, const std::filesystem::path& out_dir);
OutputFiles cmd_bath(const ExperimentConfig& config, const std::filesystem::path& out_dir);
OutputFiles cmd_localize(const ExperimentConfig& config, const std::filesystem::path& out_dir);
OutputFiles cmd_sensitivity(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Measurement table with columns Bx_G, By_G, Bz_G, sensor_j, sensor_jp,
/// target_j, target_jp, A_MHz, sigma_MHz. Lines starting with '#' and a
/// header row are skipped.
std::vector<CouplingMeasurement> read_measurements_csv(const std::filesystem::path& path);

}  // namespace spinsense
