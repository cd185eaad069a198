// Command-line front end. Exit codes: 0 ok, 2 configuration error,
// 3 computation error. Errors are also written to stderr as JSON.
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spinsense/commands.hpp"
#include "spinsense/errors.hpp"

namespace {

using Command = spinsense::OutputFiles (*)(const spinsense::ExperimentConfig&, const std::filesystem::path&);

int report(int code, const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinsense: entangled spin-pair sensing toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", spinsense::kVersion);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string measurements;
  bool validate_only = false;

  const std::map<std::string, std::pair<Command, std::string>> commands{
      {"spectrum", {spinsense::cmd_spectrum, "DEER frequency scan and field sweep"}},
      {"deer", {spinsense::cmd_deer, "DEER time trace, FFT peak and metastable regimes"}},
      {"map-resolution", {spinsense::cmd_map_resolution, "coupling maps and effective sensing areas"}},
      {"bath", {spinsense::cmd_bath, "FID or Hahn-echo decay in a random surface bath"}},
      {"localize", {spinsense::cmd_localize, "3D target position from couplings at several fields"}},
      {"sensitivity", {spinsense::cmd_sensitivity, "optimal DEER time, sensitivity and gain"}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", config_path, "experiment JSON file")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
    sub->add_flag("--validate-only", validate_only, "check the config and exit");
    if (name == "localize") sub->add_option("--measurements", measurements, "measurement CSV");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report(2, "UsageError", e.what());
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    auto config = spinsense::load_config(config_path);
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    if (!measurements.empty()) {
      if (!config.localize) throw spinsense::ConfigError("config: missing section 'localize'");
      config.localize->measurements = measurements;
    }
    if (validate_only) {
      std::cout << nlohmann::json{{"valid", true}, {"command", name}, {"config_hash", spinsense::config_hash(config)}}
                       .dump()
                << '\n';
      return 0;
    }
    std::filesystem::create_directories(out_dir);
    const auto files = commands.at(name).first(config, out_dir);
    nlohmann::json written = nlohmann::json::array();
    for (const auto& f : files) written.push_back(f.string());
    std::cout << nlohmann::json{{"command", name}, {"files", written}}.dump() << '\n';
    return 0;
  } catch (const spinsense::ConfigError& e) {
    return report(2, e.kind(), e.what());
  } catch (const spinsense::Error& e) {
    return report(3, e.kind(), e.what());
  } catch (const std::exception& e) {
    return report(3, "InternalError", e.what());
  }
}
