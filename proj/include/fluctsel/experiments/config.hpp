#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluctsel/io/io.hpp"
#include "fluctsel/nuts/nuts.hpp"
#include "fluctsel/simulate/simulate.hpp"

namespace fluctsel {

enum class Technique { Laplace, Full };
const char* technique_name(Technique t);

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path out = "out";
  std::vector<std::string> priors{"prior1", "prior2"};
  std::vector<Technique> techniques{Technique::Laplace};

  SimDesign design;
  SamplerConfig sampler;

  int replicates = 50;
  double divergence_threshold = 0.001;

  std::vector<int> grid_tmax;
  std::vector<double> grid_n;
  std::vector<double> grid_phi;
  int efficiency_replicates = 1;
  double overlap_tolerance = 0.1;

  std::filesystem::path data;  // brood CSV; empty = simulated
  std::vector<int> models{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};

  int kde_grid = 64;

  bool verify_quick = false;

  nlohmann::json to_json() const;
};

/// Command-line overrides; unset fields keep the config value.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> prior;
  std::optional<std::string> laplace;  // on | off
  std::optional<std::string> data;
  std::optional<bool> quick;
};

/// Builds a config from INI keys and overrides. All keys are validated
/// before anything is returned; unknown keys are rejected. Throws ConfigError.
ExperimentConfig make_config(const IniMap& ini, const Overrides& ov = {});
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const Overrides& ov = {});

/// Every recognized key with its default, one per line, INI layout.
std::string default_config_text();

}  // namespace fluctsel
