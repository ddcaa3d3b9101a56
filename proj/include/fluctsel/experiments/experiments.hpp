#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluctsel/diagnostics/diagnostics.hpp"
#include "fluctsel/experiments/config.hpp"
#include "fluctsel/nuts/nuts.hpp"
#include "fluctsel/priors/priors.hpp"

namespace fluctsel {

/// Derived seeds. Every stream is stream_key(master, {purpose, indices...}).
namespace seeds {
inline constexpr std::uint64_t kData = 0xda7a;
inline constexpr std::uint64_t kChains = 0xc4a1;
inline constexpr std::uint64_t kSetting = 0x5e77;
inline constexpr std::uint64_t kExport = 0xe4e0;
std::uint64_t data(std::uint64_t master, std::uint64_t replicate);
std::uint64_t data(std::uint64_t master, std::uint64_t setting, std::uint64_t replicate);
std::uint64_t chains(std::uint64_t master, std::uint64_t replicate, std::uint64_t run);
}  // namespace seeds

/// One sampler run on `d`: jitter is centred on the moment-based start.
PosteriorDraws run_posterior(const Dataset& d, const StructureMask& s, const PriorSpec& spec,
                             Technique tech, SamplerConfig cfg);

/// max over parameters of |mean_a - mean_b| / sqrt((sd_a^2 + sd_b^2) / 2).
double max_std_mean_diff(const Summary& a, const Summary& b);

struct CommandResult {
  int exit_code = 0;
  std::string report;                // printed to stdout
  std::vector<std::string> outputs;  // files written
  nlohmann::json manifest;
};

CommandResult cmd_simulate(const ExperimentConfig& c);
CommandResult cmd_compare(const ExperimentConfig& c);
CommandResult cmd_bias_study(const ExperimentConfig& c);
CommandResult cmd_efficiency_study(const ExperimentConfig& c);
CommandResult cmd_la_check(const ExperimentConfig& c);
CommandResult cmd_model_select(const ExperimentConfig& c);
CommandResult cmd_verify(const ExperimentConfig& c);

/// Dispatches by subcommand name and writes <out>/<name>.manifest.json.
CommandResult run_command(const std::string& name, const ExperimentConfig& c);

}  // namespace fluctsel
