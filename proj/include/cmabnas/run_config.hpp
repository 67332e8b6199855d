#pragma once

// Run configuration file: flat sectioned key = value text.
//
//   [space]
//   nodes = 4
//   operations = skip_connect, sep_conv_3x3, ...   (or: standard | s2 | s4)
//   [engine]
//   epochs, batch, l_sim, l_best, alpha0, alpha_decay, top_k, warmup, seed,
//   policy, sampler, parallel_width
//   [oracle]
//   kind = separable | coupled | tabular | external
//   seed, noise_sigma, epsilon, coupling_seed, table, command, workers,
//   timeout_ms, curve_rate
//   [output]
//   directory
//
// [space], [engine] and [output] may be omitted (defaults apply); [oracle] is
// required. Unknown sections and keys are rejected.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cmabnas/nmcs_engine.hpp"
#include "cmabnas/oracles.hpp"
#include "cmabnas/search_space.hpp"

namespace cmabnas {

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct OracleSpec
{
    std::string kind = "separable";
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    double epsilon = 0.1;
    std::uint64_t coupling_seed = 1;
    std::filesystem::path table;
    std::vector<std::string> command;
    std::size_t workers = 1;
    std::chrono::milliseconds timeout{60'000};
    /// 0 disables the learning-curve wrapper.
    double curve_rate = 0.0;
};

struct RunConfig
{
    SearchSpaceConfig space;
    EngineConfig engine;
    OracleSpec oracle;
    std::filesystem::path output_dir = "cmabnas-run";
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies `section.key=value`.
void apply_override(RunConfig& config, std::string_view assignment);

/// Canonical text form; parse_run_config(format_run_config(c)) reproduces c.
std::string format_run_config(const RunConfig& config);

/// Validates every section; throws ConfigError.
void validate_run_config(const RunConfig& config);

/// Builds the configured oracle. `seed_offset` shifts the oracle seeds (used
/// by multi-seed benchmarks).
std::unique_ptr<RewardOracle> make_oracle(const RunConfig& config, std::uint64_t seed_offset = 0);

/// Operations preset name or comma-separated list.
OperationSet parse_operations(std::string_view value);

} // namespace cmabnas
