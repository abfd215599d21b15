#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <vector>

#include "sasfm_cli/config.hpp"

namespace sasfm::cli {

/// Command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::size_t chains = 1;
};

enum ExitCode : int {
    kSuccess = 0,
    kFailure = 1,
    kValidation = 2,
    kNumerical = 3,
    kIo = 4,
};

/// Loads, checks required keys for `command` and applies overrides.
ExperimentConfig prepare(const std::filesystem::path& config_path, const std::string& command,
                         const Overrides& overrides);

/// data.csv and truth.json.
std::vector<std::filesystem::path> cmd_simulate(const ExperimentConfig& config);
/// draws, acceptance and proposal files; per-chain suffixes when chains > 1.
std::vector<std::filesystem::path> cmd_fit(const ExperimentConfig& config, std::size_t chains = 1);
/// Centered summary, mean phase, variance draws, traces and (with a truth file) delta_mu.json.
std::vector<std::filesystem::path> cmd_summarize(const ExperimentConfig& config);
/// Centered mean, FPCA basis and energies, projection-residual sweep.
std::vector<std::filesystem::path> cmd_fpca(const ExperimentConfig& config);

ExitCode exit_code_for(const std::exception& e);

/// Full command-line entry point.
int run_cli(int argc, char** argv);

}  // namespace sasfm::cli
