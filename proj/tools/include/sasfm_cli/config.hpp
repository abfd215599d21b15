#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "sasfm/error.hpp"
#include "sasfm/fpca.hpp"
#include "sasfm/mcmc.hpp"
#include "sasfm/model.hpp"
#include "sasfm/simulate.hpp"

namespace sasfm::cli {

/// Invalid configuration; the message carries the file and line when known.
class ConfigError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

/// File system failure (missing input, unwritable output, malformed file).
class IoError : public Error {
public:
    using Error::Error;
};

/// Raw `key = value` pairs with the line each came from.
struct KeyValueFile {
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    std::filesystem::path source;
    std::map<std::string, Entry> entries;

    /// '#' starts a comment; blank lines are skipped; duplicate keys are errors.
    static KeyValueFile parse(const std::string& text, const std::filesystem::path& source = "<config>");
    static KeyValueFile load(const std::filesystem::path& path);
};

struct FpcaSettings {
    std::size_t iterations = 20;
    AlignFamily family = AlignFamily::PM1Grid;
    std::size_t components = 0;   ///< 0 means "enough for energy_fraction"
    double energy_fraction = 0.9;
    std::size_t sweep_max = 30;
    BasisKind sweep_basis = BasisKind::ModifiedFourier;
};

/// Everything a subcommand needs, validated before any computation.
struct ExperimentConfig {
    std::filesystem::path source;
    std::filesystem::path data;    ///< dataset CSV (fit, summarize, fpca)
    std::filesystem::path out = ".";
    std::filesystem::path draws;   ///< draws CSV for summarize; defaults to <out>/draws.csv
    std::filesystem::path truth;   ///< optional truth JSON for summarize
    ModelConfig model;
    ProposalConfig proposal;
    ChainConfig chain;
    StartMethod start = StartMethod::Aligned;
    std::optional<SimSpec> sim;    ///< present when any sim.* key is given
    FpcaSettings fpca;
    std::size_t trace_observation = 0;

    /// Schema check: unknown keys and malformed values raise ConfigError with the line number.
    static ExperimentConfig from(const KeyValueFile& file);
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Keys that must be present for `command`; throws ConfigError naming the first missing one.
    static void require_keys(const KeyValueFile& file, const std::string& command);
};

const char* to_string(StartMethod method);
StartMethod start_method_from_string(const std::string& name);

}  // namespace sasfm::cli
