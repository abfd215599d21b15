#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sasfm/grid.hpp"
#include "sasfm/mcmc.hpp"
#include "sasfm_cli/config.hpp"

namespace sasfm::cli {

/// Dataset content that fails ingestion (NaN, ragged rows, non-monotone time).
class DataError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Writes several files so that either all of them appear or none does.
class OutputBatch {
public:
    explicit OutputBatch(std::filesystem::path dir) : dir_(std::move(dir)) {}
    void add(const std::string& name, std::string content);
    /// Writes temporaries next to the targets, then renames them into place.
    std::vector<std::filesystem::path> commit();

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

struct LoadedDataset {
    TimeGrid grid;
    Dataset data;
    std::vector<double> original_times;  ///< before rescaling to [0,1]
};

/// Dataset CSV: header row, first column time, one column per observation.
std::string dataset_csv(const std::vector<double>& times, const Dataset& data);
/// Times are rescaled affinely to [0,1] when the column does not already span it.
LoadedDataset read_dataset_csv(const std::filesystem::path& path);

/// Draws CSV: iteration, a_1..a_B, sigma2, sigma_c2, then phase parameters per observation.
std::vector<std::string> draws_header(const ModelConfig& config, std::size_t observations);
std::string draws_csv(const PosteriorDraws& draws);
/// Throws DataError when the header does not match the config and observation count.
PosteriorDraws read_draws_csv(const std::filesystem::path& path, const ModelConfig& config,
                              std::size_t observations);

std::string read_text(const std::filesystem::path& path);

}  // namespace sasfm::cli
