#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "rogmc/config.hpp"
#include "rogmc/dataset.hpp"

namespace rogmc::cli {

struct CommandResult {
    int exit_code = 0;
    std::filesystem::path run_dir;
};

struct PreparedData {
    RawStats raw;
    RawStats filtered;
    SplitDataset split;  // training labels already masked
};

// Raw file -> k-core -> reindex -> per-user split -> rating-frac mask.
PreparedData prepare_data(const RunConfig& config);
// Reads train.tsv / val.tsv / test.tsv / metadata.json written by `prepare`.
SplitDataset load_prepared(const std::filesystem::path& dir);
// prepared_dir when set, otherwise the in-memory pipeline.
SplitDataset obtain_split(const RunConfig& config);

CommandResult cmd_prepare(const RunConfig& config, std::ostream& log);
CommandResult cmd_train(const RunConfig& config, std::ostream& log);
CommandResult cmd_ablate(const RunConfig& config, std::ostream& log);
CommandResult cmd_analyze(const RunConfig& config, std::ostream& log);

// Fresh directory <out>/<command>-<timestamp>-<config hash>.
std::filesystem::path make_run_dir(const RunConfig& config, const std::string& command);

}  // namespace rogmc::cli
