#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rogmc/dataset.hpp"
#include "rogmc/training.hpp"

namespace rogmc {

// Everything one CLI invocation needs. Precedence when resolving:
// command-line flag > config file > these defaults.
struct RunConfig {
    TrainConfig train;

    std::filesystem::path dataset;        // raw ratings file
    RatingFormat format = RatingFormat::tsv;
    std::filesystem::path prepared_dir;   // output of `prepare`; used instead of `dataset` when set
    std::size_t k_core = 10;
    SplitRatios ratios;
    std::uint64_t split_seed = 13;
    double keep_fraction = 1.0;
    std::uint64_t mask_seed = 13;

    std::filesystem::path out = "runs";
    std::string variant = "full";
    std::vector<std::string> variants;    // ablate: empty means every ablation variant
    std::vector<double> fractions;        // ablate: empty means {keep_fraction}
    std::vector<std::uint64_t> seeds = {13, 17, 19};

    std::filesystem::path checkpoint;     // analyze
    bool sweep = false;                   // analyze: lambda x alpha grid
    std::vector<double> sweep_lambdas = {0.0, 0.1, 0.5, 1.0, 2.0};
    std::vector<double> sweep_alphas = {0.0, 0.1, 0.5, 1.0};

    bool deterministic = false;
    std::size_t threads = 0;              // 0: ROGMC_THREADS or hardware concurrency
    bool verbose = false;

    // Range checks shared by every command; throws std::invalid_argument.
    void validate() const;
    std::size_t worker_threads() const;
};

nlohmann::json to_json(const RunConfig& config);
// Unknown keys are rejected.
void apply_json(RunConfig& config, const nlohmann::json& values);

// JSON when the file starts with '{', otherwise "key = value" lines
// (a TOML subset: quoted strings, numbers, booleans, flat arrays, # comments).
nlohmann::json parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Stable 64-bit FNV-1a of the canonical JSON (output directory excluded), as hex.
std::string config_hash(const RunConfig& config);

}  // namespace rogmc
