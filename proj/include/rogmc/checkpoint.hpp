#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rogmc/graph.hpp"
#include "rogmc/model.hpp"

namespace rogmc {

// On disk: one line of JSON, a '\n', then little-endian float32 data for the
// base embeddings (N x d, row-major) followed by each Q_r (d x d) in rating order.
struct CheckpointHeader {
    std::size_t num_nodes = 0;
    std::size_t num_users = 0;
    std::size_t dim = 0;
    std::vector<int> rating_set;
    std::vector<int> thresholds;
    DecompositionMode mode = DecompositionMode::cumulative;
    std::uint64_t seed = 0;
    std::size_t layers = 2;
    Aggregation aggregation = Aggregation::mean;
};

struct Checkpoint {
    CheckpointHeader header;
    ModelParams params;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header, const ModelParams& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws rogmc::Error naming the first header field inconsistent with the graphs.
void check_compatible(const CheckpointHeader& header, const DecomposedGraphs& graphs,
                      const std::vector<int>& rating_set);

}  // namespace rogmc
