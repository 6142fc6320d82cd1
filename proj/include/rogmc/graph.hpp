#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rogmc/dataset.hpp"
#include "rogmc/kernels.hpp"

namespace rogmc {

// Symmetric bipartite adjacency over one node index space: users occupy
// [0, num_users) and items [num_users, num_users + num_items). Each row is
// sorted by neighbor index. edge_norm holds 1/c_ij for the stored edge.
struct SparseBipartiteGraph {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::vector<std::size_t> row_offsets;  // num_nodes + 1
    std::vector<std::uint32_t> neighbors;
    std::vector<double> edge_norm;

    std::size_t num_nodes() const noexcept { return num_users + num_items; }
    std::size_t num_edges() const noexcept { return neighbors.size() / 2; }  // undirected
    std::size_t degree(std::size_t node) const noexcept { return row_offsets[node + 1] - row_offsets[node]; }
    bool has_edge(std::size_t a, std::size_t b) const noexcept;
    // 0.0 when the edge is absent.
    double norm(std::size_t a, std::size_t b) const noexcept;
    // Undirected edges as (user, item) with item in local 0-based item space.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> user_item_edges() const;

    kernels::CsrView view() const noexcept {
        return {num_nodes(), row_offsets.data(), neighbors.data(), edge_norm.data()};
    }
};

// Builds the symmetric adjacency for the given (user, item) pairs and fills
// norms. Duplicate pairs are an error.
SparseBipartiteGraph build_bipartite_graph(std::size_t num_users, std::size_t num_items,
                                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

// edge_norm[i->j] = 1 / sqrt(deg(i) * deg(j)), degrees taken within `graph`.
SparseBipartiteGraph compute_norms(SparseBipartiteGraph graph);

enum class DecompositionMode { cumulative, exact, reverse_cumulative, none };

std::string to_string(DecompositionMode mode);
DecompositionMode parse_decomposition_mode(const std::string& name);

struct LevelGraph {
    int threshold = 0;
    SparseBipartiteGraph graph;
};

struct DecomposedGraphs {
    SparseBipartiteGraph interest;
    std::vector<LevelGraph> levels;  // ordered by threshold
    std::vector<int> thresholds;
    DecompositionMode mode = DecompositionMode::cumulative;

    std::size_t num_nodes() const noexcept { return interest.num_nodes(); }
    std::size_t num_users() const noexcept { return interest.num_users; }
};

SparseBipartiteGraph build_interest_graph(const Dataset& train);

// Empty thresholds mean "use the full rating set".
DecomposedGraphs build_cumulative(const Dataset& train, std::vector<int> thresholds);
DecomposedGraphs build_exact(const Dataset& train, std::vector<int> thresholds);
DecomposedGraphs build_reverse_cumulative(const Dataset& train, std::vector<int> thresholds);
// Single level that is a copy of the interest graph, keyed by min(thresholds).
DecomposedGraphs build_single_view(const Dataset& train, std::vector<int> thresholds);

DecomposedGraphs build_decomposition(const Dataset& train, DecompositionMode mode, std::vector<int> thresholds);

// Debug dump: "src\tdst\tnorm" per stored directed edge.
void export_edge_list(const SparseBipartiteGraph& graph, const std::filesystem::path& path);

}  // namespace rogmc
