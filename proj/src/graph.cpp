#include "rogmc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "rogmc/error.hpp"

namespace rogmc {

bool SparseBipartiteGraph::has_edge(std::size_t a, std::size_t b) const noexcept {
    const auto first = neighbors.begin() + static_cast<std::ptrdiff_t>(row_offsets[a]);
    const auto last = neighbors.begin() + static_cast<std::ptrdiff_t>(row_offsets[a + 1]);
    return std::binary_search(first, last, static_cast<std::uint32_t>(b));
}

double SparseBipartiteGraph::norm(std::size_t a, std::size_t b) const noexcept {
    const auto first = neighbors.begin() + static_cast<std::ptrdiff_t>(row_offsets[a]);
    const auto last = neighbors.begin() + static_cast<std::ptrdiff_t>(row_offsets[a + 1]);
    const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(b));
    if (it == last || *it != b) return 0.0;
    return edge_norm[static_cast<std::size_t>(it - neighbors.begin())];
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> SparseBipartiteGraph::user_item_edges() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    edges.reserve(num_edges());
    for (std::size_t u = 0; u < num_users; ++u) {
        for (std::size_t e = row_offsets[u]; e < row_offsets[u + 1]; ++e) {
            edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(neighbors[e] - num_users));
        }
    }
    return edges;
}

SparseBipartiteGraph build_bipartite_graph(std::size_t num_users, std::size_t num_items,
                                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    SparseBipartiteGraph g;
    g.num_users = num_users;
    g.num_items = num_items;
    const std::size_t n = num_users + num_items;
    g.row_offsets.assign(n + 1, 0);
    for (const auto& [u, i] : edges) {
        if (u >= num_users || i >= num_items) throw DataError("edge endpoint out of range");
        ++g.row_offsets[u + 1];
        ++g.row_offsets[num_users + i + 1];
    }
    for (std::size_t k = 0; k < n; ++k) g.row_offsets[k + 1] += g.row_offsets[k];
    g.neighbors.resize(g.row_offsets[n]);
    std::vector<std::size_t> cursor(g.row_offsets.begin(), g.row_offsets.end() - 1);
    for (const auto& [u, i] : edges) {
        const std::size_t item_node = num_users + i;
        g.neighbors[cursor[u]++] = static_cast<std::uint32_t>(item_node);
        g.neighbors[cursor[item_node]++] = u;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const auto first = g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.row_offsets[k]);
        const auto last = g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.row_offsets[k + 1]);
        std::sort(first, last);
        if (std::adjacent_find(first, last) != last) throw DataError("duplicate edge in bipartite graph");
    }
    return compute_norms(std::move(g));
}

SparseBipartiteGraph compute_norms(SparseBipartiteGraph graph) {
    graph.edge_norm.resize(graph.neighbors.size());
    for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
        const auto deg_i = static_cast<double>(graph.degree(i));
        for (std::size_t e = graph.row_offsets[i]; e < graph.row_offsets[i + 1]; ++e) {
            const auto deg_j = static_cast<double>(graph.degree(graph.neighbors[e]));
            graph.edge_norm[e] = 1.0 / std::sqrt(deg_i * deg_j);
        }
    }
    return graph;
}

std::string to_string(DecompositionMode mode) {
    switch (mode) {
        case DecompositionMode::cumulative: return "cumulative";
        case DecompositionMode::exact: return "exact";
        case DecompositionMode::reverse_cumulative: return "reverse_cumulative";
        case DecompositionMode::none: return "none";
    }
    return "unknown";
}

DecompositionMode parse_decomposition_mode(const std::string& name) {
    if (name == "cumulative") return DecompositionMode::cumulative;
    if (name == "exact") return DecompositionMode::exact;
    if (name == "reverse_cumulative" || name == "reverse") return DecompositionMode::reverse_cumulative;
    if (name == "none") return DecompositionMode::none;
    throw std::invalid_argument("unknown decomposition mode '" + name + "'");
}

SparseBipartiteGraph build_interest_graph(const Dataset& train) {
    if (train.interactions.empty()) throw DataError("cannot build the interest graph from an empty training set");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    edges.reserve(train.interactions.size());
    for (const auto& x : train.interactions) edges.emplace_back(x.user, x.item);
    return build_bipartite_graph(train.num_users, train.num_items, edges);
}

namespace {

std::vector<int> resolve_thresholds(const Dataset& train, std::vector<int> thresholds) {
    if (thresholds.empty()) return train.rating_set;
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    for (int t : thresholds) {
        if (train.rating_index(t) < 0) {
            throw DataError("decomposition threshold " + std::to_string(t) + " is not in the rating set");
        }
    }
    return thresholds;
}

DecomposedGraphs build_levels(const Dataset& train, std::vector<int> thresholds, DecompositionMode mode,
                              const std::function<bool(int rating, int threshold)>& keep) {
    DecomposedGraphs out;
    out.mode = mode;
    out.thresholds = resolve_thresholds(train, std::move(thresholds));
    out.interest = build_interest_graph(train);
    for (int t : out.thresholds) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (const auto& x : train.interactions) {
            if (x.known() && keep(x.label, t)) edges.emplace_back(x.user, x.item);
        }
        out.levels.push_back({t, build_bipartite_graph(train.num_users, train.num_items, edges)});
    }
    return out;
}

}  // namespace

DecomposedGraphs build_cumulative(const Dataset& train, std::vector<int> thresholds) {
    return build_levels(train, std::move(thresholds), DecompositionMode::cumulative,
                        [](int r, int t) { return r >= t; });
}

DecomposedGraphs build_exact(const Dataset& train, std::vector<int> thresholds) {
    return build_levels(train, std::move(thresholds), DecompositionMode::exact, [](int r, int t) { return r == t; });
}

DecomposedGraphs build_reverse_cumulative(const Dataset& train, std::vector<int> thresholds) {
    return build_levels(train, std::move(thresholds), DecompositionMode::reverse_cumulative,
                        [](int r, int t) { return r <= t; });
}

DecomposedGraphs build_single_view(const Dataset& train, std::vector<int> thresholds) {
    DecomposedGraphs out;
    out.mode = DecompositionMode::none;
    const auto resolved = resolve_thresholds(train, std::move(thresholds));
    out.thresholds = {resolved.front()};
    out.interest = build_interest_graph(train);
    out.levels.push_back({resolved.front(), out.interest});
    return out;
}

DecomposedGraphs build_decomposition(const Dataset& train, DecompositionMode mode, std::vector<int> thresholds) {
    switch (mode) {
        case DecompositionMode::cumulative: return build_cumulative(train, std::move(thresholds));
        case DecompositionMode::exact: return build_exact(train, std::move(thresholds));
        case DecompositionMode::reverse_cumulative: return build_reverse_cumulative(train, std::move(thresholds));
        case DecompositionMode::none: return build_single_view(train, std::move(thresholds));
    }
    throw std::invalid_argument("unhandled decomposition mode");
}

void export_edge_list(const SparseBipartiteGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.precision(17);
    for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
        for (std::size_t e = graph.row_offsets[i]; e < graph.row_offsets[i + 1]; ++e) {
            out << i << '\t' << graph.neighbors[e] << '\t' << graph.edge_norm[e] << '\n';
        }
    }
}

}  // namespace rogmc
