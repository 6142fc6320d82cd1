#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rogmc/dataset.hpp"
#include "rogmc/graph.hpp"
#include "rogmc/matrix.hpp"

namespace rogmc {

enum class Aggregation { mean, sum };

std::string to_string(Aggregation aggregation);
Aggregation parse_aggregation(const std::string& name);

struct PropagationConfig {
    std::size_t layers = 2;
    Aggregation aggregation = Aggregation::mean;
};

// Trainable state: one shared layer-0 embedding table for every subgraph and
// one d x d bilinear matrix per rating value (in rating_set order).
struct ModelParams {
    Matrix base;
    std::vector<Matrix> bilinear;
    std::vector<int> rating_set;

    std::size_t num_nodes() const noexcept { return base.rows(); }
    std::size_t dim() const noexcept { return base.cols(); }
    std::size_t num_ratings() const noexcept { return bilinear.size(); }

    // Throws NumericError / std::invalid_argument on shape or finiteness violations.
    void validate() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct InitConfig {
    double embedding_std = 0.1;
    double bilinear_noise_std = 0.01;
};

// Gaussian base embeddings; each Q_r = I + Gaussian noise.
ModelParams init_params(std::size_t num_nodes, std::size_t dim, std::vector<int> rating_set, Rng& rng,
                        const InitConfig& init = {});

// layers[0] = base; layers[l+1] = A layers[l]. Throws NumericError on overflow.
std::vector<Matrix> propagate(const SparseBipartiteGraph& graph, const Matrix& base, std::size_t layers);

Matrix aggregate_layers(std::span<const Matrix> layers, Aggregation aggregation = Aggregation::mean);

struct GraphRepresentation {
    std::vector<Matrix> layers;
    Matrix h;
};

struct ForwardCache {
    GraphRepresentation interest;
    std::vector<GraphRepresentation> levels;  // parallel to DecomposedGraphs::levels
    Matrix h;                                 // sum of level representations
};

ForwardCache forward(const DecomposedGraphs& graphs, const ModelParams& params, const PropagationConfig& config);

// z_r = h_u^T Q_r h_v for each rating, in rating_set order.
std::vector<double> decode_logits(std::span<const double> h_u, std::span<const double> h_v,
                                  const std::vector<Matrix>& bilinear);

// Max-shifted softmax.
std::vector<double> predict_distribution(std::span<const double> logits);

// Expected rating under `probabilities`.
double predict_rating(std::span<const double> probabilities, std::span<const int> rating_set);

// Per-rating user projections P_r[u] = Q_r^T h[u], so z_r(u, v) = P_r[u] . h[v].
// Turns the per-pair d^2 bilinear form into a d-length dot product.
struct UserProjections {
    std::vector<Matrix> per_rating;  // each num_users x d

    void logits(std::size_t user, std::span<const double> h_item, std::span<double> out) const;
};

UserProjections project_users(const Matrix& h, std::size_t num_users, const std::vector<Matrix>& bilinear);

// Expected ratings for (user, item) pairs; item indices are local item ids.
std::vector<double> predict_pairs(const ForwardCache& cache, const ModelParams& params, std::size_t num_users,
                                  std::span<const Interaction> pairs);

}  // namespace rogmc
