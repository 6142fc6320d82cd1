#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "rogmc/dataset.hpp"
#include "rogmc/graph.hpp"
#include "rogmc/model.hpp"

namespace rogmc {

struct TrainConfig {
    double alpha = 0.5;   // pairwise ranking weight
    double lambda = 1.0;  // interest regularization weight
    double learning_rate = 1e-3;
    std::size_t epochs = 1000;
    std::size_t patience = 50;
    std::uint64_t seed = 13;
    std::size_t layers = 2;
    std::size_t dim = 64;
    DecompositionMode decomposition_mode = DecompositionMode::cumulative;
    std::vector<int> thresholds;  // empty: the full rating set
    std::size_t negatives_per_positive = 1;
    double ir_epsilon = 1e-12;
    Aggregation aggregation = Aggregation::mean;
    InitConfig init;

    void validate() const;
    PropagationConfig propagation() const { return {layers, aggregation}; }
};

inline constexpr std::int64_t kNoNegative = -1;

// (user, rated item, non-interacted item). neg_item is kNoNegative for users
// who interacted with every item; those triplets carry only the rating term.
struct TrainingTriplet {
    std::uint32_t user = 0;
    std::uint32_t pos_item = 0;
    std::int64_t neg_item = kNoNegative;
    std::uint32_t rating_index = 0;  // position of the positive's rating in rating_set

    friend bool operator==(const TrainingTriplet&, const TrainingTriplet&) = default;
};

// Draws negatives uniformly from the items a user never interacted with;
// unknown-rating pairs count as interactions.
class NegativeSampler {
public:
    explicit NegativeSampler(const Dataset& train);

    std::vector<TrainingTriplet> sample(std::size_t negatives_per_positive, Rng& rng) const;
    std::span<const std::uint32_t> interacted(std::size_t user) const { return interacted_[user]; }
    std::size_t saturated_users() const noexcept { return saturated_users_; }

private:
    const Dataset* train_;
    std::vector<std::vector<std::uint32_t>> interacted_;  // sorted per user
    std::size_t saturated_users_ = 0;
};

std::vector<TrainingTriplet> sample_negatives(const Dataset& train, std::size_t negatives_per_positive,
                                              std::uint64_t seed);

// -log p(true_rating), probability clamped at 1e-12.
double loss_ce(std::span<const double> probabilities, int true_rating, std::span<const int> rating_set);
// softplus(-(o_pos - o_neg)) = -log sigmoid(o_pos - o_neg).
double loss_bpr(double o_pos, double o_neg);
// (1/|T|) sum_t sum_i sqrt(||h_t[i] - h_I[i]||^2 + epsilon)
double loss_ir(std::span<const Matrix> h_levels, const Matrix& h_interest, double epsilon);
double loss_ir(const ForwardCache& cache, double epsilon);

// Unweighted components; total = ce + alpha * bpr + lambda * ir. A term whose
// weight is zero is not evaluated and reads 0.
struct LossBreakdown {
    double ce = 0.0;
    double bpr = 0.0;
    double ir = 0.0;
    double total = 0.0;

    friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

struct GradientSet {
    Matrix base;
    std::vector<Matrix> bilinear;

    static GradientSet zeros_like(const ModelParams& params);
};

LossBreakdown total_loss(const DecomposedGraphs& graphs, const ForwardCache& cache,
                         std::span<const TrainingTriplet> triplets, const ModelParams& params,
                         const TrainConfig& config);

GradientSet backward(const DecomposedGraphs& graphs, const ForwardCache& cache,
                     std::span<const TrainingTriplet> triplets, const ModelParams& params, const TrainConfig& config);

// Both at once; the training loop uses this.
LossBreakdown loss_and_gradients(const DecomposedGraphs& graphs, const ForwardCache& cache,
                                 std::span<const TrainingTriplet> triplets, const ModelParams& params,
                                 const TrainConfig& config, GradientSet& grads);

struct OptimizerState {
    GradientSet first_moment;
    GradientSet second_moment;
    std::size_t step = 0;

    static OptimizerState zeros_like(const ModelParams& params);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

void adam_step(ModelParams& params, const GradientSet& grads, OptimizerState& state, double learning_rate);

struct EpochRecord {
    std::size_t epoch = 0;
    LossBreakdown loss;  // at the parameters entering the epoch
    double val_rmse = 0.0;  // after the epoch's update
    bool best = false;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
    ModelParams params;  // best-validation parameters
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_rmse = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const SplitDataset& split, const DecomposedGraphs& graphs, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// epoch,ce,bpr,ir,total,val_rmse,best_flag
void write_history_csv(std::ostream& out, std::span<const EpochRecord> history);

}  // namespace rogmc
