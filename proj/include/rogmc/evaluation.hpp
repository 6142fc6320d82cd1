#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rogmc/dataset.hpp"
#include "rogmc/graph.hpp"
#include "rogmc/model.hpp"
#include "rogmc/training.hpp"

namespace rogmc {

double rmse(std::span<const double> predictions, std::span<const Interaction> pairs);
double rmse(const ForwardCache& cache, const ModelParams& params, std::size_t num_users,
            std::span<const Interaction> pairs);
double rmse(const ModelParams& params, const DecomposedGraphs& graphs, const PropagationConfig& config,
            std::span<const Interaction> pairs);

// Pairwise L2 distances between the user-averaged level representations.
struct DistanceReport {
    std::vector<int> thresholds;
    Matrix distances;  // |T| x |T|

    double at_rating(int a, int b) const;
};

DistanceReport representation_distance_matrix(const ModelParams& params, const DecomposedGraphs& graphs,
                                              const PropagationConfig& config);
DistanceReport representation_distance_matrix(const ForwardCache& cache, const DecomposedGraphs& graphs);

struct VariantSpec {
    std::string name;
    DecompositionMode mode = DecompositionMode::cumulative;
    bool use_ir = true;
    bool use_bpr = true;
    std::vector<int> thresholds;  // overrides the config's thresholds when non-empty
};

// full, no_ir, no_cp, no_cp_no_ir, exact, reverse_cumulative, no_bpr
std::vector<VariantSpec> ablation_variants(std::span<const int> rating_set);
VariantSpec variant_by_name(const std::string& name, std::span<const int> rating_set);

// The config with the variant's switches applied.
TrainConfig configure_variant(const VariantSpec& spec, const TrainConfig& base);

struct SeedRun {
    std::uint64_t seed = 0;
    double val_rmse = 0.0;
    double test_rmse = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

struct VariantResult {
    VariantSpec spec;
    std::vector<SeedRun> runs;  // in seed order
    double mean_val_rmse = 0.0;
    double mean_test_rmse = 0.0;
    double std_test_rmse = 0.0;  // population standard deviation
    std::optional<std::string> error;
};

// Trains once per seed (seeds may run on up to `threads` workers) and reports
// test RMSE at the best-validation checkpoint. Throws on training failure.
VariantResult run_variant(const SplitDataset& split, const VariantSpec& spec, const TrainConfig& config,
                          std::span<const std::uint64_t> seeds, std::size_t threads = 1);

struct SweepRow {
    double fraction = 1.0;
    VariantResult result;
};

std::vector<SweepRow> rating_frac_sweep(const SplitDataset& split, std::span<const double> fractions,
                                        std::span<const VariantSpec> variants, const TrainConfig& config,
                                        std::span<const std::uint64_t> seeds, std::uint64_t mask_seed,
                                        std::size_t threads = 1);

// variant,fraction,seed,val_rmse,test_rmse,test_rmse_std; one row per seed
// run, then one "mean" row per variant carrying the standard deviation.
void write_variant_csv(std::ostream& out, std::span<const SweepRow> rows);
// rating,<t1>,<t2>,...
void write_distance_csv(std::ostream& out, const DistanceReport& report);

inline constexpr std::uint64_t kDefaultSeeds[] = {13, 17, 19};

}  // namespace rogmc
