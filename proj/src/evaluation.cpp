#include "rogmc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "rogmc/error.hpp"
#include "rogmc/kernels.hpp"
#include "rogmc/parallel.hpp"

namespace rogmc {

double rmse(std::span<const double> predictions, std::span<const Interaction> pairs) {
    if (pairs.empty()) throw std::invalid_argument("RMSE needs at least one pair");
    if (predictions.size() != pairs.size()) throw std::invalid_argument("prediction count mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (!pairs[k].known()) throw DataError("RMSE pairs must carry known ratings");
        const double err = predictions[k] - pairs[k].label;
        sum += err * err;
    }
    return std::sqrt(sum / static_cast<double>(pairs.size()));
}

double rmse(const ForwardCache& cache, const ModelParams& params, std::size_t num_users,
            std::span<const Interaction> pairs) {
    if (pairs.empty()) throw std::invalid_argument("RMSE needs at least one pair");
    return rmse(predict_pairs(cache, params, num_users, pairs), pairs);
}

double rmse(const ModelParams& params, const DecomposedGraphs& graphs, const PropagationConfig& config,
            std::span<const Interaction> pairs) {
    if (pairs.empty()) throw std::invalid_argument("RMSE needs at least one pair");
    return rmse(forward(graphs, params, config), params, graphs.num_users(), pairs);
}

double DistanceReport::at_rating(int a, int b) const {
    const auto index = [this](int t) {
        const auto it = std::find(thresholds.begin(), thresholds.end(), t);
        if (it == thresholds.end()) throw std::out_of_range("rating " + std::to_string(t) + " has no level");
        return static_cast<std::size_t>(it - thresholds.begin());
    };
    return distances(index(a), index(b));
}

DistanceReport representation_distance_matrix(const ForwardCache& cache, const DecomposedGraphs& graphs) {
    const std::size_t num_users = graphs.num_users();
    const std::size_t levels = cache.levels.size();
    if (num_users == 0 || levels == 0) throw std::invalid_argument("distance analysis needs users and levels");
    const std::size_t d = cache.levels.front().h.cols();

    std::vector<std::vector<double>> means(levels, std::vector<double>(d, 0.0));
    for (std::size_t t = 0; t < levels; ++t) {
        for (std::size_t u = 0; u < num_users; ++u) kernels::axpy(1.0, cache.levels[t].h.row(u), means[t]);
        kernels::scale(1.0 / static_cast<double>(num_users), means[t]);
    }
    DistanceReport report;
    for (const auto& level : graphs.levels) report.thresholds.push_back(level.threshold);
    report.distances = Matrix(levels, levels);
    for (std::size_t a = 0; a < levels; ++a) {
        for (std::size_t b = a + 1; b < levels; ++b) {
            const double dist = std::sqrt(kernels::squared_distance(means[a], means[b]));
            report.distances(a, b) = dist;
            report.distances(b, a) = dist;
        }
    }
    return report;
}

DistanceReport representation_distance_matrix(const ModelParams& params, const DecomposedGraphs& graphs,
                                              const PropagationConfig& config) {
    return representation_distance_matrix(forward(graphs, params, config), graphs);
}

std::vector<VariantSpec> ablation_variants(std::span<const int> rating_set) {
    if (rating_set.empty()) throw std::invalid_argument("empty rating set");
    const std::vector<int> single_level{rating_set.front()};
    return {
        {"full", DecompositionMode::cumulative, true, true, {}},
        {"no_ir", DecompositionMode::cumulative, false, true, {}},
        // Without cumulative propagation the rated edges form one preference
        // graph, which IR still ties to the interest graph.
        {"no_cp", DecompositionMode::cumulative, true, true, single_level},
        {"no_cp_no_ir", DecompositionMode::none, false, false, {}},
        {"exact", DecompositionMode::exact, true, true, {}},
        {"reverse_cumulative", DecompositionMode::reverse_cumulative, true, true, {}},
        {"no_bpr", DecompositionMode::cumulative, true, false, {}},
    };
}

VariantSpec variant_by_name(const std::string& name, std::span<const int> rating_set) {
    for (auto& spec : ablation_variants(rating_set)) {
        if (spec.name == name) return spec;
    }
    throw std::invalid_argument("unknown variant '" + name + "'");
}

TrainConfig configure_variant(const VariantSpec& spec, const TrainConfig& base) {
    TrainConfig config = base;
    config.decomposition_mode = spec.mode;
    if (!spec.use_ir) config.lambda = 0.0;
    if (!spec.use_bpr) config.alpha = 0.0;
    if (!spec.thresholds.empty()) config.thresholds = spec.thresholds;
    return config;
}

VariantResult run_variant(const SplitDataset& split, const VariantSpec& spec, const TrainConfig& config,
                          std::span<const std::uint64_t> seeds, std::size_t threads) {
    if (seeds.empty()) throw std::invalid_argument("run_variant needs at least one seed");
    const TrainConfig variant_config = configure_variant(spec, config);
    const DecomposedGraphs graphs =
        build_decomposition(split.train, variant_config.decomposition_mode, variant_config.thresholds);

    VariantResult result;
    result.spec = spec;
    result.runs.resize(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t k) {
        TrainConfig run_config = variant_config;
        run_config.seed = seeds[k];
        const TrainResult trained = train(split, graphs, run_config);
        SeedRun& run = result.runs[k];
        run.seed = seeds[k];
        run.val_rmse = trained.best_val_rmse;
        run.test_rmse = rmse(trained.params, graphs, run_config.propagation(), split.test);
        run.best_epoch = trained.best_epoch;
        run.epochs_run = trained.history.size();
    });

    double val_sum = 0.0;
    double test_sum = 0.0;
    for (const auto& run : result.runs) {
        val_sum += run.val_rmse;
        test_sum += run.test_rmse;
    }
    const auto n = static_cast<double>(result.runs.size());
    result.mean_val_rmse = val_sum / n;
    result.mean_test_rmse = test_sum / n;
    double sq = 0.0;
    for (const auto& run : result.runs) sq += (run.test_rmse - result.mean_test_rmse) * (run.test_rmse - result.mean_test_rmse);
    result.std_test_rmse = std::sqrt(sq / n);
    return result;
}

std::vector<SweepRow> rating_frac_sweep(const SplitDataset& split, std::span<const double> fractions,
                                        std::span<const VariantSpec> variants, const TrainConfig& config,
                                        std::span<const std::uint64_t> seeds, std::uint64_t mask_seed,
                                        std::size_t threads) {
    std::vector<SweepRow> rows;
    for (double fraction : fractions) {
        if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fractions must lie in (0, 1]");
        SplitDataset masked = split;
        masked.train = apply_rating_frac(split.train, {fraction, mask_seed});
        for (const auto& spec : variants) rows.push_back({fraction, run_variant(masked, spec, config, seeds, threads)});
    }
    return rows;
}

void write_variant_csv(std::ostream& out, std::span<const SweepRow> rows) {
    const auto old_precision = out.precision(10);
    out << "variant,fraction,seed,val_rmse,test_rmse,test_rmse_std\n";
    for (const auto& row : rows) {
        const auto& r = row.result;
        if (r.error) {
            out << r.spec.name << ',' << row.fraction << ",error,,,\n";
            continue;
        }
        for (const auto& run : r.runs) {
            out << r.spec.name << ',' << row.fraction << ',' << run.seed << ',' << run.val_rmse << ','
                << run.test_rmse << ",\n";
        }
    }
    for (const auto& row : rows) {
        const auto& r = row.result;
        if (r.error) continue;
        out << r.spec.name << ',' << row.fraction << ",mean," << r.mean_val_rmse << ',' << r.mean_test_rmse << ','
            << r.std_test_rmse << '\n';
    }
    out.precision(old_precision);
}

void write_distance_csv(std::ostream& out, const DistanceReport& report) {
    const auto old_precision = out.precision(17);
    out << "rating";
    for (int t : report.thresholds) out << ',' << t;
    out << '\n';
    for (std::size_t a = 0; a < report.thresholds.size(); ++a) {
        out << report.thresholds[a];
        for (std::size_t b = 0; b < report.thresholds.size(); ++b) out << ',' << report.distances(a, b);
        out << '\n';
    }
    out.precision(old_precision);
}

}  // namespace rogmc
