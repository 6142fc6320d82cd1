#include "rogmc/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rogmc/checkpoint.hpp"
#include "rogmc/error.hpp"
#include "rogmc/evaluation.hpp"
#include "rogmc/kernels.hpp"

namespace rogmc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json stats_json(const RawStats& s) {
    return {{"users", s.num_users}, {"items", s.num_items}, {"ratings", s.num_ratings}, {"rating_set", s.rating_set}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json manifest_base(const RunConfig& config, const std::string& command) {
    return {{"command", command},
            {"config", to_json(config)},
            {"config_hash", config_hash(config)},
            {"kernel_backend", std::string(kernels::backend_name(kernels::active().backend))},
            {"deterministic", config.deterministic}};
}

void write_token_map(const fs::path& path, const std::vector<std::int64_t>& tokens) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (std::size_t k = 0; k < tokens.size(); ++k) out << k << '\t' << tokens[k] << '\n';
}

std::vector<std::int64_t> read_token_map(const fs::path& path) {
    std::vector<std::int64_t> tokens;
    std::ifstream in(path, std::ios::binary);
    if (!in) return tokens;
    std::size_t index = 0;
    std::int64_t token = 0;
    while (in >> index >> token) tokens.push_back(token);
    return tokens;
}

std::string format_rmse(double x) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(5) << x;
    return s.str();
}

}  // namespace

PreparedData prepare_data(const RunConfig& config) {
    if (config.dataset.empty()) throw std::invalid_argument("no dataset configured (set 'dataset' or 'prepared_dir')");
    PreparedData out;
    const auto raw = load_ratings(config.dataset, config.format);
    out.raw = summarize(raw);
    const auto core = apply_k_core(raw, config.k_core);
    out.filtered = summarize(core);
    const Dataset dataset = reindex(core);
    out.split = split_per_user(dataset, config.ratios, config.split_seed);
    out.split.train = apply_rating_frac(out.split.train, {config.keep_fraction, config.mask_seed});
    return out;
}

SplitDataset load_prepared(const fs::path& dir) {
    std::ifstream meta_in(dir / "metadata.json");
    if (!meta_in) throw Error("cannot open " + (dir / "metadata.json").string());
    json meta;
    try {
        meta = json::parse(meta_in);
    } catch (const json::exception& e) {
        throw Error("metadata.json is not valid JSON: " + std::string(e.what()));
    }
    SplitDataset split;
    Dataset& train = split.train;
    try {
        train.num_users = meta.at("num_users").get<std::size_t>();
        train.num_items = meta.at("num_items").get<std::size_t>();
        train.rating_set = meta.at("rating_set").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw Error("metadata.json is missing dataset fields: " + std::string(e.what()));
    }
    train.interactions = read_partition(dir / "train.tsv");
    train.user_tokens = read_token_map(dir / "users.tsv");
    train.item_tokens = read_token_map(dir / "items.tsv");
    train.validate();
    split.val = read_partition(dir / "val.tsv");
    split.test = read_partition(dir / "test.tsv");
    for (const auto* part : {&split.val, &split.test}) {
        for (const auto& x : *part) {
            if (x.user >= train.num_users || x.item >= train.num_items || train.rating_index(x.label) < 0) {
                throw DataError("evaluation partition row out of range or unlabeled");
            }
        }
    }
    return split;
}

SplitDataset obtain_split(const RunConfig& config) {
    if (!config.prepared_dir.empty()) return load_prepared(config.prepared_dir);
    return prepare_data(config).split;
}

fs::path make_run_dir(const RunConfig& config, const std::string& command) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream name;
    name << command << '-' << std::put_time(&tm, "%Y%m%dT%H%M%SZ") << '-' << config_hash(config).substr(0, 12);
    fs::path dir = config.out / name.str();
    for (int k = 2; fs::exists(dir); ++k) dir = config.out / (name.str() + "-" + std::to_string(k));
    fs::create_directories(dir);
    return dir;
}

CommandResult cmd_prepare(const RunConfig& config, std::ostream& log) {
    config.validate();
    const PreparedData data = prepare_data(config);
    const Dataset& train = data.split.train;
    const fs::path dir = make_run_dir(config, "prepare");

    write_partition(dir / "train.tsv", train.interactions);
    write_partition(dir / "val.tsv", data.split.val);
    write_partition(dir / "test.tsv", data.split.test);
    write_token_map(dir / "users.tsv", train.user_tokens);
    write_token_map(dir / "items.tsv", train.item_tokens);

    const std::size_t masked = train.count_unknown();
    json meta{{"num_users", train.num_users},
              {"num_items", train.num_items},
              {"rating_set", train.rating_set},
              {"k_core", config.k_core},
              {"split_ratios", {config.ratios.train, config.ratios.val, config.ratios.test}},
              {"split_seed", config.split_seed},
              {"mask_seed", config.mask_seed},
              {"seed", config.split_seed},
              {"keep_fraction", config.keep_fraction},
              {"raw", stats_json(data.raw)},
              {"filtered", stats_json(data.filtered)},
              {"train_size", train.interactions.size()},
              {"val_size", data.split.val.size()},
              {"test_size", data.split.test.size()},
              {"labeled_count", train.interactions.size() - masked},
              {"masked_count", masked},
              {"config_hash", config_hash(config)}};
    write_json(dir / "metadata.json", meta);
    json manifest = manifest_base(config, "prepare");
    manifest["artifacts"] = {"train.tsv", "val.tsv", "test.tsv", "users.tsv", "items.tsv", "metadata.json"};
    write_json(dir / "manifest.json", manifest);

    log << "raw:      " << data.raw.num_users << " users, " << data.raw.num_items << " items, "
        << data.raw.num_ratings << " ratings\n";
    log << "filtered: " << data.filtered.num_users << " users, " << data.filtered.num_items << " items, "
        << data.filtered.num_ratings << " ratings (" << config.k_core << "-core)\n";
    log << "split:    " << train.interactions.size() << " train (" << masked << " masked), " << data.split.val.size()
        << " val, " << data.split.test.size() << " test\n";
    return {0, dir};
}

CommandResult cmd_train(const RunConfig& config, std::ostream& log) {
    config.validate();
    const SplitDataset split = obtain_split(config);
    const VariantSpec spec = variant_by_name(config.variant, split.train.rating_set);
    const TrainConfig train_config = configure_variant(spec, config.train);
    const DecomposedGraphs graphs =
        build_decomposition(split.train, train_config.decomposition_mode, train_config.thresholds);
    const fs::path dir = make_run_dir(config, "train");

    json manifest = manifest_base(config, "train");
    manifest["variant"] = spec.name;
    manifest["decomposition_mode"] = to_string(train_config.decomposition_mode);
    manifest["thresholds"] = graphs.thresholds;
    manifest["seed"] = train_config.seed;
    manifest["alpha"] = train_config.alpha;
    manifest["lambda"] = train_config.lambda;

    TrainResult result;
    try {
        result = train(split, graphs, train_config, [&](const EpochRecord& r) {
            if (config.verbose || r.epoch % 50 == 0) {
                log << "epoch " << r.epoch << " loss " << r.loss.total << " val_rmse " << format_rmse(r.val_rmse)
                    << (r.best ? " *" : "") << '\n';
            }
        });
    } catch (const NumericError& e) {
        manifest["status"] = "diverged";
        manifest["error"] = e.what();
        write_json(dir / "manifest.json", manifest);
        log << "training aborted: " << e.what() << '\n';
        return {1, dir};
    }

    const double test = rmse(result.params, graphs, train_config.propagation(), split.test);
    const CheckpointHeader header{result.params.num_nodes(), split.train.num_users, result.params.dim(),
                                  result.params.rating_set, graphs.thresholds,  graphs.mode,
                                  train_config.seed,        train_config.layers, train_config.aggregation};
    save_checkpoint(dir / "checkpoint.bin", header, result.params);
    {
        std::ofstream history(dir / "history.csv", std::ios::binary);
        write_history_csv(history, result.history);
    }
    manifest["status"] = "ok";
    manifest["best_epoch"] = result.best_epoch;
    manifest["epochs_run"] = result.history.size();
    manifest["val_rmse"] = result.best_val_rmse;
    manifest["test_rmse"] = test;
    manifest["artifacts"] = {"checkpoint.bin", "history.csv"};
    write_json(dir / "manifest.json", manifest);
    log << "best epoch " << result.best_epoch << ": val RMSE " << format_rmse(result.best_val_rmse) << ", test RMSE "
        << format_rmse(test) << '\n';
    return {0, dir};
}

CommandResult cmd_ablate(const RunConfig& config, std::ostream& log) {
    config.validate();
    const SplitDataset split = obtain_split(config);
    std::vector<VariantSpec> variants;
    if (config.variants.empty()) {
        variants = ablation_variants(split.train.rating_set);
    } else {
        for (const auto& name : config.variants) variants.push_back(variant_by_name(name, split.train.rating_set));
    }
    const bool remask = !config.fractions.empty();
    const std::vector<double> fractions = remask ? config.fractions : std::vector<double>{config.keep_fraction};
    const fs::path dir = make_run_dir(config, "ablate");
    const std::size_t threads = config.worker_threads();

    bool all_ok = true;
    std::vector<SweepRow> rows;
    for (double fraction : fractions) {
        SplitDataset masked = split;
        if (remask) {
            if (split.train.count_unknown() != 0) {
                throw DataError("ablation fractions need an unmasked training set (keep_fraction = 1 at prepare)");
            }
            masked.train = apply_rating_frac(split.train, {fraction, config.mask_seed});
        }
        for (const auto& spec : variants) {
            SweepRow row{fraction, {}};
            try {
                row.result = run_variant(masked, spec, config.train, config.seeds, threads);
                log << spec.name << " @ " << fraction << ": test RMSE " << format_rmse(row.result.mean_test_rmse)
                    << " +- " << format_rmse(row.result.std_test_rmse) << '\n';
            } catch (const std::exception& e) {
                row.result.spec = spec;
                row.result.error = e.what();
                all_ok = false;
                log << spec.name << " @ " << fraction << ": failed: " << e.what() << '\n';
            }
            rows.push_back(std::move(row));
        }
    }
    {
        std::ofstream csv(dir / "ablation.csv", std::ios::binary);
        write_variant_csv(csv, rows);
    }
    json manifest = manifest_base(config, "ablate");
    json summary = json::array();
    for (const auto& row : rows) {
        json entry{{"variant", row.result.spec.name}, {"fraction", row.fraction}};
        if (row.result.error) {
            entry["error"] = *row.result.error;
        } else {
            entry["mean_test_rmse"] = row.result.mean_test_rmse;
            entry["std_test_rmse"] = row.result.std_test_rmse;
            entry["mean_val_rmse"] = row.result.mean_val_rmse;
        }
        summary.push_back(entry);
    }
    manifest["results"] = summary;
    manifest["status"] = all_ok ? "ok" : "partial";
    manifest["artifacts"] = {"ablation.csv"};
    write_json(dir / "manifest.json", manifest);
    return {all_ok ? 0 : 1, dir};
}

CommandResult cmd_analyze(const RunConfig& config, std::ostream& log) {
    config.validate();
    if (config.checkpoint.empty()) throw std::invalid_argument("analyze needs --checkpoint");
    const Checkpoint ckpt = load_checkpoint(config.checkpoint);
    const SplitDataset split = obtain_split(config);
    const DecomposedGraphs graphs = build_decomposition(split.train, ckpt.header.mode, ckpt.header.thresholds);
    check_compatible(ckpt.header, graphs, split.train.rating_set);
    const fs::path dir = make_run_dir(config, "analyze");

    const PropagationConfig prop{ckpt.header.layers, ckpt.header.aggregation};
    const DistanceReport report = representation_distance_matrix(ckpt.params, graphs, prop);
    {
        std::ofstream csv(dir / "distances.csv", std::ios::binary);
        write_distance_csv(csv, report);
    }
    json manifest = manifest_base(config, "analyze");
    manifest["checkpoint"] = config.checkpoint.string();
    json artifacts = {"distances.csv"};

    if (config.sweep) {
        const VariantSpec spec = variant_by_name(config.variant, split.train.rating_set);
        struct Cell {
            double lambda;
            double alpha;
            SeedRun run;
        };
        std::vector<Cell> cells;
        for (double lambda : config.sweep_lambdas) {
            for (double alpha : config.sweep_alphas) cells.push_back({lambda, alpha, {}});
        }
        const std::uint64_t seed = config.train.seed;
        for (auto& cell : cells) {
            TrainConfig tc = config.train;
            tc.lambda = cell.lambda;
            tc.alpha = cell.alpha;
            VariantSpec cell_spec = spec;
            cell_spec.use_ir = cell_spec.use_ir && cell.lambda != 0.0;
            cell_spec.use_bpr = cell_spec.use_bpr && cell.alpha != 0.0;
            const auto result = run_variant(split, cell_spec, tc, std::span(&seed, 1), 1);
            cell.run = result.runs.front();
            log << "lambda " << cell.lambda << " alpha " << cell.alpha << ": test RMSE "
                << format_rmse(cell.run.test_rmse) << '\n';
        }
        std::ofstream csv(dir / "sweep.csv", std::ios::binary);
        csv.precision(10);
        csv << "lambda,alpha,seed,val_rmse,test_rmse\n";
        for (const auto& cell : cells) {
            csv << cell.lambda << ',' << cell.alpha << ',' << cell.run.seed << ',' << cell.run.val_rmse << ','
                << cell.run.test_rmse << '\n';
        }
        artifacts.push_back("sweep.csv");
    }
    manifest["artifacts"] = artifacts;
    write_json(dir / "manifest.json", manifest);
    log << "distance matrix written for T = " << json(report.thresholds).dump() << '\n';
    return {0, dir};
}

}  // namespace rogmc::cli
