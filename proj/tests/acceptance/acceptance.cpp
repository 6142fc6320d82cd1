// Acceptance run: one PASS/FAIL line per criterion. The ML-100K criteria need
// u.data; its location comes from ROGMC_ML100K (env) or the build default.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rogmc/evaluation.hpp"
#include "rogmc/graph.hpp"
#include "rogmc/model.hpp"
#include "rogmc/training.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace rogmc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudgetSeconds = 30.0;
constexpr int kGradInstances = 24;
constexpr int kGraphDatasets = 120;
constexpr double kGraphBudgetSeconds = 10.0;
constexpr int kDecoderDraws = 10000;
constexpr double kProbSumTolerance = 1e-12;
constexpr double kLogitRelTolerance = 1e-10;
constexpr double kRunBudgetSeconds = 600.0;
constexpr double kToyRmse = 0.1;
constexpr std::size_t kToyEpochs = 500;
constexpr double kMaskFraction = 0.25;
constexpr std::uint64_t kMaskSeed = 13;
constexpr std::uint64_t kSplitSeed = 13;
const std::vector<std::uint64_t> kSeeds = {13, 17, 19};

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << " " << title << ": " << detail << std::endl;
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int precision = 6) {
    std::ostringstream out;
    out.precision(precision);
    out << x;
    return out.str();
}

// ---------------------------------------------------------------------------

void gradient_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(20240501);
    const DecompositionMode modes[] = {DecompositionMode::cumulative, DecompositionMode::exact,
                                       DecompositionMode::reverse_cumulative};
    double worst = 0.0;
    for (int k = 0; k < kGradInstances; ++k) {
        auto inst = testing::random_instance(rng, modes[k % 3]);
        worst = std::max(worst, testing::max_fd_error(inst));
    }
    const double secs = seconds_since(start);
    report(1, "gradient oracle", worst < kGradTolerance && secs < kGradBudgetSeconds,
           std::to_string(kGradInstances) + " instances, max rel err " + fmt(worst, 3) + " (< 1e-4), " + fmt(secs, 3) +
               " s (< 30 s)");
}

void decomposition_invariants() {
    const auto start = Clock::now();
    std::mt19937_64 rng(99);
    std::size_t violations = 0;
    using EdgeSet = std::set<std::pair<std::uint32_t, std::uint32_t>>;
    auto edges = [](const SparseBipartiteGraph& g) {
        const auto list = g.user_item_edges();
        return EdgeSet(list.begin(), list.end());
    };
    auto symmetric = [](const SparseBipartiteGraph& g) {
        for (std::size_t a = 0; a < g.num_nodes(); ++a)
            for (std::size_t k = g.row_offsets[a]; k < g.row_offsets[a + 1]; ++k) {
                const std::size_t b = g.neighbors[k];
                if (!g.has_edge(b, a) || g.norm(b, a) != g.edge_norm[k]) return false;
                if ((a < g.num_users) == (b < g.num_users)) return false;
            }
        return g.neighbors.size() == 2 * g.num_edges();
    };
    for (int k = 0; k < kGraphDatasets; ++k) {
        auto train = testing::random_dataset(rng, 1 + rng() % 10, 1 + rng() % 10, 5, 0.5, 0.3);
        if (train.interactions.empty()) train.interactions.push_back({0, 0, kUnknownLabel});
        const auto interest = build_interest_graph(train);
        const auto cum = build_cumulative(train, {});
        const auto exact = build_exact(train, {});
        const auto rev = build_reverse_cumulative(train, {});
        violations += symmetric(interest) ? 0 : 1;
        violations += edges(interest).size() == train.interactions.size() ? 0 : 1;
        const std::size_t t = cum.levels.size();
        for (std::size_t i = 0; i < t; ++i) {
            for (const auto* g : {&cum.levels[i].graph, &exact.levels[i].graph, &rev.levels[i].graph}) {
                violations += symmetric(*g) ? 0 : 1;
                for (const auto& x : train.interactions)
                    if (!x.known() && g->has_edge(x.user, train.num_users + x.item)) ++violations;
            }
            if (i + 1 < t) {
                const auto lo = edges(cum.levels[i].graph), hi = edges(cum.levels[i + 1].graph);
                violations += std::includes(lo.begin(), lo.end(), hi.begin(), hi.end()) ? 0 : 1;
            }
            EdgeSet unioned;
            for (std::size_t s = i; s < t; ++s) {
                const auto part = edges(exact.levels[s].graph);
                unioned.insert(part.begin(), part.end());
            }
            violations += unioned == edges(cum.levels[i].graph) ? 0 : 1;
        }
    }
    const double secs = seconds_since(start);
    report(2, "decomposition invariants", violations == 0 && secs < kGraphBudgetSeconds,
           std::to_string(kGraphDatasets) + " datasets, " + std::to_string(violations) + " violations, " +
               fmt(secs, 3) + " s (< 10 s)");
}

void decoder_properties() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst_sum = 0.0, worst_rel = 0.0;
    std::size_t out_of_range = 0;
    for (int k = 0; k < kDecoderDraws; ++k) {
        const std::size_t d = 1 + rng() % 8;
        const std::size_t num_r = 2 + rng() % 4;
        const double scale = std::exp(std::uniform_real_distribution<double>(-2.0, 1.5)(rng));
        std::vector<double> hu(d), hv(d);
        for (double& x : hu) x = scale * g(rng);
        for (double& x : hv) x = scale * g(rng);
        std::vector<Matrix> q(num_r, Matrix(d, d));
        for (auto& m : q)
            for (double& x : m.flat()) x = g(rng);
        const auto z = decode_logits(hu, hv, q);
        for (std::size_t r = 0; r < num_r; ++r) {
            double ref = 0.0, mag = 0.0;
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) {
                    ref += hu[a] * q[r](a, b) * hv[b];
                    mag += std::abs(hu[a] * q[r](a, b) * hv[b]);
                }
            // Relative to the magnitude of the summands: cancellation makes |ref| itself meaningless near zero.
            if (mag > 0.0) worst_rel = std::max(worst_rel, std::abs(z[r] - ref) / mag);
        }
        const auto p = predict_distribution(z);
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
        std::vector<int> ratings(num_r);
        std::iota(ratings.begin(), ratings.end(), 1);
        const double m = predict_rating(p, ratings);
        if (!(m >= 1.0 && m <= static_cast<double>(num_r))) ++out_of_range;
    }
    report(3, "decoder properties",
           worst_sum <= kProbSumTolerance && worst_rel <= kLogitRelTolerance && out_of_range == 0,
           std::to_string(kDecoderDraws) + " draws, max |sum p - 1| " + fmt(worst_sum, 3) + ", max logit rel err " +
               fmt(worst_rel, 3) + ", out of range " + std::to_string(out_of_range));
}

void reduction_equivalence() {
    const auto ds = reindex(testing::latent_raw(5, 60, 80, 15));
    const auto split = split_per_user(ds, {}, kSplitSeed);
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 40;
    cfg.learning_rate = 0.01;
    const auto& r = split.train.rating_set;
    const VariantSpec reduced{"reduced", DecompositionMode::cumulative, false, false, {r.front()}};
    const auto equal = variant_by_name("no_cp_no_ir", r);
    const std::uint64_t seeds[] = {13, 17};
    const auto a = run_variant(split, reduced, cfg, seeds);
    const auto b = run_variant(split, equal, cfg, seeds);
    bool identical = true;
    std::string detail;
    for (std::size_t k = 0; k < 2; ++k) {
        identical = identical && a.runs[k].test_rmse == b.runs[k].test_rmse;
        detail += "seed " + std::to_string(seeds[k]) + ": " + fmt(a.runs[k].test_rmse, 17) + " vs " +
                  fmt(b.runs[k].test_rmse, 17) + "; ";
    }
    report(4, "reduction equivalence", identical, detail + "bit-identical required");
}

// ---------------------------------------------------------------------------
// ML-100K

struct Run {
    double test_rmse = 0.0;
    double val_rmse = 0.0;
    std::size_t epochs = 0;
    double seconds = 0.0;
    ModelParams params;
    DecomposedGraphs graphs;
};

Run train_variant(const SplitDataset& split, const std::string& name, std::uint64_t seed) {
    const auto start = Clock::now();
    TrainConfig cfg = configure_variant(variant_by_name(name, split.train.rating_set), TrainConfig{});
    cfg.seed = seed;
    Run run;
    run.graphs = build_decomposition(split.train, cfg.decomposition_mode, cfg.thresholds);
    auto trained = train(split, run.graphs, cfg);
    run.val_rmse = trained.best_val_rmse;
    run.test_rmse = rmse(trained.params, run.graphs, cfg.propagation(), split.test);
    run.epochs = trained.history.size();
    run.params = std::move(trained.params);
    run.seconds = seconds_since(start);
    std::cout << "  " << name << " seed " << seed << ": test " << fmt(run.test_rmse, 8) << " val "
              << fmt(run.val_rmse, 8) << " epochs " << run.epochs << " (" << fmt(run.seconds, 3) << " s)"
              << std::endl;
    return run;
}

double mean_test(const std::vector<Run>& runs) {
    double s = 0.0;
    for (const auto& r : runs) s += r.test_rmse;
    return s / static_cast<double>(runs.size());
}

double slowest(const std::vector<Run>& runs) {
    double s = 0.0;
    for (const auto& r : runs) s = std::max(s, r.seconds);
    return s;
}

void data_pipeline(const fs::path& path, const SplitDataset& split, const std::vector<RawInteraction>& raw) {
    const auto stats = summarize(raw);
    const bool counts = stats.num_users == 943 && stats.num_items == 1682 && stats.num_ratings == 100000 &&
                        stats.rating_set == std::vector<int>{1, 2, 3, 4, 5};
    const auto masked = apply_rating_frac(split.train, {kMaskFraction, kMaskSeed});
    const std::size_t n = masked.interactions.size();
    const std::size_t labeled = n - masked.count_unknown();
    const auto target = static_cast<std::size_t>(std::llround(kMaskFraction * static_cast<double>(n)));
    report(9, "data pipeline", counts && labeled == target,
           path.filename().string() + ": " + std::to_string(stats.num_users) + " users, " +
               std::to_string(stats.num_items) + " items, " + std::to_string(stats.num_ratings) +
               " ratings, rating set size " + std::to_string(stats.rating_set.size()) + "; 25% mask labels " +
               std::to_string(labeled) + " of " + std::to_string(n) + " (round(0.25 n) = " + std::to_string(target) +
               ")");
}

void ml100k_criteria(const fs::path& path) {
    std::vector<RawInteraction> raw;
    try {
        raw = load_ratings(path, RatingFormat::tsv);
    } catch (const std::exception& e) {
        const std::string why = std::string("ML-100K unavailable (") + e.what() + ")";
        for (int id : {5, 6, 7, 9}) report(id, "needs ML-100K", false, why);
        return;
    }
    const auto dataset = reindex(apply_k_core(raw, 10));
    const auto split = split_per_user(dataset, {}, kSplitSeed);
    data_pipeline(path, split, raw);

    SplitDataset quarter = split;
    quarter.train = apply_rating_frac(split.train, {kMaskFraction, kMaskSeed});

    std::map<std::string, std::vector<Run>> full_data;
    std::map<std::string, std::vector<Run>> quarter_data;
    for (const std::string name : {"full", "no_cp_no_ir", "exact", "reverse_cumulative", "no_bpr"})
        for (std::uint64_t seed : kSeeds) full_data[name].push_back(train_variant(split, name, seed));
    for (const std::string name : {"full", "no_cp_no_ir"})
        for (std::uint64_t seed : kSeeds) quarter_data[name].push_back(train_variant(quarter, name, seed));

    double worst_time = 0.0;
    for (const auto& [name, runs] : full_data) worst_time = std::max(worst_time, slowest(runs));
    for (const auto& [name, runs] : quarter_data) worst_time = std::max(worst_time, slowest(runs));

    const double full100 = mean_test(full_data["full"]);
    const double equal100 = mean_test(full_data["no_cp_no_ir"]);
    const double full25 = mean_test(quarter_data["full"]);
    const double equal25 = mean_test(quarter_data["no_cp_no_ir"]);
    const double gap100 = equal100 - full100;
    const double gap25 = equal25 - full25;
    report(5, "ML-100K ordering", gap100 > 0.0 && gap25 >= gap100 && worst_time < kRunBudgetSeconds,
           "100%: full " + fmt(full100, 8) + " vs equal-treatment " + fmt(equal100, 8) + " (gap " + fmt(gap100, 5) +
               "); 25%: full " + fmt(full25, 8) + " vs " + fmt(equal25, 8) + " (gap " + fmt(gap25, 5) +
               ", must be >= 100% gap); slowest run " + fmt(worst_time, 4) + " s");

    const double exact = mean_test(full_data["exact"]);
    const double reverse = mean_test(full_data["reverse_cumulative"]);
    const double no_bpr = mean_test(full_data["no_bpr"]);
    report(6, "ablation direction", full100 < exact && full100 < reverse && full100 <= no_bpr,
           "full " + fmt(full100, 8) + ", exact " + fmt(exact, 8) + ", reverse " + fmt(reverse, 8) + ", no-BPR " +
               fmt(no_bpr, 8));

    bool ordered = true;
    std::string detail;
    for (std::size_t k = 0; k < kSeeds.size(); ++k) {
        const auto& run = full_data["full"][k];
        const auto distances = representation_distance_matrix(run.params, run.graphs, PropagationConfig{});
        const double d54 = distances.at_rating(5, 4);
        const double d51 = distances.at_rating(5, 1);
        if (k == 0) ordered = d54 < d51;
        detail += "seed " + std::to_string(kSeeds[k]) + ": d(5,4) " + fmt(d54, 4) + ", d(5,1) " + fmt(d51, 4) +
                  (k == 0 ? " (judged)" : "") + "; ";
    }
    report(7, "ordinality analysis", ordered, detail);
}

// ---------------------------------------------------------------------------

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void determinism(const fs::path& data) {
    const fs::path dir = fs::path(ROGMC_TEST_TMPDIR) / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<fs::path> runs;
    for (int k = 0; k < 2; ++k) {
        const fs::path log = dir / ("train" + std::to_string(k) + ".log");
        const std::string cmd = std::string(ROGMC_CLI_PATH) + " train --dataset " + data.string() + " --out " +
                                (dir / "runs").string() + " --seed 17 --epochs 5 --deterministic > " + log.string() +
                                " 2>&1";
        const int status = std::system(cmd.c_str());
        std::istringstream lines(read_bytes(log));
        fs::path run_dir;
        for (std::string line; std::getline(lines, line);)
            if (line.rfind("run_dir: ", 0) == 0) run_dir = line.substr(9);
        if (status != 0 || run_dir.empty()) {
            report(8, "determinism", false, "train command failed, see " + log.string());
            return;
        }
        runs.push_back(run_dir);
    }
    const bool ckpt = read_bytes(runs[0] / "checkpoint.bin") == read_bytes(runs[1] / "checkpoint.bin");
    const bool hist = read_bytes(runs[0] / "history.csv") == read_bytes(runs[1] / "history.csv");
    const bool distinct = runs[0] != runs[1];
    report(8, "determinism", ckpt && hist && distinct,
           std::string("checkpoint ") + (ckpt ? "identical" : "differs") + ", history " +
               (hist ? "identical" : "differs") + " across two --deterministic runs (" +
               std::to_string(fs::file_size(runs[0] / "checkpoint.bin")) + " bytes)");
}

void toy_memorization() {
    // Two users, three items, every pair rated.
    const auto train = testing::make_dataset(2, 3, {1, 2, 3, 4, 5},
                                             {{0, 0, 5}, {0, 1, 3}, {0, 2, 1}, {1, 0, 2}, {1, 1, 4}, {1, 2, 5}});
    SplitDataset split{train, train.interactions, train.interactions};
    TrainConfig cfg;
    cfg.epochs = kToyEpochs;
    cfg.patience = kToyEpochs;
    const auto graphs = build_cumulative(train, {});
    const auto result = rogmc::train(split, graphs, cfg);
    const double train_rmse = rmse(result.params, graphs, cfg.propagation(), train.interactions);
    report(10, "toy memorization", train_rmse < kToyRmse && result.history.size() <= kToyEpochs,
           "train RMSE " + fmt(train_rmse, 6) + " after " + std::to_string(result.history.size()) +
               " epochs (best epoch " + std::to_string(result.best_epoch) + ")");
}

}  // namespace

int main() {
    fs::path data = ROGMC_ML100K_DEFAULT;
    if (const char* env = std::getenv("ROGMC_ML100K"); env != nullptr && *env != '\0') data = env;
    std::cout << "kernel backend: " << kernels::backend_name(kernels::active().backend) << std::endl;

    gradient_oracle();
    decomposition_invariants();
    decoder_properties();
    reduction_equivalence();
    toy_memorization();
    if (fs::exists(data)) {
        determinism(data);
    } else {
        report(8, "determinism", false, "ML-100K not found at " + data.string());
    }
    ml100k_criteria(data);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
