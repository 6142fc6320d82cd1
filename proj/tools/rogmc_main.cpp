#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rogmc/cli.hpp"
#include "rogmc/config.hpp"
#include "rogmc/kernels.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> frac;
    std::optional<std::string> variant;
    std::optional<std::string> out;
    std::optional<std::string> dataset;
    std::optional<std::string> format;
    std::optional<std::string> prepared;
    std::optional<std::string> checkpoint;
    std::optional<std::string> kernels;
    std::optional<double> alpha;
    std::optional<double> lambda;
    std::optional<std::size_t> epochs;
    bool deterministic = false;
    bool sweep = false;
    bool verbose = false;
};

void add_common_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config_path, "Key/value (TOML subset) or JSON config file");
    cmd.add_option("--seed", o.seed, "Training seed (train/analyze) or sole seed (ablate)");
    cmd.add_option("--frac", o.frac, "Rating-frac: fraction of training ratings kept");
    cmd.add_option("--variant", o.variant, "full, no_ir, no_cp, no_cp_no_ir, exact, reverse_cumulative, no_bpr");
    cmd.add_option("--out", o.out, "Base output directory");
    cmd.add_option("--dataset", o.dataset, "Raw ratings file");
    cmd.add_option("--format", o.format, "Raw format: tsv or double_colon");
    cmd.add_option("--prepared", o.prepared, "Directory written by `prepare`");
    cmd.add_option("--alpha", o.alpha, "Pairwise loss weight");
    cmd.add_option("--lambda", o.lambda, "Interest regularization weight");
    cmd.add_option("--epochs", o.epochs, "Maximum epochs");
    cmd.add_option("--kernels", o.kernels, "Kernel backend: scalar or avx2");
    cmd.add_flag("--deterministic", o.deterministic, "Single worker, fixed reduction order");
    cmd.add_flag("-v,--verbose", o.verbose, "Log every epoch");
}

rogmc::RunConfig resolve(const Overrides& o) {
    rogmc::RunConfig config;
    if (!o.config_path.empty()) config = rogmc::load_config(o.config_path);
    if (o.seed) {
        config.train.seed = *o.seed;
        config.seeds = {*o.seed};
    }
    if (o.frac) config.keep_fraction = *o.frac;
    if (o.variant) config.variant = *o.variant;
    if (o.out) config.out = *o.out;
    if (o.dataset) config.dataset = *o.dataset;
    if (o.format) config.format = rogmc::parse_rating_format(*o.format);
    if (o.prepared) config.prepared_dir = *o.prepared;
    if (o.checkpoint) config.checkpoint = *o.checkpoint;
    if (o.alpha) config.train.alpha = *o.alpha;
    if (o.lambda) config.train.lambda = *o.lambda;
    if (o.epochs) config.train.epochs = *o.epochs;
    if (o.deterministic) config.deterministic = true;
    if (o.sweep) config.sweep = true;
    if (o.verbose) config.verbose = true;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ordinal-rating matrix completion with progressively decomposed graphs"};
    app.require_subcommand(1);
    Overrides o;

    auto* prepare = app.add_subcommand("prepare", "k-core filter, split and mask a raw ratings file");
    auto* train = app.add_subcommand("train", "Train one variant; writes checkpoint, history and manifest");
    auto* ablate = app.add_subcommand("ablate", "Run the ablation variants across seeds");
    auto* analyze = app.add_subcommand("analyze", "Representation distances and optional lambda/alpha sweep");
    for (auto* cmd : {prepare, train, ablate, analyze}) add_common_flags(*cmd, o);
    analyze->add_option("--checkpoint", o.checkpoint, "Checkpoint written by `train`")->required();
    analyze->add_flag("--sweep", o.sweep, "Also run the lambda x alpha grid");

    CLI11_PARSE(app, argc, argv);

    try {
        if (o.kernels) rogmc::kernels::select_backend(rogmc::kernels::parse_backend(*o.kernels));
        const rogmc::RunConfig config = resolve(o);
        rogmc::cli::CommandResult result;
        if (prepare->parsed()) result = rogmc::cli::cmd_prepare(config, std::cout);
        else if (train->parsed()) result = rogmc::cli::cmd_train(config, std::cout);
        else if (ablate->parsed()) result = rogmc::cli::cmd_ablate(config, std::cout);
        else result = rogmc::cli::cmd_analyze(config, std::cout);
        std::cout << "run_dir: " << result.run_dir.string() << std::endl;
        return result.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
}
