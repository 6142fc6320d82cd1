#include "rogmc/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rogmc/error.hpp"
#include "rogmc/evaluation.hpp"

namespace rogmc {
namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Drops a trailing '#' comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        if (line[k] == '"') quoted = !quoted;
        if (line[k] == '#' && !quoted) return line.substr(0, k);
    }
    return line;
}

nlohmann::json parse_scalar(const std::string& text, std::size_t line_no) {
    if (text.empty()) throw ParseError("config line " + std::to_string(line_no) + ": missing value", line_no);
    if (text == "true") return true;
    if (text == "false") return false;
    if (text.front() == '"' || text.front() == '[') {
        try {
            return nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception&) {
            throw ParseError("config line " + std::to_string(line_no) + ": cannot parse '" + text + "'", line_no);
        }
    }
    try {
        std::size_t used = 0;
        if (text.find_first_of(".eE") == std::string::npos) {
            const long long v = std::stoll(text, &used);
            if (used == text.size()) return v;
        } else {
            const double v = std::stod(text, &used);
            if (used == text.size()) return v;
        }
    } catch (const std::exception&) {
    }
    // Bare words are accepted as strings (e.g. mode = cumulative).
    return text;
}

template <typename T>
T get(const nlohmann::json& value, const std::string& key) {
    try {
        return value.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("config key '" + key + "' has the wrong type");
    }
}

}  // namespace

void RunConfig::validate() const {
    train.validate();
    if (k_core == 0) throw std::invalid_argument("k_core must be >= 1");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw std::invalid_argument("keep_fraction must lie in (0, 1]");
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("fractions must lie in (0, 1]");
    }
    if (seeds.empty()) throw std::invalid_argument("seeds must not be empty");
    const double total = ratios.train + ratios.val + ratios.test;
    if (ratios.train <= 0 || ratios.val < 0 || ratios.test < 0 || std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("split ratios must be non-negative and sum to 1");
    }
    for (double x : sweep_lambdas) {
        if (!(x >= 0.0)) throw std::invalid_argument("sweep_lambdas must be >= 0");
    }
    for (double x : sweep_alphas) {
        if (!(x >= 0.0)) throw std::invalid_argument("sweep_alphas must be >= 0");
    }
    const std::vector<int> any_ratings{1};
    variant_by_name(variant, any_ratings);
    for (const auto& v : variants) variant_by_name(v, any_ratings);
}

std::size_t RunConfig::worker_threads() const {
    if (deterministic) return 1;
    if (threads > 0) return threads;
    if (const char* env = std::getenv("ROGMC_THREADS"); env != nullptr && *env != '\0') {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed > 0) return static_cast<std::size_t>(parsed);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["alpha"] = c.train.alpha;
    j["lambda"] = c.train.lambda;
    j["learning_rate"] = c.train.learning_rate;
    j["epochs"] = c.train.epochs;
    j["patience"] = c.train.patience;
    j["seed"] = c.train.seed;
    j["layers"] = c.train.layers;
    j["dim"] = c.train.dim;
    j["decomposition_mode"] = to_string(c.train.decomposition_mode);
    j["thresholds"] = c.train.thresholds;
    j["negatives_per_positive"] = c.train.negatives_per_positive;
    j["ir_epsilon"] = c.train.ir_epsilon;
    j["aggregation"] = to_string(c.train.aggregation);
    j["embedding_std"] = c.train.init.embedding_std;
    j["bilinear_noise_std"] = c.train.init.bilinear_noise_std;
    j["dataset"] = c.dataset.string();
    j["format"] = to_string(c.format);
    j["prepared_dir"] = c.prepared_dir.string();
    j["k_core"] = c.k_core;
    j["split_ratios"] = {c.ratios.train, c.ratios.val, c.ratios.test};
    j["split_seed"] = c.split_seed;
    j["keep_fraction"] = c.keep_fraction;
    j["mask_seed"] = c.mask_seed;
    j["out"] = c.out.string();
    j["variant"] = c.variant;
    j["variants"] = c.variants;
    j["fractions"] = c.fractions;
    j["seeds"] = c.seeds;
    j["checkpoint"] = c.checkpoint.string();
    j["sweep"] = c.sweep;
    j["sweep_lambdas"] = c.sweep_lambdas;
    j["sweep_alphas"] = c.sweep_alphas;
    j["deterministic"] = c.deterministic;
    return j;
}

void apply_json(RunConfig& c, const nlohmann::json& values) {
    if (!values.is_object()) throw std::invalid_argument("config must be a key/value object");
    for (const auto& [key, v] : values.items()) {
        if (key == "alpha") c.train.alpha = get<double>(v, key);
        else if (key == "lambda") c.train.lambda = get<double>(v, key);
        else if (key == "learning_rate") c.train.learning_rate = get<double>(v, key);
        else if (key == "epochs") c.train.epochs = get<std::size_t>(v, key);
        else if (key == "patience") c.train.patience = get<std::size_t>(v, key);
        else if (key == "seed") c.train.seed = get<std::uint64_t>(v, key);
        else if (key == "layers") c.train.layers = get<std::size_t>(v, key);
        else if (key == "dim") c.train.dim = get<std::size_t>(v, key);
        else if (key == "decomposition_mode") c.train.decomposition_mode = parse_decomposition_mode(get<std::string>(v, key));
        else if (key == "thresholds") c.train.thresholds = get<std::vector<int>>(v, key);
        else if (key == "negatives_per_positive") c.train.negatives_per_positive = get<std::size_t>(v, key);
        else if (key == "ir_epsilon") c.train.ir_epsilon = get<double>(v, key);
        else if (key == "aggregation") c.train.aggregation = parse_aggregation(get<std::string>(v, key));
        else if (key == "embedding_std") c.train.init.embedding_std = get<double>(v, key);
        else if (key == "bilinear_noise_std") c.train.init.bilinear_noise_std = get<double>(v, key);
        else if (key == "dataset") c.dataset = get<std::string>(v, key);
        else if (key == "format") c.format = parse_rating_format(get<std::string>(v, key));
        else if (key == "prepared_dir") c.prepared_dir = get<std::string>(v, key);
        else if (key == "k_core") c.k_core = get<std::size_t>(v, key);
        else if (key == "split_ratios") {
            const auto r = get<std::vector<double>>(v, key);
            if (r.size() != 3) throw std::invalid_argument("split_ratios needs three values");
            c.ratios = {r[0], r[1], r[2]};
        }
        else if (key == "split_seed") c.split_seed = get<std::uint64_t>(v, key);
        else if (key == "keep_fraction") c.keep_fraction = get<double>(v, key);
        else if (key == "mask_seed") c.mask_seed = get<std::uint64_t>(v, key);
        else if (key == "out") c.out = get<std::string>(v, key);
        else if (key == "variant") c.variant = get<std::string>(v, key);
        else if (key == "variants") c.variants = get<std::vector<std::string>>(v, key);
        else if (key == "fractions") c.fractions = get<std::vector<double>>(v, key);
        else if (key == "seeds") c.seeds = get<std::vector<std::uint64_t>>(v, key);
        else if (key == "checkpoint") c.checkpoint = get<std::string>(v, key);
        else if (key == "sweep") c.sweep = get<bool>(v, key);
        else if (key == "sweep_lambdas") c.sweep_lambdas = get<std::vector<double>>(v, key);
        else if (key == "sweep_alphas") c.sweep_alphas = get<std::vector<double>>(v, key);
        else if (key == "deterministic") c.deterministic = get<bool>(v, key);
        else if (key == "threads") c.threads = get<std::size_t>(v, key);
        else if (key == "verbose") c.verbose = get<bool>(v, key);
        else throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

nlohmann::json parse_config_text(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            return nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
        }
    }
    nlohmann::json out = nlohmann::json::object();
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            throw ParseError("config line " + std::to_string(line_no) + ": tables are not supported", line_no);
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(line_no) + ": expected key = value", line_no);
        }
        std::string key = trim(line.substr(0, eq));
        if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
        out[key] = parse_scalar(trim(line.substr(eq + 1)), line_no);
    }
    return out;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open config " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    RunConfig config;
    apply_json(config, parse_config_text(buffer.str()));
    return config;
}

std::string config_hash(const RunConfig& config) {
    nlohmann::json j = to_json(config);
    j.erase("out");
    const std::string canonical = j.dump();
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char ch : canonical) {
        hash ^= ch;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace rogmc
