#include "rogmc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "rogmc/error.hpp"

namespace rogmc {
namespace {

template <typename T>
bool parse_integer(std::string_view text, T& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\r')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    const auto result = std::from_chars(text.data(), end, out);
    return result.ec == std::errc() && result.ptr == end;
}

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delimiter) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + delimiter.size();
    }
    return fields;
}

std::uint64_t pair_key(std::uint64_t user, std::uint64_t item) { return (user << 32) | item; }

}  // namespace

int Dataset::rating_index(int rating) const noexcept {
    const auto it = std::lower_bound(rating_set.begin(), rating_set.end(), rating);
    if (it == rating_set.end() || *it != rating) return -1;
    return static_cast<int>(it - rating_set.begin());
}

std::size_t Dataset::count_unknown() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(interactions.begin(), interactions.end(), [](const Interaction& x) { return !x.known(); }));
}

void Dataset::validate() const {
    if (rating_set.empty()) throw DataError("dataset has an empty rating set");
    for (std::size_t k = 0; k < rating_set.size(); ++k) {
        if (rating_set[k] <= kUnknownLabel) throw DataError("rating values must be >= 1");
        if (k > 0 && rating_set[k] <= rating_set[k - 1]) throw DataError("rating set must be strictly increasing");
    }
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(interactions.size());
    for (const Interaction& x : interactions) {
        if (x.user >= num_users) throw DataError("user index out of range: " + std::to_string(x.user));
        if (x.item >= num_items) throw DataError("item index out of range: " + std::to_string(x.item));
        if (x.known() && rating_index(x.label) < 0) {
            throw DataError("label " + std::to_string(x.label) + " is not in the rating set");
        }
        if (!seen.insert(pair_key(x.user, x.item)).second) {
            throw DataError("duplicate pair (" + std::to_string(x.user) + ", " + std::to_string(x.item) + ")");
        }
    }
}

RatingFormat parse_rating_format(const std::string& name) {
    if (name == "tsv") return RatingFormat::tsv;
    if (name == "double_colon" || name == "::") return RatingFormat::double_colon;
    throw std::invalid_argument("unknown rating format '" + name + "' (expected tsv or double_colon)");
}

std::string to_string(RatingFormat format) {
    return format == RatingFormat::tsv ? "tsv" : "double_colon";
}

std::vector<RawInteraction> parse_ratings(const std::string& text, RatingFormat format) {
    const std::string_view delimiter = format == RatingFormat::tsv ? "\t" : "::";
    std::vector<RawInteraction> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        const auto fields = split_fields(line, delimiter);
        RawInteraction row;
        const bool ok = (fields.size() == 3 || fields.size() == 4) && parse_integer(fields[0], row.user_token) &&
                        parse_integer(fields[1], row.item_token) && parse_integer(fields[2], row.rating) &&
                        (fields.size() == 3 || parse_integer(fields[3], row.timestamp));
        if (!ok) {
            throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(line) + "'",
                             line_no);
        }
        if (row.rating <= kUnknownLabel) {
            throw ParseError("line " + std::to_string(line_no) + ": rating must be >= 1", line_no);
        }
        out.push_back(row);
    }
    if (out.empty()) throw ParseError("no interactions found", 0);
    return out;
}

std::vector<RawInteraction> load_ratings(const std::filesystem::path& path, RatingFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open ratings file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_ratings(buffer.str(), format);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

std::vector<RawInteraction> apply_k_core(const std::vector<RawInteraction>& interactions, std::size_t k) {
    if (k == 0) throw std::invalid_argument("k-core threshold must be >= 1");
    std::vector<RawInteraction> current = interactions;
    while (true) {
        std::unordered_map<std::int64_t, std::size_t> user_degree;
        std::unordered_map<std::int64_t, std::size_t> item_degree;
        for (const auto& x : current) {
            ++user_degree[x.user_token];
            ++item_degree[x.item_token];
        }
        std::vector<RawInteraction> kept;
        kept.reserve(current.size());
        for (const auto& x : current) {
            if (user_degree[x.user_token] >= k && item_degree[x.item_token] >= k) kept.push_back(x);
        }
        if (kept.size() == current.size()) break;
        current = std::move(kept);
    }
    if (current.empty()) {
        throw DataError("k-core filtering with k=" + std::to_string(k) + " removed every interaction");
    }
    return current;
}

Dataset reindex(const std::vector<RawInteraction>& interactions) {
    if (interactions.empty()) throw DataError("cannot reindex an empty interaction list");
    Dataset ds;
    std::unordered_map<std::int64_t, std::uint32_t> user_index;
    std::unordered_map<std::int64_t, std::uint32_t> item_index;
    std::set<int> ratings;
    std::unordered_set<std::uint64_t> seen;
    ds.interactions.reserve(interactions.size());
    for (const auto& x : interactions) {
        auto [uit, new_user] = user_index.try_emplace(x.user_token, static_cast<std::uint32_t>(ds.user_tokens.size()));
        if (new_user) ds.user_tokens.push_back(x.user_token);
        auto [iit, new_item] = item_index.try_emplace(x.item_token, static_cast<std::uint32_t>(ds.item_tokens.size()));
        if (new_item) ds.item_tokens.push_back(x.item_token);
        if (!seen.insert(pair_key(uit->second, iit->second)).second) {
            throw DataError("duplicate (user, item) pair (" + std::to_string(x.user_token) + ", " +
                            std::to_string(x.item_token) + ")");
        }
        ratings.insert(x.rating);
        ds.interactions.push_back({uit->second, iit->second, x.rating});
    }
    ds.num_users = ds.user_tokens.size();
    ds.num_items = ds.item_tokens.size();
    ds.rating_set.assign(ratings.begin(), ratings.end());
    return ds;
}

SplitDataset split_per_user(const Dataset& dataset, const SplitRatios& ratios, std::uint64_t seed) {
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
        throw std::invalid_argument("split ratios must be non-negative and sum to 1");
    }
    std::vector<std::vector<Interaction>> by_user(dataset.num_users);
    for (const auto& x : dataset.interactions) by_user[x.user].push_back(x);

    SplitDataset out;
    out.train = dataset;
    out.train.interactions.clear();
    Rng rng(seed);
    for (std::size_t u = 0; u < by_user.size(); ++u) {
        auto& rows = by_user[u];
        const std::size_t n = rows.size();
        if (n < 3) {
            throw DataError("user " + std::to_string(u) + " has " + std::to_string(n) +
                            " interactions; at least 3 are needed for a train/val/test split");
        }
        std::shuffle(rows.begin(), rows.end(), rng);
        const auto portion = [n](double ratio) {
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n * ratio + 1e-9)));
        };
        const std::size_t n_val = portion(ratios.val);
        const std::size_t n_test = portion(ratios.test);
        if (n_val + n_test >= n) {
            throw DataError("user " + std::to_string(u) + " has no training interactions left after the split");
        }
        out.val.insert(out.val.end(), rows.begin(), rows.begin() + n_val);
        out.test.insert(out.test.end(), rows.begin() + n_val, rows.begin() + n_val + n_test);
        out.train.interactions.insert(out.train.interactions.end(), rows.begin() + n_val + n_test, rows.end());
    }
    return out;
}

Dataset apply_rating_frac(const Dataset& train, const MaskingSpec& spec) {
    if (!(spec.keep_fraction > 0.0 && spec.keep_fraction <= 1.0)) {
        throw std::invalid_argument("keep_fraction must lie in (0, 1]");
    }
    if (train.count_unknown() != 0) throw DataError("rating-frac masking expects a fully labeled training set");

    Dataset out = train;
    const std::size_t n = train.interactions.size();
    const auto keep = static_cast<std::size_t>(std::llround(spec.keep_fraction * static_cast<double>(n)));
    if (keep == n) return out;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = keep; k < n; ++k) out.interactions[order[k]].label = kUnknownLabel;
    return out;
}

RawStats summarize(const std::vector<RawInteraction>& interactions) {
    std::unordered_set<std::int64_t> users;
    std::unordered_set<std::int64_t> items;
    std::set<int> ratings;
    for (const auto& x : interactions) {
        users.insert(x.user_token);
        items.insert(x.item_token);
        ratings.insert(x.rating);
    }
    return {users.size(), items.size(), interactions.size(), {ratings.begin(), ratings.end()}};
}

void write_partition(const std::filesystem::path& path, const std::vector<Interaction>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& x : rows) out << x.user << '\t' << x.item << '\t' << x.label << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

std::vector<Interaction> read_partition(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<Interaction> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line, "\t");
        Interaction x;
        if (fields.size() != 3 || !parse_integer(fields[0], x.user) || !parse_integer(fields[1], x.item) ||
            !parse_integer(fields[2], x.label) || x.label < 0) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": malformed partition row",
                             line_no);
        }
        rows.push_back(x);
    }
    return rows;
}

}  // namespace rogmc
