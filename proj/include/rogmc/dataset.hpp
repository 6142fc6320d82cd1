#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace rogmc {

// Label stored for an interaction whose rating is unknown. Rating sets are >= 1.
inline constexpr int kUnknownLabel = 0;

using Rng = std::mt19937_64;

struct RawInteraction {
    std::int64_t user_token = 0;
    std::int64_t item_token = 0;
    int rating = 0;
    std::int64_t timestamp = 0;

    friend bool operator==(const RawInteraction&, const RawInteraction&) = default;
};

struct Interaction {
    std::uint32_t user = 0;
    std::uint32_t item = 0;
    int label = kUnknownLabel;

    bool known() const noexcept { return label != kUnknownLabel; }
    friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct Dataset {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::vector<int> rating_set;  // strictly increasing
    std::vector<Interaction> interactions;
    // Raw tokens by contiguous index, kept for export.
    std::vector<std::int64_t> user_tokens;
    std::vector<std::int64_t> item_tokens;

    std::size_t num_nodes() const noexcept { return num_users + num_items; }
    // Position of `rating` in rating_set, or -1.
    int rating_index(int rating) const noexcept;
    std::size_t count_unknown() const noexcept;

    // Throws DataError naming the first violated invariant.
    void validate() const;
};

struct SplitDataset {
    Dataset train;
    std::vector<Interaction> val;
    std::vector<Interaction> test;
};

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

struct MaskingSpec {
    double keep_fraction = 1.0;
    std::uint64_t seed = 0;
};

enum class RatingFormat { tsv, double_colon };

RatingFormat parse_rating_format(const std::string& name);
std::string to_string(RatingFormat format);

std::vector<RawInteraction> load_ratings(const std::filesystem::path& path, RatingFormat format);
std::vector<RawInteraction> parse_ratings(const std::string& text, RatingFormat format);

std::vector<RawInteraction> apply_k_core(const std::vector<RawInteraction>& interactions, std::size_t k);

Dataset reindex(const std::vector<RawInteraction>& interactions);

SplitDataset split_per_user(const Dataset& dataset, const SplitRatios& ratios, std::uint64_t seed);

Dataset apply_rating_frac(const Dataset& train, const MaskingSpec& spec);

struct RawStats {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::size_t num_ratings = 0;
    std::vector<int> rating_set;
};
RawStats summarize(const std::vector<RawInteraction>& interactions);

// Canonical partition files: "user_idx\titem_idx\tlabel" with 0 for unknown.
void write_partition(const std::filesystem::path& path, const std::vector<Interaction>& rows);
std::vector<Interaction> read_partition(const std::filesystem::path& path);

}  // namespace rogmc
