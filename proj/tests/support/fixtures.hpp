#pragma once

// Shared test helpers: small synthetic datasets and a dense reference model
// that shares no code with the sparse implementation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rogmc/dataset.hpp"
#include "rogmc/graph.hpp"
#include "rogmc/matrix.hpp"
#include "rogmc/model.hpp"
#include "rogmc/training.hpp"

namespace rogmc::testing {

inline Dataset make_dataset(std::size_t users, std::size_t items, std::vector<int> rating_set,
                            std::vector<Interaction> rows) {
    Dataset ds;
    ds.num_users = users;
    ds.num_items = items;
    ds.rating_set = std::move(rating_set);
    ds.interactions = std::move(rows);
    for (std::size_t u = 0; u < users; ++u) ds.user_tokens.push_back(static_cast<std::int64_t>(u));
    for (std::size_t i = 0; i < items; ++i) ds.item_tokens.push_back(static_cast<std::int64_t>(i));
    return ds;
}

// {(u0,i0,3),(u0,i1,1),(u1,i1,2),(u1,i2,U)} over R = {1,2,3}.
inline Dataset toy_train() {
    return make_dataset(2, 3, {1, 2, 3}, {{0, 0, 3}, {0, 1, 1}, {1, 1, 2}, {1, 2, kUnknownLabel}});
}

// Random bipartite interactions; each pair present with `density`, labels
// uniform over 1..num_ratings, a `unknown_share` of them replaced by U.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t users, std::size_t items, int num_ratings,
                              double density, double unknown_share) {
    std::vector<int> ratings;
    for (int r = 1; r <= num_ratings; ++r) ratings.push_back(r);
    std::bernoulli_distribution present(density);
    std::bernoulli_distribution unknown(unknown_share);
    std::uniform_int_distribution<int> label(1, num_ratings);
    std::vector<Interaction> rows;
    for (std::uint32_t u = 0; u < users; ++u) {
        for (std::uint32_t i = 0; i < items; ++i) {
            if (!present(rng)) continue;
            const int l = label(rng);
            rows.push_back({u, i, unknown(rng) ? kUnknownLabel : l});
        }
    }
    return make_dataset(users, items, ratings, rows);
}

// Latent-factor ratings: every user rates `per_user` distinct items, rating
// = clamp(round(3 + 1.5 * <p_u, q_i>)). Returns raw tokens (users from 1000,
// items from 5000) so the full loading pipeline is exercised.
inline std::vector<RawInteraction> latent_raw(std::uint64_t seed, std::size_t users, std::size_t items,
                                              std::size_t per_user) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> p(users, std::vector<double>(3));
    std::vector<std::vector<double>> q(items, std::vector<double>(3));
    for (auto& v : p)
        for (double& x : v) x = g(rng);
    for (auto& v : q)
        for (double& x : v) x = g(rng) / std::sqrt(3.0);
    std::vector<RawInteraction> out;
    for (std::size_t u = 0; u < users; ++u) {
        std::set<std::size_t> chosen;
        std::uniform_int_distribution<std::size_t> pick(0, items - 1);
        while (chosen.size() < per_user) chosen.insert(pick(rng));
        for (std::size_t i : chosen) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += p[u][k] * q[i][k];
            const int r = static_cast<int>(std::lround(std::clamp(3.0 + 1.5 * s, 1.0, 5.0)));
            out.push_back({static_cast<std::int64_t>(1000 + u), static_cast<std::int64_t>(5000 + i), r,
                           static_cast<std::int64_t>(u * items + i)});
        }
    }
    return out;
}

inline std::string latent_raw_text(const std::vector<RawInteraction>& rows) {
    std::string text;
    for (const auto& x : rows) {
        text += std::to_string(x.user_token) + "\t" + std::to_string(x.item_token) + "\t" + std::to_string(x.rating) +
                "\t" + std::to_string(x.timestamp) + "\n";
    }
    return text;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::path(ROGMC_TEST_TMPDIR) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// Dense reference model. Adjacencies are rebuilt straight from the labels,
// propagation is dense matrix multiplication, and the loss is written as
// plain loops over the formulas.

using Dense = std::vector<std::vector<double>>;

inline Dense dense_adjacency(const Dataset& train, int mode, int threshold) {
    // mode: 0 interest, 1 >= t, 2 == t, 3 <= t
    const std::size_t n = train.num_users + train.num_items;
    Dense a(n, std::vector<double>(n, 0.0));
    for (const auto& x : train.interactions) {
        bool keep = false;
        if (mode == 0) keep = true;
        else if (x.label != kUnknownLabel) {
            keep = (mode == 1 && x.label >= threshold) || (mode == 2 && x.label == threshold) ||
                   (mode == 3 && x.label <= threshold);
        }
        if (!keep) continue;
        const std::size_t i = train.num_users + x.item;
        a[x.user][i] = 1.0;
        a[i][x.user] = 1.0;
    }
    std::vector<double> deg(n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) deg[r] += a[r][c];
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (a[r][c] != 0.0) a[r][c] = 1.0 / std::sqrt(deg[r] * deg[c]);
    return a;
}

inline Dense dense_multiply(const Dense& a, const Dense& x) {
    Dense y(a.size(), std::vector<double>(x.front().size(), 0.0));
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t k = 0; k < a.size(); ++k)
            if (a[r][k] != 0.0)
                for (std::size_t c = 0; c < x[k].size(); ++c) y[r][c] += a[r][k] * x[k][c];
    return y;
}

inline Dense to_dense(const Matrix& m) {
    Dense out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
    return out;
}

inline Dense dense_representation(const Dense& adjacency, const Dense& base, std::size_t layers) {
    Dense acc = base;
    Dense cur = base;
    for (std::size_t l = 0; l < layers; ++l) {
        cur = dense_multiply(adjacency, cur);
        for (std::size_t r = 0; r < acc.size(); ++r)
            for (std::size_t c = 0; c < acc[r].size(); ++c) acc[r][c] += cur[r][c];
    }
    for (auto& row : acc)
        for (double& x : row) x /= static_cast<double>(layers + 1);
    return acc;
}

struct ReferenceLoss {
    double ce = 0.0;
    double bpr = 0.0;
    double ir = 0.0;
    double total = 0.0;
};

// Objective for the cumulative (mode 1) / exact (2) / reverse (3) decompositions.
inline ReferenceLoss reference_loss(const Dataset& train, int mode, const std::vector<int>& thresholds,
                                    const ModelParams& params, std::size_t layers,
                                    const std::vector<TrainingTriplet>& triplets, double alpha, double lambda,
                                    double epsilon) {
    const Dense base = to_dense(params.base);
    const std::size_t n = base.size();
    const std::size_t d = base.front().size();
    const Dense h_interest = dense_representation(dense_adjacency(train, 0, 0), base, layers);
    std::vector<Dense> h_levels;
    Dense h(n, std::vector<double>(d, 0.0));
    for (int t : thresholds) {
        h_levels.push_back(dense_representation(dense_adjacency(train, mode, t), base, layers));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) h[r][c] += h_levels.back()[r][c];
    }
    const auto logit = [&](std::size_t u, std::size_t v, std::size_t r) {
        double z = 0.0;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) z += h[u][a] * params.bilinear[r](a, b) * h[v][b];
        return z;
    };
    const std::size_t num_r = params.bilinear.size();
    ReferenceLoss out;
    for (const auto& t : triplets) {
        const std::size_t pos = train.num_users + t.pos_item;
        double denom = 0.0;
        double o_pos = 0.0;
        for (std::size_t r = 0; r < num_r; ++r) {
            denom += std::exp(logit(t.user, pos, r));
            o_pos += logit(t.user, pos, r);
        }
        out.ce += -std::log(std::exp(logit(t.user, pos, t.rating_index)) / denom);
        if (t.neg_item != kNoNegative) {
            const std::size_t neg = train.num_users + static_cast<std::size_t>(t.neg_item);
            double o_neg = 0.0;
            for (std::size_t r = 0; r < num_r; ++r) o_neg += logit(t.user, neg, r);
            out.bpr += -std::log(1.0 / (1.0 + std::exp(-(o_pos - o_neg))));
        }
    }
    for (const auto& level : h_levels) {
        for (std::size_t i = 0; i < n; ++i) {
            double sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) sq += (level[i][c] - h_interest[i][c]) * (level[i][c] - h_interest[i][c]);
            out.ir += std::sqrt(sq + epsilon) / static_cast<double>(h_levels.size());
        }
    }
    out.total = out.ce + alpha * out.bpr + lambda * out.ir;
    return out;
}

}  // namespace rogmc::testing
