#include "rogmc/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "rogmc/error.hpp"
#include "rogmc/evaluation.hpp"
#include "rogmc/kernels.hpp"

namespace rogmc {
namespace {

constexpr double kProbabilityFloor = 1e-12;

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

// grad_base += sum_l A^l c, with c = dL/dh_x scaled by the aggregation.
void pull_back_graph(const SparseBipartiteGraph& graph, const Matrix& grad_h, const PropagationConfig& config,
                     Matrix& grad_base) {
    Matrix c = grad_h;
    if (config.aggregation == Aggregation::mean && config.layers > 0) {
        kernels::scale(1.0 / static_cast<double>(config.layers + 1), c.flat());
    }
    Matrix g = c;
    Matrix scratch(c.rows(), c.cols());
    const auto view = graph.view();
    for (std::size_t l = 0; l < config.layers; ++l) {
        // The normalized adjacency is symmetric, so A^T g = A g.
        kernels::active().spmm(view, g.data(), scratch.data(), c.cols());
        kernels::axpy(1.0, c.flat(), scratch.flat());
        std::swap(g, scratch);
    }
    kernels::axpy(1.0, g.flat(), grad_base.flat());
}

LossBreakdown evaluate(const DecomposedGraphs& graphs, const ForwardCache& cache,
                       std::span<const TrainingTriplet> triplets, const ModelParams& params,
                       const TrainConfig& config, GradientSet* grads) {
    const std::size_t num_users = graphs.num_users();
    const std::size_t d = params.dim();
    const std::size_t num_ratings = params.num_ratings();
    const bool use_bpr = config.alpha != 0.0;
    const bool use_ir = config.lambda != 0.0;

    LossBreakdown loss;
    const UserProjections proj = project_users(cache.h, num_users, params.bilinear);

    Matrix grad_h;
    std::vector<Matrix> user_accum;  // S_r[u] = sum over pairs of g_r * h[v]
    if (grads != nullptr) {
        grad_h = Matrix(cache.h.rows(), d);
        user_accum.assign(num_ratings, Matrix(num_users, d));
    }
    const auto accumulate_pair = [&](std::size_t user, std::size_t item_node, std::span<const double> g) {
        const auto hv = cache.h.row(item_node);
        auto gv = grad_h.row(item_node);
        for (std::size_t r = 0; r < num_ratings; ++r) {
            if (g[r] == 0.0) continue;
            kernels::axpy(g[r], proj.per_rating[r].row(user), gv);
            kernels::axpy(g[r], hv, user_accum[r].row(user));
        }
    };

    std::vector<double> z_pos(num_ratings);
    std::vector<double> z_neg(num_ratings);
    std::vector<double> g_pos(num_ratings);
    std::vector<double> g_neg(num_ratings);
    for (const TrainingTriplet& t : triplets) {
        const std::size_t pos_node = num_users + t.pos_item;
        proj.logits(t.user, cache.h.row(pos_node), z_pos);
        const std::vector<double> p = predict_distribution(z_pos);
        const double p_true = p[t.rating_index];
        loss.ce += -std::log(std::max(p_true, kProbabilityFloor));
        if (grads != nullptr) {
            const bool clamped = p_true < kProbabilityFloor;
            for (std::size_t r = 0; r < num_ratings; ++r) {
                g_pos[r] = clamped ? 0.0 : p[r] - (r == t.rating_index ? 1.0 : 0.0);
            }
        }

        const bool pairwise = use_bpr && t.neg_item != kNoNegative;
        std::size_t neg_node = 0;
        if (pairwise) {
            neg_node = num_users + static_cast<std::size_t>(t.neg_item);
            proj.logits(t.user, cache.h.row(neg_node), z_neg);
            double o_pos = 0.0;
            double o_neg = 0.0;
            for (std::size_t r = 0; r < num_ratings; ++r) {
                o_pos += z_pos[r];
                o_neg += z_neg[r];
            }
            const double margin = o_pos - o_neg;
            loss.bpr += softplus(-margin);
            if (grads != nullptr) {
                const double w = config.alpha * sigmoid(-margin);
                for (std::size_t r = 0; r < num_ratings; ++r) {
                    g_pos[r] -= w;
                    g_neg[r] = w;
                }
            }
        }
        if (grads != nullptr) {
            accumulate_pair(t.user, pos_node, g_pos);
            if (pairwise) accumulate_pair(t.user, neg_node, g_neg);
        }
    }

    if (grads != nullptr) {
        // dL/dQ_r = sum_u h[u] S_r[u]^T and dL/dh[u] += sum_r Q_r S_r[u].
        for (std::size_t r = 0; r < num_ratings; ++r) {
            Matrix& gq = grads->bilinear[r];
            const Matrix& q = params.bilinear[r];
            for (std::size_t u = 0; u < num_users; ++u) {
                const auto s = user_accum[r].row(u);
                const auto hu = cache.h.row(u);
                auto gu = grad_h.row(u);
                for (std::size_t a = 0; a < d; ++a) {
                    kernels::axpy(hu[a], s, gq.row(a));
                    gu[a] += kernels::dot(q.row(a), s);
                }
            }
        }
    }

    // Interest regularization couples every level to the interest view.
    const std::size_t num_levels = cache.levels.size();
    Matrix grad_interest;
    std::vector<Matrix> grad_levels;
    if (grads != nullptr) {
        grad_levels.assign(num_levels, grad_h);
        if (use_ir) grad_interest = Matrix(cache.h.rows(), d);
    }
    if (use_ir && num_levels > 0) {
        const double level_weight = 1.0 / static_cast<double>(num_levels);
        const double grad_weight = config.lambda * level_weight;
        std::vector<double> delta(d);
        for (std::size_t t = 0; t < num_levels; ++t) {
            const Matrix& ht = cache.levels[t].h;
            for (std::size_t i = 0; i < ht.rows(); ++i) {
                const auto a = ht.row(i);
                const auto b = cache.interest.h.row(i);
                const double norm = std::sqrt(kernels::squared_distance(a, b) + config.ir_epsilon);
                loss.ir += norm;
                if (grads != nullptr) {
                    for (std::size_t k = 0; k < d; ++k) delta[k] = a[k] - b[k];
                    const double coef = grad_weight / norm;
                    kernels::axpy(coef, delta, grad_levels[t].row(i));
                    kernels::axpy(-coef, delta, grad_interest.row(i));
                }
            }
        }
        loss.ir *= level_weight;
    }

    loss.total = loss.ce + (use_bpr ? config.alpha * loss.bpr : 0.0) + (use_ir ? config.lambda * loss.ir : 0.0);

    if (grads != nullptr) {
        const PropagationConfig prop = config.propagation();
        if (graphs.mode == DecompositionMode::none) {
            // Every view is the interest graph; pull back their summed gradient once.
            Matrix combined(cache.h.rows(), d);
            for (const Matrix& g : grad_levels) kernels::axpy(1.0, g.flat(), combined.flat());
            if (use_ir) kernels::axpy(1.0, grad_interest.flat(), combined.flat());
            pull_back_graph(graphs.interest, combined, prop, grads->base);
        } else {
            for (std::size_t t = 0; t < num_levels; ++t) {
                pull_back_graph(graphs.levels[t].graph, grad_levels[t], prop, grads->base);
            }
            if (use_ir) pull_back_graph(graphs.interest, grad_interest, prop, grads->base);
        }
        bool finite = all_finite(grads->base.flat());
        for (const Matrix& g : grads->bilinear) finite = finite && all_finite(g.flat());
        if (!finite) throw NumericError("non-finite gradient");
    }
    return loss;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(alpha >= 0.0) || !(lambda >= 0.0)) throw std::invalid_argument("alpha and lambda must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (dim == 0) throw std::invalid_argument("dim must be >= 1");
    if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
    if (!(ir_epsilon > 0.0)) throw std::invalid_argument("ir_epsilon must be > 0");
    if (!(init.embedding_std >= 0.0) || !(init.bilinear_noise_std >= 0.0)) {
        throw std::invalid_argument("initialization scales must be >= 0");
    }
}

NegativeSampler::NegativeSampler(const Dataset& train) : train_(&train), interacted_(train.num_users) {
    for (const auto& x : train.interactions) interacted_[x.user].push_back(x.item);
    for (std::size_t u = 0; u < interacted_.size(); ++u) {
        auto& items = interacted_[u];
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        if (items.size() >= train.num_items && !items.empty()) {
            ++saturated_users_;
            std::cerr << "warning: user " << u
                      << " interacted with every item; pairwise terms are skipped for this user\n";
        }
    }
}

std::vector<TrainingTriplet> NegativeSampler::sample(std::size_t negatives_per_positive, Rng& rng) const {
    const Dataset& train = *train_;
    std::vector<TrainingTriplet> out;
    out.reserve(train.interactions.size() * std::max<std::size_t>(1, negatives_per_positive));
    for (const auto& x : train.interactions) {
        if (!x.known()) continue;
        const auto rating_index = static_cast<std::uint32_t>(train.rating_index(x.label));
        const auto& seen = interacted_[x.user];
        const std::size_t free = train.num_items - seen.size();
        for (std::size_t n = 0; n < negatives_per_positive; ++n) {
            TrainingTriplet t{x.user, x.item, kNoNegative, rating_index};
            if (free > 0) {
                // k-th item (0-based) in the complement of the sorted interacted list.
                std::uniform_int_distribution<std::size_t> pick(0, free - 1);
                std::size_t item = pick(rng);
                for (std::uint32_t taken : seen) {
                    if (taken <= item) {
                        ++item;
                    } else {
                        break;
                    }
                }
                t.neg_item = static_cast<std::int64_t>(item);
            }
            out.push_back(t);
        }
    }
    return out;
}

std::vector<TrainingTriplet> sample_negatives(const Dataset& train, std::size_t negatives_per_positive,
                                              std::uint64_t seed) {
    Rng rng(seed);
    return NegativeSampler(train).sample(negatives_per_positive, rng);
}

double loss_ce(std::span<const double> probabilities, int true_rating, std::span<const int> rating_set) {
    const auto it = std::find(rating_set.begin(), rating_set.end(), true_rating);
    if (it == rating_set.end()) {
        throw std::invalid_argument("rating " + std::to_string(true_rating) + " is not in the rating set");
    }
    const double p = probabilities[static_cast<std::size_t>(it - rating_set.begin())];
    return -std::log(std::max(p, kProbabilityFloor));
}

double loss_bpr(double o_pos, double o_neg) { return softplus(-(o_pos - o_neg)); }

double loss_ir(std::span<const Matrix> h_levels, const Matrix& h_interest, double epsilon) {
    if (h_levels.empty()) return 0.0;
    double total = 0.0;
    for (const Matrix& ht : h_levels) {
        if (!ht.same_shape(h_interest)) throw std::invalid_argument("level and interest shapes differ");
        for (std::size_t i = 0; i < ht.rows(); ++i) {
            total += std::sqrt(kernels::squared_distance(ht.row(i), h_interest.row(i)) + epsilon);
        }
    }
    return total / static_cast<double>(h_levels.size());
}

double loss_ir(const ForwardCache& cache, double epsilon) {
    std::vector<Matrix> levels;
    levels.reserve(cache.levels.size());
    for (const auto& level : cache.levels) levels.push_back(level.h);
    return loss_ir(levels, cache.interest.h, epsilon);
}

GradientSet GradientSet::zeros_like(const ModelParams& params) {
    GradientSet g;
    g.base = Matrix(params.base.rows(), params.base.cols());
    for (const Matrix& q : params.bilinear) g.bilinear.emplace_back(q.rows(), q.cols());
    return g;
}

LossBreakdown total_loss(const DecomposedGraphs& graphs, const ForwardCache& cache,
                         std::span<const TrainingTriplet> triplets, const ModelParams& params,
                         const TrainConfig& config) {
    return evaluate(graphs, cache, triplets, params, config, nullptr);
}

GradientSet backward(const DecomposedGraphs& graphs, const ForwardCache& cache,
                     std::span<const TrainingTriplet> triplets, const ModelParams& params, const TrainConfig& config) {
    GradientSet grads = GradientSet::zeros_like(params);
    evaluate(graphs, cache, triplets, params, config, &grads);
    return grads;
}

LossBreakdown loss_and_gradients(const DecomposedGraphs& graphs, const ForwardCache& cache,
                                 std::span<const TrainingTriplet> triplets, const ModelParams& params,
                                 const TrainConfig& config, GradientSet& grads) {
    grads = GradientSet::zeros_like(params);
    return evaluate(graphs, cache, triplets, params, config, &grads);
}

OptimizerState OptimizerState::zeros_like(const ModelParams& params) {
    return {GradientSet::zeros_like(params), GradientSet::zeros_like(params), 0};
}

void adam_step(ModelParams& params, const GradientSet& grads, OptimizerState& state, double learning_rate) {
    if (!grads.base.same_shape(params.base) || grads.bilinear.size() != params.bilinear.size() ||
        !state.first_moment.base.same_shape(params.base)) {
        throw std::invalid_argument("optimizer shapes do not match the parameters");
    }
    ++state.step;
    const auto t = static_cast<double>(state.step);
    const kernels::AdamCoefficients c{learning_rate,
                                      kAdamBeta1,
                                      kAdamBeta2,
                                      kAdamEpsilon,
                                      1.0 - std::pow(kAdamBeta1, t),
                                      1.0 - std::pow(kAdamBeta2, t)};
    const auto& k = kernels::active();
    k.adam_update(c, grads.base.data(), params.base.data(), state.first_moment.base.data(),
                  state.second_moment.base.data(), params.base.size());
    for (std::size_t r = 0; r < params.bilinear.size(); ++r) {
        k.adam_update(c, grads.bilinear[r].data(), params.bilinear[r].data(), state.first_moment.bilinear[r].data(),
                      state.second_moment.bilinear[r].data(), params.bilinear[r].size());
    }
}

TrainResult train(const SplitDataset& split, const DecomposedGraphs& graphs, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    const Dataset& train_set = split.train;
    if (graphs.num_nodes() != train_set.num_nodes() || graphs.num_users() != train_set.num_users) {
        throw std::invalid_argument("graphs were not built from this training set");
    }
    if (split.val.empty()) throw DataError("training needs a non-empty validation set");

    Rng rng(config.seed);
    ModelParams params = init_params(train_set.num_nodes(), config.dim, train_set.rating_set, rng, config.init);
    OptimizerState optimizer = OptimizerState::zeros_like(params);
    const NegativeSampler sampler(train_set);
    const PropagationConfig prop = config.propagation();

    TrainResult result;
    result.params = params;
    result.best_val_rmse = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    ForwardCache cache = forward(graphs, params, prop);
    GradientSet grads;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto triplets = sampler.sample(config.negatives_per_positive, rng);
        const LossBreakdown loss = loss_and_gradients(graphs, cache, triplets, params, config, grads);
        if (!std::isfinite(loss.total)) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                               ": ce=" + std::to_string(loss.ce) + " bpr=" + std::to_string(loss.bpr) +
                               " ir=" + std::to_string(loss.ir));
        }
        adam_step(params, grads, optimizer, config.learning_rate);
        cache = forward(graphs, params, prop);

        EpochRecord record{epoch, loss, rmse(cache, params, train_set.num_users, split.val), false};
        if (record.val_rmse < result.best_val_rmse) {
            record.best = true;
            result.best_val_rmse = record.val_rmse;
            result.best_epoch = epoch;
            result.params = params;
            since_best = 0;
        } else {
            ++since_best;
        }
        result.history.push_back(record);
        if (on_epoch) on_epoch(record);
        if (since_best >= config.patience) break;
    }
    return result;
}

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
    const auto old_precision = out.precision(17);
    out << "epoch,ce,bpr,ir,total,val_rmse,best_flag\n";
    for (const auto& r : history) {
        out << r.epoch << ',' << r.loss.ce << ',' << r.loss.bpr << ',' << r.loss.ir << ',' << r.loss.total << ','
            << r.val_rmse << ',' << (r.best ? 1 : 0) << '\n';
    }
    out.precision(old_precision);
}

}  // namespace rogmc
