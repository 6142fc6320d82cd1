#include "rogmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rogmc/error.hpp"
#include "rogmc/kernels.hpp"

namespace rogmc {

std::string to_string(Aggregation aggregation) { return aggregation == Aggregation::mean ? "mean" : "sum"; }

Aggregation parse_aggregation(const std::string& name) {
    if (name == "mean") return Aggregation::mean;
    if (name == "sum") return Aggregation::sum;
    throw std::invalid_argument("unknown aggregation '" + name + "' (expected mean or sum)");
}

void ModelParams::validate() const {
    if (dim() == 0) throw std::invalid_argument("embedding dimension must be >= 1");
    if (bilinear.size() != rating_set.size()) throw std::invalid_argument("one bilinear matrix per rating is required");
    for (const Matrix& q : bilinear) {
        if (q.rows() != dim() || q.cols() != dim()) throw std::invalid_argument("bilinear matrix must be d x d");
    }
    const auto finite = [](const Matrix& m) {
        return std::all_of(m.flat().begin(), m.flat().end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(base) || !std::all_of(bilinear.begin(), bilinear.end(), finite)) {
        throw NumericError("model parameters contain non-finite values");
    }
}

ModelParams init_params(std::size_t num_nodes, std::size_t dim, std::vector<int> rating_set, Rng& rng,
                        const InitConfig& init) {
    if (dim == 0) throw std::invalid_argument("embedding dimension must be >= 1");
    ModelParams params;
    params.base = Matrix(num_nodes, dim);
    std::normal_distribution<double> embedding(0.0, init.embedding_std);
    for (double& x : params.base.flat()) x = embedding(rng);
    std::normal_distribution<double> noise(0.0, init.bilinear_noise_std);
    for (std::size_t r = 0; r < rating_set.size(); ++r) {
        Matrix q(dim, dim);
        for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t b = 0; b < dim; ++b) q(a, b) = (a == b ? 1.0 : 0.0) + noise(rng);
        }
        params.bilinear.push_back(std::move(q));
    }
    params.rating_set = std::move(rating_set);
    return params;
}

std::vector<Matrix> propagate(const SparseBipartiteGraph& graph, const Matrix& base, std::size_t layers) {
    if (base.rows() != graph.num_nodes()) throw std::invalid_argument("embedding rows do not match graph nodes");
    std::vector<Matrix> out;
    out.reserve(layers + 1);
    out.push_back(base);
    const auto view = graph.view();
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix next(base.rows(), base.cols());
        kernels::active().spmm(view, out.back().data(), next.data(), base.cols());
        if (!std::all_of(next.flat().begin(), next.flat().end(), [](double x) { return std::isfinite(x); })) {
            throw NumericError("non-finite value during propagation at layer " + std::to_string(l + 1));
        }
        out.push_back(std::move(next));
    }
    return out;
}

Matrix aggregate_layers(std::span<const Matrix> layers, Aggregation aggregation) {
    if (layers.empty()) throw std::invalid_argument("aggregate_layers needs at least one layer");
    Matrix out = layers.front();
    for (std::size_t l = 1; l < layers.size(); ++l) kernels::axpy(1.0, layers[l].flat(), out.flat());
    if (aggregation == Aggregation::mean && layers.size() > 1) {
        kernels::scale(1.0 / static_cast<double>(layers.size()), out.flat());
    }
    return out;
}

namespace {

GraphRepresentation represent(const SparseBipartiteGraph& graph, const Matrix& base, const PropagationConfig& config) {
    GraphRepresentation rep;
    rep.layers = propagate(graph, base, config.layers);
    rep.h = aggregate_layers(rep.layers, config.aggregation);
    return rep;
}

}  // namespace

ForwardCache forward(const DecomposedGraphs& graphs, const ModelParams& params, const PropagationConfig& config) {
    if (params.num_nodes() != graphs.num_nodes()) {
        throw std::invalid_argument("parameter table has " + std::to_string(params.num_nodes()) +
                                    " rows but the graphs have " + std::to_string(graphs.num_nodes()) + " nodes");
    }
    ForwardCache cache;
    cache.interest = represent(graphs.interest, params.base, config);
    cache.levels.reserve(graphs.levels.size());
    for (const auto& level : graphs.levels) {
        // The single-view variant's only level is the interest graph itself.
        if (graphs.mode == DecompositionMode::none) {
            cache.levels.push_back(cache.interest);
        } else {
            cache.levels.push_back(represent(level.graph, params.base, config));
        }
    }
    cache.h = Matrix(params.num_nodes(), params.dim());
    for (const auto& level : cache.levels) kernels::axpy(1.0, level.h.flat(), cache.h.flat());
    return cache;
}

std::vector<double> decode_logits(std::span<const double> h_u, std::span<const double> h_v,
                                  const std::vector<Matrix>& bilinear) {
    std::vector<double> logits(bilinear.size());
    std::vector<double> q_hv(h_v.size());
    for (std::size_t r = 0; r < bilinear.size(); ++r) {
        const Matrix& q = bilinear[r];
        if (q.rows() != h_u.size() || q.cols() != h_v.size()) throw std::invalid_argument("bilinear shape mismatch");
        for (std::size_t a = 0; a < q.rows(); ++a) q_hv[a] = kernels::dot(q.row(a), h_v);
        logits[r] = kernels::dot(h_u, q_hv);
    }
    return logits;
}

std::vector<double> predict_distribution(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t r = 0; r < logits.size(); ++r) {
        p[r] = std::exp(logits[r] - peak);
        total += p[r];
    }
    for (double& x : p) x /= total;
    return p;
}

double predict_rating(std::span<const double> probabilities, std::span<const int> rating_set) {
    if (probabilities.size() != rating_set.size()) throw std::invalid_argument("distribution size mismatch");
    double expected = 0.0;
    for (std::size_t r = 0; r < rating_set.size(); ++r) expected += rating_set[r] * probabilities[r];
    return std::clamp(expected, static_cast<double>(rating_set.front()), static_cast<double>(rating_set.back()));
}

void UserProjections::logits(std::size_t user, std::span<const double> h_item, std::span<double> out) const {
    for (std::size_t r = 0; r < per_rating.size(); ++r) out[r] = kernels::dot(per_rating[r].row(user), h_item);
}

UserProjections project_users(const Matrix& h, std::size_t num_users, const std::vector<Matrix>& bilinear) {
    UserProjections out;
    const std::size_t d = h.cols();
    for (const Matrix& q : bilinear) {
        Matrix p(num_users, d);
        for (std::size_t u = 0; u < num_users; ++u) {
            const auto hu = h.row(u);
            auto pu = p.row(u);
            for (std::size_t a = 0; a < d; ++a) kernels::axpy(hu[a], q.row(a), pu);
        }
        out.per_rating.push_back(std::move(p));
    }
    return out;
}

std::vector<double> predict_pairs(const ForwardCache& cache, const ModelParams& params, std::size_t num_users,
                                  std::span<const Interaction> pairs) {
    const UserProjections proj = project_users(cache.h, num_users, params.bilinear);
    std::vector<double> out;
    out.reserve(pairs.size());
    std::vector<double> z(params.num_ratings());
    for (const Interaction& x : pairs) {
        proj.logits(x.user, cache.h.row(num_users + x.item), z);
        out.push_back(predict_rating(predict_distribution(z), params.rating_set));
    }
    return out;
}

}  // namespace rogmc
