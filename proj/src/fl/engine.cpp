#include "bcfl/fl/engine.hpp"

#include <algorithm>
#include <cmath>

#include "bcfl/core/random.hpp"

namespace bcfl::fl {

void TrainConfig::validate() const {
    if (epochs < 0) throw Error("epochs must be non-negative");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning rate must be positive");
}

ModelParams init_model(std::uint64_t seed) {
    auto rng = Rng::stream(seed, Stream::InitModel);
    std::vector<double> w(kModelDimension);
    for (auto& v : w) v = rng.uniform(-0.1, 0.1);
    return ModelParams(std::move(w));
}

double logit(const ModelParams& params, const Sample& sample) {
    double z = params[kFeatureCount];
    for (std::size_t j = 0; j < kFeatureCount; ++j) z += params[j] * sample.features[j];
    return z;
}

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double logistic_loss(const ModelParams& params, const Sample& sample) {
    double z = logit(params, sample);
    return softplus(z) - static_cast<double>(sample.label) * z;
}

std::vector<double> logistic_gradient(const ModelParams& params, const Sample& sample) {
    double residual = sigmoid(logit(params, sample)) - static_cast<double>(sample.label);
    std::vector<double> g(kModelDimension);
    for (std::size_t j = 0; j < kFeatureCount; ++j) g[j] = residual * sample.features[j];
    g[kFeatureCount] = residual;
    return g;
}

ModelParams local_train(const ModelParams& global_model, std::span<const Sample> shard, const TrainConfig& cfg) {
    cfg.validate();
    if (global_model.dimension() != kModelDimension) throw TrainingError("global model has wrong dimension");
    if (!global_model.all_finite()) throw TrainingError("global model has non-finite weights");
    if (shard.empty()) throw TrainingError("cannot train on an empty shard");

    ModelParams model = global_model;
    const std::size_t batch = cfg.batch_size == 0 ? shard.size() : std::min(cfg.batch_size, shard.size());
    std::vector<double> grad(kModelDimension);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t begin = 0; begin < shard.size(); begin += batch) {
            const std::size_t end = std::min(begin + batch, shard.size());
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                const auto& s = shard[i];
                double z = logit(model, s);
                batch_loss += softplus(z) - static_cast<double>(s.label) * z;
                double residual = sigmoid(z) - static_cast<double>(s.label);
                for (std::size_t j = 0; j < kFeatureCount; ++j) grad[j] += residual * s.features[j];
                grad[kFeatureCount] += residual;
            }
            if (!std::isfinite(batch_loss)) throw TrainingError("non-finite training loss");
            const double scale = cfg.learning_rate / static_cast<double>(end - begin);
            for (std::size_t j = 0; j < kModelDimension; ++j) model[j] -= scale * grad[j];
        }
    }
    if (!model.all_finite()) throw TrainingError("training diverged to non-finite weights");
    return model;
}

AggregateResult aggregate(std::span<const WeightedUpdate> updates) {
    std::vector<const WeightedUpdate*> order;
    order.reserve(updates.size());
    for (const auto& u : updates) order.push_back(&u);
    std::stable_sort(order.begin(), order.end(),
                     [](const WeightedUpdate* a, const WeightedUpdate* b) { return a->source < b->source; });

    AggregateResult result;
    std::vector<double> sum;
    double total_weight = 0.0;
    for (const auto* u : order) {
        bool ok = u->weight > 0 && u->params.dimension() > 0 && u->params.all_finite() &&
                  (sum.empty() || u->params.dimension() == sum.size());
        if (!ok) {
            result.rejected.push_back(u->source);
            continue;
        }
        if (sum.empty()) sum.assign(u->params.dimension(), 0.0);
        const double w = static_cast<double>(u->weight);
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += w * u->params[j];
        total_weight += w;
        result.accepted.push_back(u->source);
    }
    if (result.accepted.empty()) throw Error("no acceptable update to aggregate");
    for (auto& v : sum) v /= total_weight;
    result.model = ModelParams(std::move(sum));
    return result;
}

Evaluation evaluate(const ModelParams& params, std::span<const Sample> rows) {
    Evaluation ev;
    if (rows.empty()) return ev;
    std::size_t correct = 0;
    for (const auto& s : rows) {
        double z = logit(params, s);
        ev.loss += softplus(z) - static_cast<double>(s.label) * z;
        correct += (z >= 0.0 ? 1 : 0) == s.label;
    }
    ev.loss /= static_cast<double>(rows.size());
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
    return ev;
}

Plateau train_to_plateau(std::span<const Sample> rows, double learning_rate, double tolerance,
                         std::size_t check_every, std::size_t max_steps) {
    if (rows.empty()) throw TrainingError("cannot train on an empty dataset");
    TrainConfig step{1, learning_rate, 0};
    Plateau p;
    p.model = ModelParams(std::vector<double>(kModelDimension, 0.0));
    double previous = evaluate(p.model, rows).loss;
    while (p.steps < max_steps) {
        for (std::size_t k = 0; k < check_every; ++k) p.model = local_train(p.model, rows, step);
        p.steps += check_every;
        double current = evaluate(p.model, rows).loss;
        bool flat = std::abs(previous - current) < tolerance;
        previous = current;
        if (flat) break;
    }
    p.loss = previous;
    return p;
}

}  // namespace bcfl::fl
