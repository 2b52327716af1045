#pragma once

// Logistic-regression worker training, FedAvg aggregation and evaluation.

#include <cstdint>
#include <span>
#include <vector>

#include "bcfl/core/types.hpp"
#include "bcfl/fl/dataset.hpp"

namespace bcfl::fl {

class TrainingError : public Error {
public:
    using Error::Error;
};

struct TrainConfig {
    int epochs = 2;
    double learning_rate = 0.25;
    /// Rows per mini-batch; 0 means the whole shard. Batches are taken in
    /// shard order.
    std::size_t batch_size = 0;

    /// Throws Error on a non-positive learning rate or negative epochs.
    void validate() const;
};

/// d = 4 weights (3 features + bias), uniform in [-0.1, 0.1].
ModelParams init_model(std::uint64_t seed);

/// Logit of `sample` under `params` (weights 0..2 features, 3 bias).
double logit(const ModelParams& params, const Sample& sample);

/// log(1 + e^z) - y z, computed without overflow.
double logistic_loss(const ModelParams& params, const Sample& sample);

/// Gradient of logistic_loss with respect to params.
std::vector<double> logistic_gradient(const ModelParams& params, const Sample& sample);

/// Runs cfg.epochs passes of mini-batch gradient descent from `global_model`.
/// Throws TrainingError when the model or the loss becomes non-finite.
ModelParams local_train(const ModelParams& global_model, std::span<const Sample> shard, const TrainConfig& cfg);

struct WeightedUpdate {
    WorkerId source;
    ModelParams params;
    std::size_t weight = 0;
};

struct AggregateResult {
    ModelParams model;
    std::vector<WorkerId> accepted;
    std::vector<WorkerId> rejected;
};

/// FedAvg: weight-proportional coordinate mean. Updates whose dimension
/// differs from the first accepted one, with non-finite entries or zero
/// weight are rejected individually. Summation runs in worker-id order so
/// the result does not depend on input order. Throws Error if nothing is
/// accepted.
AggregateResult aggregate(std::span<const WeightedUpdate> updates);

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

Evaluation evaluate(const ModelParams& params, std::span<const Sample> rows);

struct Plateau {
    ModelParams model;
    double loss = 0.0;
    std::size_t steps = 0;
};

/// Centralized full-batch gradient descent from zero weights, stopped when
/// the mean loss changes by less than `tolerance` over `check_every` steps.
Plateau train_to_plateau(std::span<const Sample> rows, double learning_rate = 1.0, double tolerance = 1e-8,
                         std::size_t check_every = 100, std::size_t max_steps = 2'000'000);

}  // namespace bcfl::fl
