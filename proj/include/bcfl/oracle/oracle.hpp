#pragma once

// Brute-force reference computations for tests. Everything here works from
// the exported files (dataset CSV, models/chain/audit JSON lines) and
// reimplements its own arithmetic; only core types and their byte layout
// are shared with the pipeline.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bcfl/core/types.hpp"

namespace bcfl::oracle {

class OracleError : public Error {
public:
    using Error::Error;
};

struct Row {
    std::array<double, 3> x{};
    int y = 0;
};

std::vector<Row> load_dataset_csv(std::istream& in);

struct CentralizedResult {
    double plateau_loss = 0.0;
    double accuracy = 0.0;
    std::vector<double> weights;
    std::size_t steps = 0;
};

/// Full-batch gradient descent from zero weights until the loss changes by
/// less than 1e-8 over 100 steps.
CentralizedResult centralized_baseline(const std::vector<Row>& rows, double learning_rate = 1.0);

struct FedAvgSettings {
    std::size_t workers = 10;
    int epochs = 2;
    double learning_rate = 0.25;
    /// 0 = whole shard.
    std::size_t batch_size = 0;
    std::size_t rounds = 300;
    double epsilon = 0.0;
    std::size_t streak = 5;
};

struct ReferenceRun {
    /// models[r] is the global model after r rounds; models[0] is the start.
    std::vector<std::vector<double>> models;
    /// losses[r - 1] is the full-data loss of models[r].
    std::vector<double> losses;
    std::optional<std::size_t> convergence_round;
};

/// Plain loop: every worker trains on its round-robin shard, the server
/// takes the shard-size-weighted mean. No events, no ledger.
ReferenceRun reference_fedavg(const std::vector<Row>& rows, const std::vector<double>& initial,
                              const FedAvgSettings& settings);

/// digest hex -> weights, from models.jsonl.
std::map<std::string, std::vector<double>> load_models_jsonl(std::istream& in);

/// height -> global model digest hex, from chain.jsonl.
std::vector<std::string> load_chain_digests(std::istream& in);

struct RecomputedScore {
    Round round = 0;
    std::uint32_t worker = 0;
    /// +inf when the log records an invalid audit.
    double logged = 0.0;
    double recomputed = 0.0;
    bool included = false;
};

/// Replays the default detector from the audit log. Every revealed GM digest
/// must name a stored model whose canonical bytes hash to it and, when
/// `chain_digests` is given, must be the model committed at that round;
/// otherwise OracleError.
std::vector<RecomputedScore> recompute_scores(std::istream& audit_jsonl,
                                              const std::map<std::string, std::vector<double>>& models,
                                              const std::vector<std::string>* chain_digests = nullptr);

}  // namespace bcfl::oracle
