#pragma once

// Synthetic binary mode-choice data: trip duration, trip reliability and trip
// cost, labelled automobile (0) or train (1) from a seeded logit ground truth.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bcfl/core/types.hpp"

namespace bcfl::fl {

inline constexpr std::size_t kFeatureCount = 3;
/// Features plus bias.
inline constexpr std::size_t kModelDimension = kFeatureCount + 1;

enum class Mode : int { Automobile = 0, Train = 1 };

struct Sample {
    /// Standardized duration, reliability, cost.
    std::array<double, kFeatureCount> features{};
    int label = 0;  // 1 = train

    bool operator==(const Sample&) const = default;
};

struct Dataset {
    std::vector<Sample> rows;

    std::size_t size() const { return rows.size(); }
    double positive_rate() const;
    bool operator==(const Dataset&) const = default;
};

struct DatasetShard {
    WorkerId owner;
    std::vector<Sample> rows;
};

struct DatasetOptions {
    /// L2 norm of the ground-truth feature coefficients.
    double coefficient_norm = 4.0;
    /// Ground-truth intercept.
    double intercept = 0.0;
    /// Accepted label base-rate band; coefficients are redrawn outside it.
    double min_base_rate = 0.2;
    double max_base_rate = 0.8;
};

struct GeneratedData {
    Dataset full;
    std::vector<DatasetShard> shards;
    std::array<double, kFeatureCount> coefficients{};
    double intercept = 0.0;
};

/// Draws `n_rows` rows, standardizes each feature with statistics of the
/// whole draw, and splits rows round-robin over `n_workers` shards.
/// Requires n_rows >= n_workers >= 1.
GeneratedData generate_dataset(std::uint64_t seed, std::size_t n_rows, std::size_t n_workers,
                               const DatasetOptions& options = {});

/// Row k goes to worker k mod n_workers.
std::vector<DatasetShard> shard_round_robin(const Dataset& data, std::size_t n_workers);

/// CSV with header `duration,reliability,cost,label`; label is
/// `automobile` or `train`; reals are written with 17 significant digits
/// so a reload is bit-identical.
void write_csv(std::ostream& out, const Dataset& data);
Dataset read_csv(std::istream& in);

}  // namespace bcfl::fl
