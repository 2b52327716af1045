#include "bcfl/fl/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "bcfl/core/random.hpp"

namespace bcfl::fl {

namespace {

constexpr int kMaxRedraws = 1000;

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double Dataset::positive_rate() const {
    if (rows.empty()) return 0.0;
    std::size_t positives = 0;
    for (const auto& s : rows) positives += s.label == 1;
    return static_cast<double>(positives) / static_cast<double>(rows.size());
}

GeneratedData generate_dataset(std::uint64_t seed, std::size_t n_rows, std::size_t n_workers,
                               const DatasetOptions& options) {
    if (n_workers == 0) throw Error("dataset needs at least one worker");
    if (n_rows < n_workers) throw Error("dataset needs at least one row per worker");

    auto rng = Rng::stream(seed, Stream::Dataset);
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        GeneratedData out;

        std::array<double, kFeatureCount> direction{};
        double norm = 0.0;
        while (norm < 1e-9) {
            norm = 0.0;
            for (auto& d : direction) {
                d = rng.normal();
                norm += d * d;
            }
            norm = std::sqrt(norm);
        }
        for (std::size_t j = 0; j < kFeatureCount; ++j) out.coefficients[j] = options.coefficient_norm * direction[j] / norm;
        out.intercept = options.intercept;

        // Raw attributes: minutes, on-time probability, currency units.
        std::vector<std::array<double, kFeatureCount>> raw(n_rows);
        for (auto& r : raw) {
            r[0] = 60.0 + 15.0 * rng.normal();
            r[1] = rng.uniform(0.5, 1.0);
            r[2] = 20.0 + 5.0 * rng.normal();
        }

        std::array<double, kFeatureCount> mean{}, stddev{};
        for (const auto& r : raw)
            for (std::size_t j = 0; j < kFeatureCount; ++j) mean[j] += r[j];
        for (auto& m : mean) m /= static_cast<double>(n_rows);
        for (const auto& r : raw)
            for (std::size_t j = 0; j < kFeatureCount; ++j) stddev[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
        for (auto& s : stddev) {
            s = std::sqrt(s / static_cast<double>(n_rows));
            if (s == 0.0) s = 1.0;
        }

        out.full.rows.resize(n_rows);
        for (std::size_t i = 0; i < n_rows; ++i) {
            auto& sample = out.full.rows[i];
            double u = out.intercept;
            for (std::size_t j = 0; j < kFeatureCount; ++j) {
                sample.features[j] = (raw[i][j] - mean[j]) / stddev[j];
                u += out.coefficients[j] * sample.features[j];
            }
            sample.label = rng.uniform01() < logistic(u) ? 1 : 0;
        }

        double rate = out.full.positive_rate();
        if (rate < options.min_base_rate || rate > options.max_base_rate) continue;

        out.shards = shard_round_robin(out.full, n_workers);
        return out;
    }
    throw Error("could not draw a dataset inside the label base-rate band");
}

std::vector<DatasetShard> shard_round_robin(const Dataset& data, std::size_t n_workers) {
    std::vector<DatasetShard> shards(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) shards[w].owner = WorkerId{static_cast<std::uint32_t>(w)};
    for (std::size_t i = 0; i < data.rows.size(); ++i) shards[i % n_workers].rows.push_back(data.rows[i]);
    return shards;
}

void write_csv(std::ostream& out, const Dataset& data) {
    out << "duration,reliability,cost,label\n";
    for (const auto& s : data.rows) {
        out << format_real(s.features[0]) << ',' << format_real(s.features[1]) << ',' << format_real(s.features[2])
            << ',' << (s.label == 1 ? "train" : "automobile") << '\n';
    }
}

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "duration,reliability,cost,label") {
        throw DecodeError("dataset CSV must start with header duration,reliability,cost,label");
    }
    Dataset data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        Sample s;
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            if (!std::getline(fields, cell, ',')) throw DecodeError("short row at line " + std::to_string(line_no));
            s.features[j] = std::stod(cell);
        }
        if (!std::getline(fields, cell)) throw DecodeError("missing label at line " + std::to_string(line_no));
        if (cell == "train") {
            s.label = 1;
        } else if (cell == "automobile") {
            s.label = 0;
        } else {
            throw DecodeError("unknown label '" + cell + "' at line " + std::to_string(line_no));
        }
        data.rows.push_back(s);
    }
    return data;
}

}  // namespace bcfl::fl
