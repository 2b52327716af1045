#include "bcfl/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>

#include "bcfl/core/crypto.hpp"
#include "json.hpp"

namespace bcfl::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sig(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double log1pexp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double score_of(const std::vector<double>& w, const Row& r) {
    double z = w[3];
    for (std::size_t j = 0; j < 3; ++j) z += w[j] * r.x[j];
    return z;
}

double mean_loss(const std::vector<double>& w, const std::vector<Row>& rows) {
    double s = 0.0;
    for (const auto& r : rows) {
        const double z = score_of(w, r);
        s += log1pexp(z) - static_cast<double>(r.y) * z;
    }
    return s / static_cast<double>(rows.size());
}

void gd_pass(std::vector<double>& w, const std::vector<Row>& rows, std::size_t begin, std::size_t end, double lr) {
    std::array<double, 4> g{};
    for (std::size_t i = begin; i < end; ++i) {
        const double res = sig(score_of(w, rows[i])) - static_cast<double>(rows[i].y);
        for (std::size_t j = 0; j < 3; ++j) g[j] += res * rows[i].x[j];
        g[3] += res;
    }
    const double step = lr / static_cast<double>(end - begin);
    for (std::size_t j = 0; j < 4; ++j) w[j] -= step * g[j];
}

double med(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return kInf;
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

double norm_ratio(double d, double m) {
    if (m > 0.0) return d / m;
    return d == 0.0 ? 1.0 : kInf;
}

}  // namespace

std::vector<Row> load_dataset_csv(std::istream& in) {
    std::string line;
    std::getline(in, line);
    if (line != "duration,reliability,cost,label") throw OracleError("unexpected dataset header: " + line);
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Row r;
        for (auto& v : r.x) {
            std::getline(ss, cell, ',');
            v = std::stod(cell);
        }
        std::getline(ss, cell);
        if (cell == "train") {
            r.y = 1;
        } else if (cell == "automobile") {
            r.y = 0;
        } else {
            throw OracleError("bad label: " + cell);
        }
        rows.push_back(r);
    }
    return rows;
}

CentralizedResult centralized_baseline(const std::vector<Row>& rows, double learning_rate) {
    if (rows.empty()) throw OracleError("empty dataset");
    CentralizedResult out;
    out.weights.assign(4, 0.0);
    double prev = mean_loss(out.weights, rows);
    for (;;) {
        for (int k = 0; k < 100; ++k) gd_pass(out.weights, rows, 0, rows.size(), learning_rate);
        out.steps += 100;
        const double cur = mean_loss(out.weights, rows);
        const bool flat = std::abs(prev - cur) < 1e-8;
        prev = cur;
        if (flat || out.steps >= 2'000'000) break;
    }
    out.plateau_loss = prev;
    std::size_t hits = 0;
    for (const auto& r : rows) hits += (score_of(out.weights, r) >= 0.0 ? 1 : 0) == r.y;
    out.accuracy = static_cast<double>(hits) / static_cast<double>(rows.size());
    return out;
}

ReferenceRun reference_fedavg(const std::vector<Row>& rows, const std::vector<double>& initial,
                              const FedAvgSettings& s) {
    std::vector<std::vector<Row>> shards(s.workers);
    for (std::size_t i = 0; i < rows.size(); ++i) shards[i % s.workers].push_back(rows[i]);

    ReferenceRun run;
    run.models.push_back(initial);
    std::size_t streak = 0;
    for (std::size_t round = 0; round < s.rounds; ++round) {
        const auto& gm = run.models.back();
        std::vector<double> acc(4, 0.0);
        double total = 0.0;
        for (const auto& shard : shards) {
            std::vector<double> w = gm;
            const std::size_t b = s.batch_size == 0 ? shard.size() : std::min(s.batch_size, shard.size());
            for (int e = 0; e < s.epochs; ++e) {
                for (std::size_t lo = 0; lo < shard.size(); lo += b) {
                    gd_pass(w, shard, lo, std::min(lo + b, shard.size()), s.learning_rate);
                }
            }
            const auto n = static_cast<double>(shard.size());
            for (std::size_t j = 0; j < 4; ++j) acc[j] += n * w[j];
            total += n;
        }
        for (auto& v : acc) v /= total;
        run.models.push_back(acc);
        const double l = mean_loss(acc, rows);
        run.losses.push_back(l);
        streak = l <= s.epsilon ? streak + 1 : 0;
        if (streak == s.streak && !run.convergence_round) run.convergence_round = round + 2 - s.streak;
    }
    return run;
}

std::map<std::string, std::vector<double>> load_models_jsonl(std::istream& in) {
    std::map<std::string, std::vector<double>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        out[j.at("digest").get<std::string>()] = j.at("weights").get<std::vector<double>>();
    }
    return out;
}

std::vector<std::string> load_chain_digests(std::istream& in) {
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        if (j.at("height").get<std::size_t>() != out.size()) throw OracleError("chain heights not consecutive");
        out.push_back(j.at("global_model_digest").get<std::string>());
    }
    return out;
}

namespace {

struct Line {
    Round round = 0;
    std::uint32_t worker = 0;
    bool valid = false;
    double logged = kInf;
    bool included = false;
    std::vector<std::pair<Round, double>> window;
    double newest = 0.0;
};

const std::vector<double>& model_for(const nlohmann::json& rec, const std::map<std::string, std::vector<double>>& models,
                                     const std::vector<std::string>* chain) {
    const auto round = rec.at("round").get<Round>();
    const auto hex = rec.at("gm_digest").get<std::string>();
    auto it = models.find(hex);
    if (it == models.end()) throw OracleError("audit names unknown model " + hex);
    if (hash(ModelParams(it->second).serialize()).hex() != hex) throw OracleError("stored model does not hash to " + hex);
    if (chain && (round >= chain->size() || (*chain)[round] != hex))
        throw OracleError("audit GM for round " + std::to_string(round) + " is not the committed one");
    return it->second;
}

}  // namespace

std::vector<RecomputedScore> recompute_scores(std::istream& audit_jsonl,
                                              const std::map<std::string, std::vector<double>>& models,
                                              const std::vector<std::string>* chain_digests) {
    std::vector<Line> lines;
    std::string text;
    while (std::getline(audit_jsonl, text)) {
        if (text.empty()) continue;
        auto j = nlohmann::json::parse(text);
        Line l;
        l.round = j.at("round").get<Round>();
        l.worker = j.at("worker").get<std::uint32_t>();
        l.valid = j.at("proofs_valid").get<bool>();
        l.included = j.at("included").get<bool>();
        if (!j.at("score").is_null()) l.logged = j.at("score").get<double>();
        if (l.valid) {
            for (const auto& rec : j.at("records")) {
                const auto lm = rec.at("lm").get<std::vector<double>>();
                l.window.emplace_back(rec.at("round").get<Round>(), dist(lm, model_for(rec, models, chain_digests)));
            }
            const auto& nw = j.at("newest");
            if (nw.is_null()) throw OracleError("valid audit without newest record");
            l.newest = dist(nw.at("lm").get<std::vector<double>>(), model_for(nw, models, chain_digests));
        }
        lines.push_back(std::move(l));
    }

    std::vector<RecomputedScore> out;
    std::size_t lo = 0;
    while (lo < lines.size()) {
        std::size_t hi = lo;
        while (hi < lines.size() && lines[hi].round == lines[lo].round) ++hi;

        std::map<Round, std::vector<double>> per_round;
        std::vector<double> newest;
        for (std::size_t k = lo; k < hi; ++k) {
            if (!lines[k].valid) continue;
            for (const auto& [r, d] : lines[k].window) per_round[r].push_back(d);
            newest.push_back(lines[k].newest);
        }
        const double newest_med = newest.empty() ? 0.0 : med(newest);
        for (std::size_t k = lo; k < hi; ++k) {
            const auto& l = lines[k];
            double score = kInf;
            if (l.valid) {
                std::vector<double> ratios;
                for (const auto& [r, d] : l.window) ratios.push_back(norm_ratio(d, med(per_round.at(r))));
                const double w = ratios.empty() ? 0.0 : med(ratios);
                score = std::max(w, norm_ratio(l.newest, newest_med));
            }
            out.push_back({l.round, l.worker, l.logged, score, l.included});
        }
        lo = hi;
    }
    return out;
}

}  // namespace bcfl::oracle
