#include "bcfl/monitor/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "json.hpp"

namespace bcfl::monitor {

void MonitorConfig::validate() const {
    if (window == 0) throw MonitorError("window size must be positive");
    if (!(threshold > 0.0)) throw MonitorError("threshold must be positive");
    if (cadence == 0) throw MonitorError("audit cadence must be positive");
}

Round protection_onset(const MonitorConfig& cfg) {
    Round t = static_cast<Round>(cfg.window - 1);
    while (t % cfg.cadence != 0) ++t;
    return t;
}

bool is_monitoring_round(Round round, const MonitorConfig& cfg) {
    return round + 1 >= cfg.window && round % cfg.cadence == 0;
}

merkle::Window draw_window(Rng& rng, std::size_t history, std::size_t z) {
    if (history == 0) throw MonitorError("cannot audit an empty history");
    if (z == 0) throw MonitorError("window size must be positive");
    if (history <= z) return {0, static_cast<Round>(history - 1)};
    auto start = static_cast<Round>(rng.below(history - z + 1));
    return {start, static_cast<Round>(start + z - 1)};
}

AuditResponse respond(const merkle::MerkleTree& tree, const std::vector<merkle::UpdateRecord>& records,
                      const merkle::Window& window) {
    AuditResponse r;
    r.responded = true;
    r.window_records = merkle::open_window(tree, records, window);
    const std::size_t last = tree.size() - 1;
    r.newest = OpenedRecord{records[last], tree.prove(last)};
    return r;
}

namespace {

bool opened_ok(const OpenedRecord& opened, WorkerId worker, Round round, const Digest& root, std::size_t count) {
    const auto& [record, path] = opened;
    return record.worker == worker && record.round == round && path.leaf_index == round &&
           path.leaf_count == count && merkle::verify(root, merkle::leaf_digest(record), path);
}

}  // namespace

AuditResult check_audit(WorkerId worker, const merkle::Window& window, const Digest& committed_root,
                        std::size_t committed_count, const AuditResponse& response) {
    AuditResult result;
    result.worker = worker;
    result.window = window;
    result.responded = response.responded;
    if (!response.responded) return result;

    for (const auto& opened : response.window_records) result.records.push_back(opened.first);
    if (response.newest) result.newest = response.newest->first;

    bool ok = window.start <= window.end && window.end < committed_count &&
              response.window_records.size() == window.length() && response.newest.has_value();
    for (std::size_t k = 0; ok && k < response.window_records.size(); ++k) {
        ok = opened_ok(response.window_records[k], worker, static_cast<Round>(window.start + k), committed_root,
                       committed_count);
    }
    if (ok) {
        ok = opened_ok(*response.newest, worker, static_cast<Round>(committed_count - 1), committed_root,
                       committed_count);
    }
    result.proofs_valid = ok;
    return result;
}

double l2_distance(const ModelParams& a, const ModelParams& b) {
    if (a.dimension() != b.dimension()) return kInvalidScore;
    double s = 0.0;
    for (std::size_t j = 0; j < a.dimension(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

double median(std::vector<double> values) {
    if (values.empty()) throw MonitorError("median of nothing");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

double ratio(double distance, double population_median) {
    if (population_median > 0.0) return distance / population_median;
    return distance == 0.0 ? 1.0 : kInvalidScore;
}

struct Deviations {
    std::vector<std::pair<Round, double>> window;
    double newest = 0.0;
    bool ok = false;
};

}  // namespace

std::vector<BehaviorScore> NormalizedDistanceDetector::score(const std::vector<AuditResult>& audits,
                                                             const GmResolver& resolve, Round round) const {
    std::vector<Deviations> devs(audits.size());
    std::map<Round, std::vector<double>> by_round;
    std::vector<double> newest_pop;

    auto distance_of = [&](const merkle::UpdateRecord& rec) -> std::optional<double> {
        auto gm = resolve(rec.round, rec.global_model_digest);
        if (!gm) return std::nullopt;
        double d = l2_distance(rec.local_model, *gm);
        if (!std::isfinite(d)) return std::nullopt;
        return d;
    };

    for (std::size_t i = 0; i < audits.size(); ++i) {
        const auto& a = audits[i];
        if (!a.proofs_valid || !a.newest) continue;
        auto& dv = devs[i];
        dv.ok = true;
        for (const auto& rec : a.records) {
            auto d = distance_of(rec);
            if (!d) {
                dv.ok = false;
                break;
            }
            dv.window.emplace_back(rec.round, *d);
        }
        if (!dv.ok) continue;
        auto d = distance_of(*a.newest);
        if (!d) {
            dv.ok = false;
            continue;
        }
        dv.newest = *d;
        for (const auto& [r, v] : dv.window) by_round[r].push_back(v);
        newest_pop.push_back(dv.newest);
    }

    std::map<Round, double> medians;
    for (auto& [r, values] : by_round) medians[r] = median(values);
    const double newest_median = newest_pop.empty() ? 0.0 : median(newest_pop);

    std::vector<BehaviorScore> out;
    out.reserve(audits.size());
    for (std::size_t i = 0; i < audits.size(); ++i) {
        BehaviorScore s;
        s.worker = audits[i].worker;
        s.evaluated_at = round;
        const auto& dv = devs[i];
        if (dv.ok) {
            std::vector<double> ratios;
            for (const auto& [r, v] : dv.window) ratios.push_back(ratio(v, medians.at(r)));
            s.window_score = ratios.empty() ? 0.0 : median(ratios);
            s.newest_score = ratio(dv.newest, newest_median);
            s.score = std::max(s.window_score, s.newest_score);
        }
        out.push_back(s);
    }
    return out;
}

ReliableSet publish_reliable_set(const std::vector<BehaviorScore>& scores, double tau, Round round) {
    std::vector<const BehaviorScore*> finite;
    for (const auto& s : scores) {
        if (std::isfinite(s.score)) finite.push_back(&s);
    }
    if (finite.empty()) throw MonitorError("no worker passed its audit in round " + std::to_string(round));

    ReliableSet set;
    set.round = round;
    set.is_protected = true;
    for (const auto* s : finite) {
        if (s->score <= tau) set.workers.insert(s->worker);
    }
    if (set.workers.size() < 2) {
        std::stable_sort(finite.begin(), finite.end(), [](const BehaviorScore* a, const BehaviorScore* b) {
            return a->score != b->score ? a->score < b->score : a->worker < b->worker;
        });
        for (std::size_t k = 0; k < finite.size() && set.workers.size() < 2; ++k) set.workers.insert(finite[k]->worker);
    }
    return set;
}

ReliableSet full_set(std::size_t n_workers, Round round) {
    ReliableSet set;
    set.round = round;
    for (std::size_t i = 0; i < n_workers; ++i) set.workers.insert(WorkerId{static_cast<std::uint32_t>(i)});
    return set;
}

bool sync_check(const ReliableSet& set, Round current_fl_round, Round max_lag) {
    if (set.round >= current_fl_round) return true;
    return current_fl_round - set.round <= max_lag;
}

namespace {

nlohmann::ordered_json score_json(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

nlohmann::ordered_json record_json(const merkle::UpdateRecord& rec) {
    nlohmann::ordered_json j;
    j["round"] = rec.round;
    j["gm_digest"] = rec.global_model_digest.hex();
    j["lm"] = std::vector<double>(rec.local_model.weights().begin(), rec.local_model.weights().end());
    return j;
}

}  // namespace

void write_audit_jsonl(std::ostream& out, const std::vector<AuditLogEntry>& entries) {
    for (const auto& e : entries) {
        nlohmann::ordered_json j;
        j["round"] = e.round;
        j["worker"] = e.audit.worker.value;
        j["window"] = {e.audit.window.start, e.audit.window.end};
        j["responded"] = e.audit.responded;
        j["proofs_valid"] = e.audit.proofs_valid;
        j["score"] = score_json(e.score.score);
        j["window_score"] = score_json(e.score.window_score);
        j["newest_score"] = score_json(e.score.newest_score);
        j["included"] = e.included;
        auto records = nlohmann::ordered_json::array();
        for (const auto& rec : e.audit.records) records.push_back(record_json(rec));
        j["records"] = records;
        j["newest"] = e.audit.newest ? record_json(*e.audit.newest) : nlohmann::ordered_json(nullptr);
        out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict) << '\n';
    }
}

}  // namespace bcfl::monitor
