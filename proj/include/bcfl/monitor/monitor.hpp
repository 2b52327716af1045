#pragma once

// minersMON: random-window audits of committed worker histories, behavior
// scoring and the reliable set handed to minersFL.

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bcfl/core/random.hpp"
#include "bcfl/core/types.hpp"
#include "bcfl/merkle/merkle_tree.hpp"

namespace bcfl::monitor {

class MonitorError : public Error {
public:
    using Error::Error;
};

inline constexpr double kInvalidScore = std::numeric_limits<double>::infinity();

struct MonitorConfig {
    /// Audit window size z.
    std::size_t window = 5;
    /// Inclusion threshold tau.
    double threshold = 2.0;
    /// Maximum FL-round lag L of a usable reliable set.
    Round max_lag = 2;
    /// Audit every `cadence` rounds.
    Round cadence = 1;

    void validate() const;
};

/// First round whose audit can publish: history must hold z records and
/// the round must be on the cadence.
Round protection_onset(const MonitorConfig& cfg);
bool is_monitoring_round(Round round, const MonitorConfig& cfg);

/// Window of z consecutive rounds with start uniform in [0, history - z].
/// Shorter histories yield the whole history. history must be >= 1.
merkle::Window draw_window(Rng& rng, std::size_t history, std::size_t z);

using OpenedRecord = std::pair<merkle::UpdateRecord, merkle::MerklePath>;

/// What a worker returns for an audit request.
struct AuditResponse {
    bool responded = false;
    std::vector<OpenedRecord> window_records;
    /// The record behind the worker's latest root.
    std::optional<OpenedRecord> newest;
};

/// Honest response built from the worker's own tree and records.
AuditResponse respond(const merkle::MerkleTree& tree, const std::vector<merkle::UpdateRecord>& records,
                      const merkle::Window& window);

/// H_{i,z} plus the freshest committed record.
struct AuditResult {
    WorkerId worker;
    merkle::Window window;
    std::vector<merkle::UpdateRecord> records;
    std::optional<merkle::UpdateRecord> newest;
    bool responded = false;
    bool proofs_valid = false;
};

/// Checks every opened record against the worker's committed root, which
/// covers `committed_count` leaves. Valid iff the worker answered, the
/// records are exactly the window's consecutive rounds plus the newest
/// round, belong to `worker`, and every path verifies.
AuditResult check_audit(WorkerId worker, const merkle::Window& window, const Digest& committed_root,
                        std::size_t committed_count, const AuditResponse& response);

/// Resolves a record's global model: given the record's round and the GM
/// digest it claims, returns the committed model, or nullopt if the digest
/// is not the one committed for that round.
using GmResolver = std::function<std::optional<ModelParams>(Round, const Digest&)>;

struct BehaviorScore {
    WorkerId worker;
    /// Non-negative; kInvalidScore for failed audits.
    double score = kInvalidScore;
    Round evaluated_at = 0;
    double window_score = kInvalidScore;
    double newest_score = kInvalidScore;
};

/// Scores a whole audit population for one monitoring round.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::string name() const = 0;
    virtual std::vector<BehaviorScore> score(const std::vector<AuditResult>& audits, const GmResolver& resolve,
                                             Round round) const = 0;
};

/// ||LM_r - GM_r|| divided by the population median of that distance at
/// round r. The score is the larger of the window median of this ratio and
/// the ratio of the newest record. A zero population median gives ratio 1
/// for a zero distance and +inf otherwise.
class NormalizedDistanceDetector final : public Detector {
public:
    std::string name() const override { return "normalized-distance"; }
    std::vector<BehaviorScore> score(const std::vector<AuditResult>& audits, const GmResolver& resolve,
                                     Round round) const override;
};

double l2_distance(const ModelParams& a, const ModelParams& b);
/// Median of a non-empty list (mean of the middle two for even sizes).
double median(std::vector<double> values);

struct ReliableSet {
    Round round = 0;
    std::set<WorkerId> workers;
    bool is_protected = false;
};

/// Workers with score <= tau; if fewer than two pass, the two lowest finite
/// scores (ties by worker id). Throws MonitorError when no score is finite.
ReliableSet publish_reliable_set(const std::vector<BehaviorScore>& scores, double tau, Round round);

/// Unprotected full set used before the first publication.
ReliableSet full_set(std::size_t n_workers, Round round);

/// True iff current_fl_round - set.round <= max_lag.
bool sync_check(const ReliableSet& set, Round current_fl_round, Round max_lag);

/// Latches the protected flag at the first publication.
class ProtectionTracker {
public:
    void on_publication(Round round) {
        if (!onset_) onset_ = round;
    }
    bool is_protected() const { return onset_.has_value(); }
    std::optional<Round> onset() const { return onset_; }

private:
    std::optional<Round> onset_;
};

/// One line of the audit log.
struct AuditLogEntry {
    Round round = 0;
    AuditResult audit;
    BehaviorScore score;
    bool included = false;
};

/// JSON-lines: round, worker, window, responded, proofs_valid, score
/// components, included, and each revealed record (round, GM digest, LM
/// weights). Infinite scores are written as null.
void write_audit_jsonl(std::ostream& out, const std::vector<AuditLogEntry>& entries);

}  // namespace bcfl::monitor
