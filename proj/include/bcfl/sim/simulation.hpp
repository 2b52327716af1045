#pragma once

// Deterministic discrete-event simulation of the blockchain FL loop.
//
// One FL round t: workers download GM_t, train, send the signed update to
// their minersFL node and, in defense modes, the signed Merkle root of their
// history to their minersMON node. minersMON audit a random window of every
// worker's history and publish a reliable set. minersFL aggregate the
// updates of the reliable set, run consensus and commit block t+1 holding
// GM_{t+1}.
//
// Coupled mode runs the monitoring work on the minersFL nodes and makes
// aggregation of round t wait for the round-t reliable set. Decoupled mode
// runs it on minersMON and aggregation only waits when the newest set is
// more than L rounds old.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bcfl/core/crypto.hpp"
#include "bcfl/fl/dataset.hpp"
#include "bcfl/fl/engine.hpp"
#include "bcfl/ledger/ledger.hpp"
#include "bcfl/monitor/monitor.hpp"

namespace bcfl::sim {

class SimulationError : public Error {
public:
    using Error::Error;
};

enum class Scenario { NoAttack, Attack, DefenseCoupled, DefenseDecoupled };

std::string to_string(Scenario s);
/// Accepts no-attack, attack, defense-coupled, defense-decoupled.
Scenario parse_scenario(const std::string& name);
bool has_attack(Scenario s);
bool has_defense(Scenario s);

/// Processing order for events with equal timestamps.
enum class EventKind : std::uint8_t {
    TrainDone,
    RootSubmitted,
    AuditRequest,
    AuditResponse,
    UpdateSent,
    AggregateDone,
    ConsensusDone,
    ModelDownloaded,
    ReliableSetPublished,
};

std::string to_string(EventKind kind);

struct SimEvent {
    double time = 0.0;
    EventKind kind = EventKind::TrainDone;
    NodeId node;
    Round round = 0;
    std::uint64_t seq = 0;
};

/// Total order: time, kind, node, round, then insertion order.
bool operator<(const SimEvent& a, const SimEvent& b);

struct Delay {
    double base_ms = 0.0;
    double jitter_ms = 0.0;
};

/// Message classes. Each sample is keyed by (seed, class, round, node), so
/// a delay does not depend on which miner handles the message or on how
/// many other samples were drawn.
enum class Link : std::uint8_t {
    Download = 1,
    UpdateUpload,
    RootUpload,
    AuditRequest,
    AuditResponse,
    AuditForward,
    Publish,
    Exchange,
    Consensus,
};

struct LatencyModel {
    Delay worker_miner{20.0, 5.0};
    Delay miner_miner{10.0, 3.0};
    Delay consensus{50.0, 10.0};
    double train_ms = 30.0;
    double proof_verify_ms = 2.0;
    double signature_verify_ms = 0.5;
    double aggregate_per_update_ms = 0.2;
    double score_per_worker_ms = 0.1;

    /// base + uniform(-jitter, jitter).
    double sample(std::uint64_t seed, Link link, Round round, std::uint32_t node) const;
    /// Throws SimulationError unless every delay is positive.
    void validate() const;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::size_t workers = 10;
    std::size_t miners = 4;
    std::size_t fl_miners = 2;
    Scenario scenario = Scenario::DefenseDecoupled;
    /// Workers 0..attackers-1 attack. Ignored in no-attack mode.
    std::size_t attackers = 1;
    Round attack_start = 30;
    double attack_magnitude = 10.0;
    monitor::MonitorConfig monitor;
    LatencyModel latency;
    Round rounds = 300;
    std::size_t rows = 246;
    fl::DatasetOptions dataset;
    fl::TrainConfig train;
    /// Convergence threshold as a multiple of the centralized plateau loss.
    double convergence_factor = 1.05;
    std::size_t convergence_streak = 5;
    bool on_chain_model = false;
    /// The last `offline_miners` miners never sign.
    std::size_t offline_miners = 0;
    bool trace = false;

    std::size_t mon_miners() const { return miners - fl_miners; }
    /// Throws SimulationError naming the violated constraint.
    void validate() const;
};

struct RoundMetrics {
    /// Height of the committed block; the row describes GM_round.
    Round round = 0;
    double sim_time_ms = 0.0;
    double e2e_delay_ms = 0.0;
    double loss = 0.0;
    double accuracy = 0.0;
    std::size_t reliable_set_size = 0;
    bool is_protected = false;
    /// Commit of the previous block to updates verified and aggregated.
    double fl_path_ms = 0.0;
    /// Time aggregation waited for a fresh enough reliable set.
    double gate_wait_ms = 0.0;
    /// Audit start to reliable-set publication for the round the
    /// aggregation trained on; 0 when that round was not audited.
    double monitor_path_ms = 0.0;
};

struct RunMetrics {
    std::vector<RoundMetrics> rounds;
    double plateau_loss = 0.0;
    double epsilon = 0.0;
    std::optional<Round> convergence_round;
    std::optional<double> convergence_time_ms;
    /// Monitoring round of the first reliable-set publication.
    std::optional<Round> t_x_round;
    /// Busy time summed over miners of each role.
    double fl_busy_ms = 0.0;
    double mon_busy_ms = 0.0;
    /// Busy time by operation type, wherever it ran.
    double fl_work_ms = 0.0;
    double monitor_work_ms = 0.0;
    std::vector<double> miner_busy_ms;
    double mean_e2e_delay_ms = 0.0;
    std::size_t ledger_bytes = 0;

    double fl_busy_per_round_ms() const;
    double mon_busy_per_round_ms() const;
    double total_busy_ms() const { return fl_busy_ms + mon_busy_ms; }
};

/// First round r such that rounds r..r+streak-1 all have loss <= epsilon.
std::optional<std::size_t> convergence_index(const std::vector<RoundMetrics>& rounds, double epsilon,
                                             std::size_t streak);

struct RunResult {
    ScenarioConfig config;
    RunMetrics metrics;
    fl::GeneratedData data;
    ModelParams initial_model;
    ledger::Chain chain;
    ledger::ModelStore store;
    KeyDirectory keys;
    std::vector<monitor::AuditLogEntry> audits;
    std::vector<monitor::ReliableSet> published;
    std::vector<SimEvent> trace;
};

/// Runs the whole round budget (no early stop) and returns metrics and
/// artifacts. Throws SimulationError on invalid configs or aborted rounds,
/// and ledger::QuorumUnreachable when too many miners are offline.
RunResult run_scenario(const ScenarioConfig& cfg);

/// Runs independent configs on up to `threads` threads; results keep the
/// input order.
std::vector<RunResult> run_many(const std::vector<ScenarioConfig>& configs, unsigned threads = 0);

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics);
void write_summary_json(std::ostream& out, const RunResult& result);
void write_trace_jsonl(std::ostream& out, const std::vector<SimEvent>& trace);

/// Writes metrics.csv, summary.json, chain.jsonl, models.jsonl, audit.jsonl,
/// dataset.csv and, when traced, trace.jsonl into `dir` (created if needed).
void write_outputs(const std::string& dir, const RunResult& result);

struct ScalingPoint {
    std::size_t workers = 0;
    double mon_busy_per_round_ms = 0.0;
    double fl_busy_per_round_ms = 0.0;
    double fl_delay_ms = 0.0;
};

/// Mean per-round minersMON busy time and minersFL round delay for each
/// worker count, averaged over seeds.
std::vector<ScalingPoint> scaling_sweep(const ScenarioConfig& base, const std::vector<std::size_t>& worker_counts,
                                        const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

struct AttackerPoint {
    std::size_t attackers = 0;
    Scenario scenario = Scenario::DefenseDecoupled;
    std::vector<std::optional<double>> convergence_times_ms;
    /// Mean over seeds; empty if any seed failed to converge.
    std::optional<double> mean_convergence_ms;
};

std::vector<AttackerPoint> attacker_sweep(const ScenarioConfig& base, const std::vector<std::size_t>& attacker_counts,
                                          const std::vector<std::uint64_t>& seeds,
                                          const std::vector<Scenario>& scenarios, unsigned threads = 0);

void write_scaling_csv(std::ostream& out, const std::vector<ScalingPoint>& points);
void write_attacker_csv(std::ostream& out, const std::vector<AttackerPoint>& points,
                        const std::vector<std::uint64_t>& seeds);

}  // namespace bcfl::sim
