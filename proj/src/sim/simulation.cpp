#include "bcfl/sim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "bcfl/attack/attack.hpp"
#include "bcfl/core/random.hpp"
#include "bcfl/merkle/merkle_tree.hpp"

namespace bcfl::sim {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::NoAttack:
            return "no-attack";
        case Scenario::Attack:
            return "attack";
        case Scenario::DefenseCoupled:
            return "defense-coupled";
        case Scenario::DefenseDecoupled:
            return "defense-decoupled";
    }
    return "unknown";
}

Scenario parse_scenario(const std::string& name) {
    for (auto s : {Scenario::NoAttack, Scenario::Attack, Scenario::DefenseCoupled, Scenario::DefenseDecoupled}) {
        if (to_string(s) == name) return s;
    }
    throw SimulationError("unknown mode '" + name + "'");
}

bool has_attack(Scenario s) { return s != Scenario::NoAttack; }
bool has_defense(Scenario s) { return s == Scenario::DefenseCoupled || s == Scenario::DefenseDecoupled; }

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::TrainDone:
            return "TrainDone";
        case EventKind::RootSubmitted:
            return "RootSubmitted";
        case EventKind::AuditRequest:
            return "AuditRequest";
        case EventKind::AuditResponse:
            return "AuditResponse";
        case EventKind::UpdateSent:
            return "UpdateSent";
        case EventKind::AggregateDone:
            return "AggregateDone";
        case EventKind::ConsensusDone:
            return "ConsensusDone";
        case EventKind::ModelDownloaded:
            return "ModelDownloaded";
        case EventKind::ReliableSetPublished:
            return "ReliableSetPublished";
    }
    return "unknown";
}

bool operator<(const SimEvent& a, const SimEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.node != b.node) return a.node < b.node;
    if (a.round != b.round) return a.round < b.round;
    return a.seq < b.seq;
}

double LatencyModel::sample(std::uint64_t seed, Link link, Round round, std::uint32_t node) const {
    const Delay* d = nullptr;
    switch (link) {
        case Link::Download:
        case Link::UpdateUpload:
        case Link::RootUpload:
        case Link::AuditRequest:
        case Link::AuditResponse:
            d = &worker_miner;
            break;
        case Link::AuditForward:
        case Link::Publish:
        case Link::Exchange:
            d = &miner_miner;
            break;
        case Link::Consensus:
            d = &consensus;
            break;
    }
    const double u = unit_interval(mix_seed({seed, static_cast<std::uint64_t>(Stream::Latency),
                                             static_cast<std::uint64_t>(link), round, node}));
    return d->base_ms + d->jitter_ms * (2.0 * u - 1.0);
}

void LatencyModel::validate() const {
    for (const auto* d : {&worker_miner, &miner_miner, &consensus}) {
        if (!(d->jitter_ms >= 0.0) || !(d->base_ms > d->jitter_ms))
            throw SimulationError("link delay base must exceed its jitter so every delay is positive");
    }
    for (double v : {train_ms, proof_verify_ms, signature_verify_ms, aggregate_per_update_ms, score_per_worker_ms}) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw SimulationError("compute costs must be non-negative");
    }
}

void ScenarioConfig::validate() const {
    if (workers < 2) throw SimulationError("workers must be at least 2");
    if (rows < workers) throw SimulationError("rows must be at least workers");
    if (miners < 1) throw SimulationError("miners must be at least 1");
    if (fl_miners < 1 || fl_miners > miners) throw SimulationError("fl_miners must be in [1, miners]");
    if (has_defense(scenario) && mon_miners() < 1)
        throw SimulationError("defense modes need at least one monitoring miner (fl_miners < miners)");
    if (has_attack(scenario)) {
        if (attackers >= workers) throw SimulationError("attackers must be fewer than workers");
        if (!(attack_magnitude > 0.0)) throw SimulationError("attack magnitude must be positive");
    }
    if (offline_miners > miners) throw SimulationError("offline_miners exceeds miners");
    if (rounds < 1) throw SimulationError("rounds must be at least 1");
    if (!(convergence_factor > 0.0)) throw SimulationError("convergence factor must be positive");
    if (convergence_streak < 1) throw SimulationError("convergence streak must be at least 1");
    monitor.validate();
    latency.validate();
    train.validate();
}

double RunMetrics::fl_busy_per_round_ms() const {
    return rounds.empty() ? 0.0 : fl_busy_ms / static_cast<double>(rounds.size());
}

double RunMetrics::mon_busy_per_round_ms() const {
    return rounds.empty() ? 0.0 : mon_busy_ms / static_cast<double>(rounds.size());
}

std::optional<std::size_t> convergence_index(const std::vector<RoundMetrics>& rounds, double epsilon,
                                             std::size_t streak) {
    std::size_t run = 0;
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        run = rounds[i].loss <= epsilon ? run + 1 : 0;
        if (run == streak) return i + 1 - streak;
    }
    return std::nullopt;
}

namespace {

Bytes update_signing_payload(const merkle::UpdateRecord& record) {
    ByteWriter w;
    w.text("bcfl/update/v1").raw(record.serialize());
    return std::move(w).take();
}

struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const { return b < a; }
};

class Simulation {
public:
    explicit Simulation(const ScenarioConfig& cfg) : cfg_(cfg), monitor_rng_(Rng::stream(cfg.seed, Stream::Monitor)) {
        out_.config = cfg;
    }

    RunResult run() {
        setup();
        while (!queue_.empty()) {
            SimEvent ev = queue_.top();
            queue_.pop();
            now_ = ev.time;
            if (cfg_.trace) out_.trace.push_back(ev);
            dispatch(ev);
        }
        finish();
        return std::move(out_);
    }

private:
    struct WorkerState {
        merkle::MerkleTree tree;
        std::vector<merkle::UpdateRecord> records;
        std::vector<Signature> update_sigs;
        std::vector<Digest> roots;
        std::vector<Signature> root_sigs;
        std::optional<Round> downloaded;
    };

    struct FlRound {
        std::size_t received = 0;
        double verified_at = 0.0;
        std::vector<std::optional<fl::WeightedUpdate>> updates;
        double ready_at = 0.0;
        bool waiting = false;
        bool done = false;
        double gate_wait = 0.0;
        std::size_t set_size = 0;
        bool is_protected = false;
        double monitor_path = 0.0;
    };

    struct MonRound {
        std::size_t roots = 0;
        double roots_done = 0.0;
        merkle::Window window;
        std::vector<std::optional<std::pair<Digest, std::size_t>>> committed;
        std::vector<monitor::AuditResponse> responses;
        std::vector<monitor::AuditResult> results;
        std::size_t checked = 0;
        double results_at = 0.0;
        double audit_start = 0.0;
        double published_at = 0.0;
        monitor::ReliableSet set;
    };

    // ---- setup -----------------------------------------------------------

    void setup() {
        cfg_.validate();
        out_.data = fl::generate_dataset(cfg_.seed, cfg_.rows, cfg_.workers, cfg_.dataset);
        auto plateau = fl::train_to_plateau(out_.data.full.rows);
        out_.metrics.plateau_loss = plateau.loss;
        out_.metrics.epsilon = cfg_.convergence_factor * plateau.loss;

        attack_.attackers = has_attack(cfg_.scenario) ? attack::first_workers(cfg_.attackers) : std::set<WorkerId>{};
        attack_.start = cfg_.attack_start;
        attack_.magnitude = cfg_.attack_magnitude;

        for (std::size_t i = 0; i < cfg_.workers; ++i) {
            auto id = NodeId::worker(WorkerId{static_cast<std::uint32_t>(i)});
            worker_keys_.push_back(KeyPair::derive(cfg_.seed, id));
            out_.keys.add(id, worker_keys_.back().public_key());
        }
        for (std::size_t m = 0; m < cfg_.miners; ++m) {
            auto id = NodeId::miner(miner_id(m));
            miner_keys_.push_back(KeyPair::derive(cfg_.seed, id));
            out_.keys.add(id, miner_keys_.back().public_key());
        }
        for (std::size_t m = 0; m < cfg_.miners; ++m) {
            signers_.push_back({miner_id(m), &miner_keys_[m], m + cfg_.offline_miners < cfg_.miners});
        }
        busy_until_.assign(cfg_.miners, 0.0);
        out_.metrics.miner_busy_ms.assign(cfg_.miners, 0.0);
        workers_.resize(cfg_.workers);

        out_.initial_model = fl::init_model(cfg_.seed);
        gms_.push_back(out_.initial_model);
        out_.store.put(out_.initial_model);
        out_.chain = ledger::Chain(ledger::genesis(out_.initial_model));
        pending_.emplace(1, out_.chain.tip().digest());
        commit_times_.push_back(0.0);

        for (std::size_t i = 0; i < cfg_.workers; ++i) {
            schedule(delay(Link::Download, 0, i), EventKind::ModelDownloaded, worker_node(i), 0);
        }
    }

    MinerId miner_id(std::size_t m) const {
        return {static_cast<std::uint32_t>(m), m < cfg_.fl_miners ? MinerRole::FL : MinerRole::MON};
    }

    static NodeId worker_node(std::size_t i) { return NodeId::worker(WorkerId{static_cast<std::uint32_t>(i)}); }
    NodeId miner_node(std::size_t m) const { return NodeId::miner(miner_id(m)); }

    bool coupled() const { return cfg_.scenario == Scenario::DefenseCoupled; }
    std::size_t fl_of(std::size_t worker) const { return worker % cfg_.fl_miners; }
    std::size_t mon_of(std::size_t worker) const {
        return coupled() ? worker % cfg_.fl_miners : cfg_.fl_miners + worker % cfg_.mon_miners();
    }
    std::size_t lead_fl() const { return 0; }
    std::size_t lead_mon() const { return coupled() ? 0 : cfg_.fl_miners; }

    double delay(Link link, Round round, std::size_t node) const {
        return cfg_.latency.sample(cfg_.seed, link, round, static_cast<std::uint32_t>(node));
    }

    void schedule(double at, EventKind kind, NodeId node, Round round) {
        if (at < now_) throw SimulationError("event scheduled in the past");
        queue_.push(SimEvent{at, kind, node, round, seq_++});
    }

    /// Serial work on one miner; returns the completion time.
    double occupy(std::size_t miner, double ready, double cost, bool monitor_work) {
        const double start = std::max(ready, busy_until_[miner]);
        busy_until_[miner] = start + cost;
        out_.metrics.miner_busy_ms[miner] += cost;
        (monitor_work ? out_.metrics.monitor_work_ms : out_.metrics.fl_work_ms) += cost;
        return start + cost;
    }

    FlRound& fl_round(Round t) {
        auto& r = fl_[t];
        if (r.updates.empty()) r.updates.resize(cfg_.workers);
        return r;
    }

    MonRound& mon_round(Round t) {
        auto& r = mon_[t];
        if (r.committed.empty()) {
            r.committed.resize(cfg_.workers);
            r.responses.resize(cfg_.workers);
            r.results.resize(cfg_.workers);
        }
        return r;
    }

    // ---- dispatch --------------------------------------------------------

    void dispatch(const SimEvent& ev) {
        switch (ev.kind) {
            case EventKind::ModelDownloaded:
                on_downloaded(ev.node.index, ev.round);
                break;
            case EventKind::TrainDone:
                on_trained(ev.node.index, ev.round);
                break;
            case EventKind::UpdateSent:
                on_update(ev.node.index, ev.round);
                break;
            case EventKind::RootSubmitted:
                on_root(ev.node.index, ev.round);
                break;
            case EventKind::AuditRequest:
                on_audit_request(ev.node.index, ev.round);
                break;
            case EventKind::AuditResponse:
                on_audit_response(ev.node.index, ev.round);
                break;
            case EventKind::AggregateDone:
                on_aggregate_ready(ev.round);
                break;
            case EventKind::ReliableSetPublished:
                on_published(ev.round);
                break;
            case EventKind::ConsensusDone:
                on_consensus(ev.round);
                break;
        }
    }

    // ---- workers ---------------------------------------------------------

    void on_downloaded(std::size_t i, Round t) {
        workers_[i].downloaded = t;
        schedule(now_ + cfg_.latency.train_ms, EventKind::TrainDone, worker_node(i), t);
    }

    void on_trained(std::size_t i, Round t) {
        auto& w = workers_[i];
        if (w.downloaded != t) throw SimulationError("worker trained before downloading the global model");
        const WorkerId id{static_cast<std::uint32_t>(i)};
        const auto& gm = gms_.at(t);
        auto honest = fl::local_train(gm, out_.data.shards[i].rows, cfg_.train);
        auto lm = attack::maybe_poison(id, t, honest, attack_, cfg_.seed);

        merkle::UpdateRecord record{id, t, std::move(lm), ledger::model_digest(gm)};
        w.tree.append(record);
        w.records.push_back(record);
        w.update_sigs.push_back(worker_keys_[i].sign(update_signing_payload(record)));
        w.roots.push_back(w.tree.root());
        w.root_sigs.push_back(worker_keys_[i].sign(ledger::root_signing_payload(id, t, w.roots.back())));

        schedule(now_ + delay(Link::UpdateUpload, t, i), EventKind::UpdateSent, worker_node(i), t);
        if (has_defense(cfg_.scenario)) {
            schedule(now_ + delay(Link::RootUpload, t, i), EventKind::RootSubmitted, worker_node(i), t);
        }
    }

    void on_audit_request(std::size_t i, Round t) {
        auto& w = workers_[i];
        auto& mr = mon_round(t);
        const std::size_t count = static_cast<std::size_t>(t) + 1;
        if (w.tree.size() == count) {
            mr.responses[i] = monitor::respond(w.tree, w.records, mr.window);
        } else {
            mr.responses[i] = monitor::respond(w.tree.prefix(count), w.records, mr.window);
        }
        schedule(now_ + delay(Link::AuditResponse, t, i), EventKind::AuditResponse, worker_node(i), t);
    }

    // ---- minersFL --------------------------------------------------------

    void on_update(std::size_t i, Round t) {
        auto& fr = fl_round(t);
        const double done = occupy(fl_of(i), now_, cfg_.latency.signature_verify_ms, false);
        const auto& record = workers_[i].records.at(t);
        if (out_.keys.verify(update_signing_payload(record), workers_[i].update_sigs.at(t))) {
            fr.updates[i] = fl::WeightedUpdate{record.worker, record.local_model, out_.data.shards[i].rows.size()};
        }
        fr.verified_at = std::max(fr.verified_at, done);
        if (++fr.received == cfg_.workers) {
            const double cost = cfg_.latency.aggregate_per_update_ms * static_cast<double>(fr.received);
            const double ready = occupy(lead_fl(), fr.verified_at, cost, false);
            schedule(ready, EventKind::AggregateDone, miner_node(lead_fl()), t);
        }
    }

    void on_aggregate_ready(Round t) {
        auto& fr = fl_round(t);
        fr.ready_at = now_;
        try_proceed(t);
    }

    /// Latest monitoring round at or before t.
    std::optional<Round> required_audit(Round t) const {
        const Round x = monitor::protection_onset(cfg_.monitor);
        if (t < x) return std::nullopt;
        return t - (t - x) % cfg_.monitor.cadence;
    }

    void try_proceed(Round t) {
        auto& fr = fl_round(t);
        if (fr.done) return;
        const monitor::ReliableSet* use = nullptr;
        bool pass = true;
        if (has_defense(cfg_.scenario) && t >= monitor::protection_onset(cfg_.monitor)) {
            if (coupled()) {
                pass = latest_set_ && latest_set_->round >= *required_audit(t);
            } else {
                pass = latest_set_ && monitor::sync_check(*latest_set_, t, cfg_.monitor.max_lag);
            }
            if (pass) use = &*latest_set_;
        }
        if (!pass) {
            fr.waiting = true;
            return;
        }
        fr.waiting = false;
        fr.done = true;
        fr.gate_wait = now_ - fr.ready_at;

        std::vector<fl::WeightedUpdate> selected;
        for (std::size_t i = 0; i < cfg_.workers; ++i) {
            if (!fr.updates[i]) continue;
            if (use && use->workers.count(WorkerId{static_cast<std::uint32_t>(i)}) == 0) continue;
            selected.push_back(*fr.updates[i]);
        }
        fr.set_size = use ? use->workers.size() : cfg_.workers;
        fr.is_protected = use != nullptr;
        if (use) fr.monitor_path = mon_.at(use->round).published_at - mon_.at(use->round).audit_start;
        if (selected.empty()) throw SimulationError("round " + std::to_string(t) + " has no usable update");

        fl::AggregateResult agg;
        try {
            agg = fl::aggregate(selected);
        } catch (const Error& e) {
            throw SimulationError("aggregation of round " + std::to_string(t) + " failed: " + e.what());
        }
        const auto digest = out_.store.put(agg.model);
        gms_.push_back(std::move(agg.model));
        pending_->set_global_model(digest);
        if (cfg_.on_chain_model) pending_->set_model_payload(gms_.back());

        const double at = now_ + delay(Link::Exchange, t, 0) + delay(Link::Consensus, t, 0);
        schedule(at, EventKind::ConsensusDone, miner_node(lead_fl()), t);
    }

    void on_consensus(Round t) {
        pending_->set_timestamp(now_);
        auto block = ledger::propose_and_commit(*pending_, signers_);
        out_.chain.append(std::move(block));
        pending_.emplace(static_cast<Round>(out_.chain.size()), out_.chain.tip().digest());

        const auto& fr = fl_round(t);
        const auto& gm = gms_.at(t + 1);
        auto ev = fl::evaluate(gm, out_.data.full.rows);
        RoundMetrics row;
        row.round = t + 1;
        row.sim_time_ms = now_;
        row.e2e_delay_ms = now_ - commit_times_.back();
        row.loss = ev.loss;
        row.accuracy = ev.accuracy;
        row.reliable_set_size = fr.set_size;
        row.is_protected = fr.is_protected;
        row.fl_path_ms = fr.ready_at - commit_times_.back();
        row.gate_wait_ms = fr.gate_wait;
        row.monitor_path_ms = fr.monitor_path;
        out_.metrics.rounds.push_back(row);
        commit_times_.push_back(now_);

        fl_.erase(t);
        if (t + 1 < cfg_.rounds) {
            for (std::size_t i = 0; i < cfg_.workers; ++i) {
                schedule(now_ + delay(Link::Download, t + 1, i), EventKind::ModelDownloaded, worker_node(i), t + 1);
            }
        }
    }

    // ---- minersMON -------------------------------------------------------

    void on_root(std::size_t i, Round t) {
        auto& mr = mon_round(t);
        const double done = occupy(mon_of(i), now_, cfg_.latency.signature_verify_ms, true);
        const WorkerId id{static_cast<std::uint32_t>(i)};
        const std::size_t count = static_cast<std::size_t>(t) + 1;
        const auto& root = workers_[i].roots.at(t);
        const auto status =
            pending_->record_root(id, t, root, workers_[i].root_sigs.at(t), worker_keys_[i].public_key());
        if (status == ledger::RootStatus::Accepted) mr.committed[i] = std::make_pair(root, count);
        mr.roots_done = std::max(mr.roots_done, done);

        if (++mr.roots < cfg_.workers) return;
        if (!monitor::is_monitoring_round(t, cfg_.monitor)) {
            mon_.erase(t);
            return;
        }
        mr.window = monitor::draw_window(monitor_rng_, count, cfg_.monitor.window);
        mr.audit_start = mr.roots_done;
        for (std::size_t w = 0; w < cfg_.workers; ++w) {
            schedule(mr.audit_start + delay(Link::AuditRequest, t, w), EventKind::AuditRequest, worker_node(w), t);
        }
    }

    void on_audit_response(std::size_t i, Round t) {
        auto& mr = mon_round(t);
        const WorkerId id{static_cast<std::uint32_t>(i)};
        const double proofs = static_cast<double>(mr.window.length() + 1);
        const double done = occupy(mon_of(i), now_, cfg_.latency.proof_verify_ms * proofs, true);
        if (mr.committed[i]) {
            mr.results[i] = monitor::check_audit(id, mr.window, mr.committed[i]->first, mr.committed[i]->second,
                                                 mr.responses[i]);
        } else {
            mr.results[i] = monitor::AuditResult{id, mr.window, {}, std::nullopt, mr.responses[i].responded, false};
        }
        mr.results_at = std::max(mr.results_at, done + delay(Link::AuditForward, t, i));
        if (++mr.checked < cfg_.workers) return;

        const double scored = occupy(lead_mon(), mr.results_at,
                                     cfg_.latency.score_per_worker_ms * static_cast<double>(cfg_.workers), true);
        auto resolve = [this](Round r, const Digest& d) -> std::optional<ModelParams> {
            if (r >= out_.chain.size() || out_.chain.global_model_at(r) != d) return std::nullopt;
            return out_.store.get(d);
        };
        auto scores = detector_.score(mr.results, resolve, t);
        mr.set = monitor::publish_reliable_set(scores, cfg_.monitor.threshold, t);
        for (std::size_t w = 0; w < cfg_.workers; ++w) {
            out_.audits.push_back({t, mr.results[w], scores[w], mr.set.workers.count(scores[w].worker) != 0});
        }
        mr.responses.clear();
        mr.results.clear();
        mr.committed.clear();
        mr.published_at = scored + delay(Link::Publish, t, 0);
        schedule(mr.published_at, EventKind::ReliableSetPublished, miner_node(lead_mon()), t);
    }

    void on_published(Round t) {
        const auto& set = mon_.at(t).set;
        out_.published.push_back(set);
        tracker_.on_publication(t);
        if (!latest_set_ || set.round > latest_set_->round) latest_set_ = set;
        for (auto& [round, fr] : fl_) {
            if (fr.waiting) try_proceed(round);
        }
    }

    // ---- wrap-up ---------------------------------------------------------

    void finish() {
        auto& m = out_.metrics;
        if (m.rounds.size() != cfg_.rounds) throw SimulationError("run ended before the round budget");
        for (std::size_t k = 0; k < cfg_.miners; ++k) {
            (k < cfg_.fl_miners ? m.fl_busy_ms : m.mon_busy_ms) += m.miner_busy_ms[k];
        }
        double sum = 0.0;
        for (const auto& r : m.rounds) sum += r.e2e_delay_ms;
        m.mean_e2e_delay_ms = sum / static_cast<double>(m.rounds.size());
        if (auto idx = convergence_index(m.rounds, m.epsilon, cfg_.convergence_streak)) {
            m.convergence_round = m.rounds[*idx].round;
            m.convergence_time_ms = m.rounds[*idx].sim_time_ms;
        }
        m.t_x_round = tracker_.onset();
        for (const auto& b : out_.chain.blocks()) m.ledger_bytes += b.size_bytes();
    }

    ScenarioConfig cfg_;
    RunResult out_;
    attack::AttackConfig attack_;
    monitor::NormalizedDistanceDetector detector_;
    Rng monitor_rng_;

    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
    double now_ = 0.0;
    std::uint64_t seq_ = 0;

    std::vector<KeyPair> worker_keys_;
    std::vector<KeyPair> miner_keys_;
    std::vector<ledger::MinerSigner> signers_;
    std::vector<double> busy_until_;
    std::vector<WorkerState> workers_;
    std::vector<ModelParams> gms_;
    std::vector<double> commit_times_;
    std::optional<ledger::PendingBlock> pending_;

    std::map<Round, FlRound> fl_;
    std::map<Round, MonRound> mon_;
    std::optional<monitor::ReliableSet> latest_set_;
    monitor::ProtectionTracker tracker_;
};

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg) { return Simulation(cfg).run(); }

}  // namespace bcfl::sim
