#include <cmath>
#include <sstream>

#include "bcfl/fl/dataset.hpp"
#include "bcfl/ledger/ledger.hpp"
#include "bcfl/oracle/oracle.hpp"
#include "bcfl/sim/simulation.hpp"
#include "doctest.h"

using namespace bcfl;
using namespace bcfl::sim;

namespace {

ScenarioConfig config(Scenario s, std::uint64_t seed = 1, std::size_t rounds = 300) {
    ScenarioConfig c;
    c.scenario = s;
    c.seed = seed;
    c.rounds = rounds;
    return c;
}

std::string csv_of(const RunResult& r) {
    std::ostringstream o;
    write_metrics_csv(o, r.metrics);
    return o.str();
}

std::string summary_of(const RunResult& r) {
    std::ostringstream o;
    write_summary_json(o, r);
    return o.str();
}

}  // namespace

TEST_CASE("event order is total: time, kind, node, round") {
    const NodeId w0 = NodeId::worker(WorkerId{0}), w1 = NodeId::worker(WorkerId{1});
    SimEvent a{1.0, EventKind::ModelDownloaded, w1, 3, 9};
    SimEvent b{1.0, EventKind::ModelDownloaded, w1, 3, 2};
    CHECK(b < a);
    CHECK(SimEvent{0.5, EventKind::ConsensusDone, w1, 9, 9} < a);
    CHECK(SimEvent{1.0, EventKind::ModelDownloaded, w0, 9, 9} < a);
    CHECK(SimEvent{1.0, EventKind::ModelDownloaded, w1, 2, 9} < a);
}

TEST_CASE("latency samples are positive and counter-based") {
    LatencyModel lat;
    for (Round r = 0; r < 200; ++r) {
        for (std::uint32_t n = 0; n < 12; ++n) {
            for (auto link : {Link::Download, Link::Exchange, Link::Consensus, Link::AuditResponse}) {
                const double d = lat.sample(5, link, r, n);
                CHECK(d > 0.0);
                CHECK(d == lat.sample(5, link, r, n));
            }
        }
    }
    CHECK(lat.sample(5, Link::Download, 1, 1) != lat.sample(6, Link::Download, 1, 1));
    lat.worker_miner.jitter_ms = lat.worker_miner.base_ms;
    CHECK_THROWS_AS(lat.validate(), SimulationError);
}

TEST_CASE("scenario names round-trip") {
    for (auto s : {Scenario::NoAttack, Scenario::Attack, Scenario::DefenseCoupled, Scenario::DefenseDecoupled})
        CHECK(parse_scenario(to_string(s)) == s);
    CHECK_THROWS(parse_scenario("defense"));
}

TEST_CASE("config validation") {
    auto c = config(Scenario::Attack);
    c.attackers = c.workers;
    CHECK_THROWS_AS(c.validate(), SimulationError);
    c = config(Scenario::DefenseDecoupled);
    c.fl_miners = c.miners;
    CHECK_THROWS_AS(c.validate(), SimulationError);
}

TEST_CASE("convergence index needs a full streak") {
    std::vector<RoundMetrics> rows(10);
    for (std::size_t i = 0; i < 10; ++i) rows[i].loss = 1.0;
    for (std::size_t i : {2, 4, 5, 6, 7, 8}) rows[i].loss = 0.1;
    CHECK(convergence_index(rows, 0.5, 5) == std::optional<std::size_t>(4));
    CHECK_FALSE(convergence_index(rows, 0.5, 6).has_value());
}

TEST_CASE("no-attack trajectory equals the straight-line reference loop") {
    const auto r = run_scenario(config(Scenario::NoAttack, 1));
    std::ostringstream csv;
    fl::write_csv(csv, r.data.full);
    std::istringstream in(csv.str());
    const auto rows = oracle::load_dataset_csv(in);

    oracle::FedAvgSettings s;
    s.epsilon = r.metrics.epsilon;
    const auto init = r.initial_model.weights();
    const auto ref = oracle::reference_fedavg(rows, {init.begin(), init.end()}, s);

    REQUIRE(r.chain.size() == 301);
    for (Round h = 0; h <= 300; ++h) {
        const auto& gm = r.store.get(r.chain.global_model_at(h));
        const auto w = gm.weights();
        REQUIRE(std::vector<double>(w.begin(), w.end()) == ref.models[h]);
    }
    for (std::size_t i = 0; i < 300; ++i) CHECK(r.metrics.rounds[i].loss == ref.losses[i]);
    REQUIRE(ref.convergence_round.has_value());
    CHECK(r.metrics.convergence_round == ref.convergence_round);

    const auto central = oracle::centralized_baseline(rows);
    CHECK(std::abs(central.plateau_loss - r.metrics.plateau_loss) < 1e-12);
    CHECK(r.metrics.rounds.back().loss <= 1.05 * central.plateau_loss);
    CHECK(r.chain.validate(r.keys, 4).ok);
}

TEST_CASE("same seed, same bytes; different seed, different run") {
    auto c = config(Scenario::DefenseDecoupled, 3, 60);
    const auto a = run_scenario(c);
    const auto b = run_scenario(c);
    CHECK(csv_of(a) == csv_of(b));
    CHECK(summary_of(a) == summary_of(b));
    c.seed = 4;
    CHECK(csv_of(run_scenario(c)) != csv_of(a));
}

TEST_CASE("decoupled critical path never exceeds coupled, same total work") {
    const auto coupled = run_scenario(config(Scenario::DefenseCoupled, 2, 120));
    const auto decoupled = run_scenario(config(Scenario::DefenseDecoupled, 2, 120));
    REQUIRE(coupled.metrics.rounds.size() == decoupled.metrics.rounds.size());
    for (std::size_t i = 0; i < coupled.metrics.rounds.size(); ++i) {
        const auto& c = coupled.metrics.rounds[i];
        const auto& d = decoupled.metrics.rounds[i];
        CHECK(d.e2e_delay_ms <= c.e2e_delay_ms + 1e-9);
        CHECK(d.fl_path_ms <= c.fl_path_ms + 1e-9);
        CHECK(d.e2e_delay_ms >= d.fl_path_ms);
    }
    CHECK(decoupled.metrics.total_busy_ms() == doctest::Approx(coupled.metrics.total_busy_ms()).epsilon(1e-12));
    CHECK(decoupled.metrics.rounds.back().sim_time_ms < coupled.metrics.rounds.back().sim_time_ms);
}

TEST_CASE("protection onset and the protected flag") {
    for (auto s : {Scenario::DefenseCoupled, Scenario::DefenseDecoupled}) {
        const auto r = run_scenario(config(s, 1, 40));
        REQUIRE(r.metrics.t_x_round.has_value());
        CHECK(*r.metrics.t_x_round == 4);
        bool seen = false;
        for (const auto& row : r.metrics.rounds) {
            if (seen) CHECK(row.is_protected);
            seen = seen || row.is_protected;
            // Row r aggregates round r - 1.
            CHECK(row.is_protected == (row.round >= 5));
        }
        for (const auto& set : r.published) CHECK(set.round >= 4);
    }
    const auto plain = run_scenario(config(Scenario::Attack, 1, 40));
    CHECK_FALSE(plain.metrics.t_x_round.has_value());
    for (const auto& row : plain.metrics.rounds) CHECK_FALSE(row.is_protected);
}

TEST_CASE("attacker is excluded and poisoned updates carry valid signatures") {
    const auto r = run_scenario(config(Scenario::DefenseDecoupled, 1, 60));
    CHECK(r.chain.validate(r.keys, 4).ok);
    for (const auto& set : r.published) {
        if (set.round > 31) CHECK(set.workers.count(WorkerId{0}) == 0);
    }
    for (const auto& e : r.audits) {
        CHECK(e.audit.proofs_valid);
        if (e.round > 35 && e.audit.worker == WorkerId{0}) CHECK(e.score.score > 3.0);
    }
}

TEST_CASE("too many offline miners aborts the run") {
    auto c = config(Scenario::NoAttack, 1, 10);
    c.offline_miners = 1;
    const auto ok = run_scenario(c);
    for (const auto& b : ok.chain.blocks()) {
        if (b.height > 0) CHECK(b.signatures.size() == 3);
    }
    c.offline_miners = 2;
    CHECK_THROWS_AS(run_scenario(c), ledger::QuorumUnreachable);
}

TEST_CASE("on-chain model payloads grow the ledger") {
    auto c = config(Scenario::NoAttack, 1, 20);
    const auto off = run_scenario(c);
    c.on_chain_model = true;
    const auto on = run_scenario(c);
    CHECK(on.metrics.ledger_bytes > off.metrics.ledger_bytes);
    CHECK(on.chain.validate(on.keys, 4).ok);
    CHECK(csv_of(on) == csv_of(off));
}

TEST_CASE("trace is time-ordered") {
    auto c = config(Scenario::DefenseDecoupled, 1, 15);
    c.trace = true;
    const auto r = run_scenario(c);
    REQUIRE(!r.trace.empty());
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK_FALSE(r.trace[i] < r.trace[i - 1]);
}

TEST_CASE("parallel runs match serial runs") {
    std::vector<ScenarioConfig> cs{config(Scenario::NoAttack, 1, 30), config(Scenario::DefenseCoupled, 2, 30),
                                   config(Scenario::DefenseDecoupled, 3, 30)};
    const auto par = run_many(cs, 3);
    REQUIRE(par.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(csv_of(par[i]) == csv_of(run_scenario(cs[i])));
}

TEST_CASE("attacker sweep rejects a majority of attackers") {
    CHECK_THROWS(attacker_sweep(config(Scenario::DefenseDecoupled), {5}, {1}, {Scenario::DefenseDecoupled}));
}
