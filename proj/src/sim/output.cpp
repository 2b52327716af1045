#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "bcfl/sim/simulation.hpp"
#include "json.hpp"

namespace bcfl::sim {

namespace {

std::string real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
    if (v) return *v;
    return nullptr;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimulationError("cannot write " + path.string());
    return out;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics) {
    out << "round,sim_time_ms,e2e_delay_ms,loss,accuracy,reliable_set_size,protected\n";
    for (const auto& r : metrics.rounds) {
        out << r.round << ',' << real(r.sim_time_ms) << ',' << real(r.e2e_delay_ms) << ',' << real(r.loss) << ','
            << real(r.accuracy) << ',' << r.reliable_set_size << ',' << (r.is_protected ? 1 : 0) << '\n';
    }
}

void write_summary_json(std::ostream& out, const RunResult& result) {
    const auto& m = result.metrics;
    const auto& c = result.config;
    nlohmann::ordered_json j;
    j["mode"] = to_string(c.scenario);
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["attackers"] = has_attack(c.scenario) ? c.attackers : 0;
    j["rounds"] = m.rounds.size();
    j["convergence_time_ms"] = optional_json(m.convergence_time_ms);
    j["convergence_round"] = optional_json(m.convergence_round);
    j["t_x_round"] = optional_json(m.t_x_round);
    j["plateau_loss"] = m.plateau_loss;
    j["epsilon"] = m.epsilon;
    j["final_loss"] = m.rounds.empty() ? 0.0 : m.rounds.back().loss;
    j["final_accuracy"] = m.rounds.empty() ? 0.0 : m.rounds.back().accuracy;
    j["mean_e2e_delay_ms"] = m.mean_e2e_delay_ms;
    j["busy_ms"] = {
        {"miners_fl", m.fl_busy_ms},
        {"miners_mon", m.mon_busy_ms},
        {"miners_fl_per_round", m.fl_busy_per_round_ms()},
        {"miners_mon_per_round", m.mon_busy_per_round_ms()},
        {"fl_work", m.fl_work_ms},
        {"monitor_work", m.monitor_work_ms},
        {"per_miner", m.miner_busy_ms},
    };
    j["ledger_bytes"] = m.ledger_bytes;
    j["chain_tip"] = result.chain.tip().digest().hex();
    out << j.dump(2) << '\n';
}

void write_trace_jsonl(std::ostream& out, const std::vector<SimEvent>& trace) {
    for (const auto& e : trace) {
        nlohmann::ordered_json j;
        j["time_ms"] = e.time;
        j["kind"] = to_string(e.kind);
        j["node"] = to_string(e.node);
        j["round"] = e.round;
        out << j.dump() << '\n';
    }
}

void write_outputs(const std::string& dir, const RunResult& result) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    std::error_code ec;
    fs::create_directories(base, ec);
    if (ec) throw SimulationError("cannot create output directory " + dir + ": " + ec.message());

    {
        auto out = open_out(base / "metrics.csv");
        write_metrics_csv(out, result.metrics);
    }
    {
        auto out = open_out(base / "summary.json");
        write_summary_json(out, result);
    }
    {
        auto out = open_out(base / "chain.jsonl");
        result.chain.write_jsonl(out);
    }
    {
        auto out = open_out(base / "models.jsonl");
        result.store.write_jsonl(out);
    }
    {
        auto out = open_out(base / "audit.jsonl");
        monitor::write_audit_jsonl(out, result.audits);
    }
    {
        auto out = open_out(base / "dataset.csv");
        fl::write_csv(out, result.data.full);
    }
    if (result.config.trace) {
        auto out = open_out(base / "trace.jsonl");
        write_trace_jsonl(out, result.trace);
    }
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingPoint>& points) {
    out << "workers,mon_busy_per_round_ms,fl_busy_per_round_ms,fl_delay_ms\n";
    for (const auto& p : points) {
        out << p.workers << ',' << real(p.mon_busy_per_round_ms) << ',' << real(p.fl_busy_per_round_ms) << ','
            << real(p.fl_delay_ms) << '\n';
    }
}

void write_attacker_csv(std::ostream& out, const std::vector<AttackerPoint>& points,
                        const std::vector<std::uint64_t>& seeds) {
    out << "mode,attackers";
    for (auto s : seeds) out << ",seed_" << s << "_ms";
    out << ",mean_ms\n";
    for (const auto& p : points) {
        out << to_string(p.scenario) << ',' << p.attackers;
        for (const auto& t : p.convergence_times_ms) out << ',' << (t ? real(*t) : "");
        out << ',' << (p.mean_convergence_ms ? real(*p.mean_convergence_ms) : "") << '\n';
    }
}

}  // namespace bcfl::sim
