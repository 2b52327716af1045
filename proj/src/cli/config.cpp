#include "bcfl/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace bcfl::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string real_text(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    KeyInfo info;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field uint_field(std::string name, std::string help, T sim::ScenarioConfig::*member) {
    auto key = name;
    return {{std::move(name), std::move(help)},
            [key, member](RunConfig& c, const std::string& v) { c.scenario.*member = static_cast<T>(parse_uint(key, v)); },
            [member](const RunConfig& c) { return std::to_string(c.scenario.*member); }};
}

Field real_field(std::string name, std::string help, std::function<double&(RunConfig&)> ref) {
    auto key = name;
    return {{std::move(name), std::move(help)},
            [key, ref](RunConfig& c, const std::string& v) { ref(c) = parse_real(key, v); },
            [ref](const RunConfig& c) { return real_text(ref(const_cast<RunConfig&>(c))); }};
}

const std::vector<Field>& fields() {
    using S = sim::ScenarioConfig;
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(uint_field("seed", "run seed", &S::seed));
        f.push_back({{"mode", "no-attack | attack | defense-coupled | defense-decoupled"},
                     [](RunConfig& c, const std::string& v) {
                         try {
                             c.scenario.scenario = sim::parse_scenario(v);
                         } catch (const Error& e) {
                             throw ConfigError(std::string("mode: ") + e.what());
                         }
                     },
                     [](const RunConfig& c) { return sim::to_string(c.scenario.scenario); }});
        f.push_back(uint_field("workers", "number of workers", &S::workers));
        f.push_back(uint_field("miners", "number of miners", &S::miners));
        f.push_back(uint_field("fl_miners", "miners in the FL role; the rest monitor", &S::fl_miners));
        f.push_back(uint_field("attackers", "workers 0..attackers-1 poison their updates", &S::attackers));
        f.push_back(uint_field("attack_start", "poisoning starts after this round", &S::attack_start));
        f.push_back(real_field("attack_magnitude", "poisoned weights are uniform in [-m, m]",
                               [](RunConfig& c) -> double& { return c.scenario.attack_magnitude; }));
        f.push_back({{"window", "audit window size z"},
                     [](RunConfig& c, const std::string& v) { c.scenario.monitor.window = parse_uint("window", v); },
                     [](const RunConfig& c) { return std::to_string(c.scenario.monitor.window); }});
        f.push_back(real_field("threshold", "reliable-set score threshold tau",
                               [](RunConfig& c) -> double& { return c.scenario.monitor.threshold; }));
        f.push_back({{"max_lag", "maximum reliable-set lag L in rounds"},
                     [](RunConfig& c, const std::string& v) {
                         c.scenario.monitor.max_lag = static_cast<Round>(parse_uint("max_lag", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.scenario.monitor.max_lag); }});
        f.push_back({{"cadence", "audit every n rounds"},
                     [](RunConfig& c, const std::string& v) {
                         c.scenario.monitor.cadence = static_cast<Round>(parse_uint("cadence", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.scenario.monitor.cadence); }});
        f.push_back(uint_field("rounds", "round budget", &S::rounds));
        f.push_back(uint_field("rows", "dataset rows", &S::rows));
        f.push_back(real_field("coefficient_norm", "ground-truth coefficient norm of the synthetic data",
                               [](RunConfig& c) -> double& { return c.scenario.dataset.coefficient_norm; }));
        f.push_back({{"epochs", "local epochs per round"},
                     [](RunConfig& c, const std::string& v) {
                         c.scenario.train.epochs = static_cast<int>(parse_uint("epochs", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.scenario.train.epochs); }});
        f.push_back(real_field("learning_rate", "local learning rate",
                               [](RunConfig& c) -> double& { return c.scenario.train.learning_rate; }));
        f.push_back({{"batch_size", "rows per mini-batch, 0 = whole shard"},
                     [](RunConfig& c, const std::string& v) { c.scenario.train.batch_size = parse_uint("batch_size", v); },
                     [](const RunConfig& c) { return std::to_string(c.scenario.train.batch_size); }});
        f.push_back(real_field("convergence_factor", "converged when loss <= factor x centralized plateau",
                               [](RunConfig& c) -> double& { return c.scenario.convergence_factor; }));
        f.push_back(uint_field("convergence_streak", "consecutive rounds below the threshold", &S::convergence_streak));
        f.push_back({{"on_chain_model", "store full model payloads in blocks"},
                     [](RunConfig& c, const std::string& v) {
                         c.scenario.on_chain_model = parse_bool("on_chain_model", v);
                     },
                     [](const RunConfig& c) { return std::string(c.scenario.on_chain_model ? "true" : "false"); }});
        f.push_back(uint_field("offline_miners", "miners that never sign", &S::offline_miners));
        f.push_back({{"trace", "write trace.jsonl"},
                     [](RunConfig& c, const std::string& v) { c.scenario.trace = parse_bool("trace", v); },
                     [](const RunConfig& c) { return std::string(c.scenario.trace ? "true" : "false"); }});
        f.push_back({{"output_dir", "directory for run outputs"},
                     [](RunConfig& c, const std::string& v) {
                         if (v.empty()) throw ConfigError("output_dir: must not be empty");
                         c.output_dir = v;
                     },
                     [](const RunConfig& c) { return c.output_dir; }});

        auto lat = [](RunConfig& c) -> sim::LatencyModel& { return c.scenario.latency; };
        f.push_back(real_field("worker_miner_ms", "worker-miner link base delay",
                               [lat](RunConfig& c) -> double& { return lat(c).worker_miner.base_ms; }));
        f.push_back(real_field("worker_miner_jitter_ms", "worker-miner link jitter",
                               [lat](RunConfig& c) -> double& { return lat(c).worker_miner.jitter_ms; }));
        f.push_back(real_field("miner_miner_ms", "miner-miner link base delay",
                               [lat](RunConfig& c) -> double& { return lat(c).miner_miner.base_ms; }));
        f.push_back(real_field("miner_miner_jitter_ms", "miner-miner link jitter",
                               [lat](RunConfig& c) -> double& { return lat(c).miner_miner.jitter_ms; }));
        f.push_back(real_field("consensus_ms", "consensus base delay",
                               [lat](RunConfig& c) -> double& { return lat(c).consensus.base_ms; }));
        f.push_back(real_field("consensus_jitter_ms", "consensus jitter",
                               [lat](RunConfig& c) -> double& { return lat(c).consensus.jitter_ms; }));
        f.push_back(real_field("train_ms", "local training time",
                               [lat](RunConfig& c) -> double& { return lat(c).train_ms; }));
        f.push_back(real_field("proof_verify_ms", "audit cost per Merkle proof",
                               [lat](RunConfig& c) -> double& { return lat(c).proof_verify_ms; }));
        f.push_back(real_field("signature_verify_ms", "cost per signature check",
                               [lat](RunConfig& c) -> double& { return lat(c).signature_verify_ms; }));
        f.push_back(real_field("aggregate_per_update_ms", "aggregation cost per received update",
                               [lat](RunConfig& c) -> double& { return lat(c).aggregate_per_update_ms; }));
        f.push_back(real_field("score_per_worker_ms", "scoring cost per audited worker",
                               [lat](RunConfig& c) -> double& { return lat(c).score_per_worker_ms; }));
        return f;
    }();
    return table;
}

const Field* find_field(const std::string& key) {
    for (const auto& f : fields()) {
        if (f.info.name == key) return &f;
    }
    return nullptr;
}

}  // namespace

const std::vector<KeyInfo>& config_keys() {
    static const std::vector<KeyInfo> keys = [] {
        std::vector<KeyInfo> out;
        for (const auto& f : fields()) out.push_back(f.info);
        return out;
    }();
    return keys;
}

bool is_config_key(const std::string& key) { return find_field(key) != nullptr; }

Settings parse_settings(std::istream& in, const std::string& origin) {
    Settings out;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const auto where = origin + ":" + std::to_string(no);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (!is_config_key(key)) throw ConfigError(where + ": unknown key '" + key + "'");
        if (!out.emplace(key, value).second) throw ConfigError(where + ": key '" + key + "' set twice");
    }
    return out;
}

Settings load_settings_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    return parse_settings(in, path);
}

std::string default_output_dir() {
    const char* env = std::getenv("BCFL_OUTPUT_DIR");
    return env && *env ? std::string(env) : std::string("out");
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto* f = find_field(key);
    if (!f) throw ConfigError("unknown key '" + key + "'");
    f->set(cfg, value);
}

RunConfig build_config(const Settings& file, const Settings& flags) {
    RunConfig cfg;
    cfg.output_dir = default_output_dir();
    for (const auto* layer : {&file, &flags}) {
        for (const auto& [k, v] : *layer) apply_setting(cfg, k, v);
    }
    validate(cfg);
    return cfg;
}

void validate(const RunConfig& cfg) {
    const auto& s = cfg.scenario;
    if (s.attackers >= s.workers) {
        throw ConfigError("constraint attackers < workers violated (attackers=" + std::to_string(s.attackers) +
                          ", workers=" + std::to_string(s.workers) + ")");
    }
    if (s.fl_miners > s.miners) {
        throw ConfigError("constraint fl_miners <= miners violated (fl_miners=" + std::to_string(s.fl_miners) +
                          ", miners=" + std::to_string(s.miners) + ")");
    }
    try {
        s.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

std::string to_text(const RunConfig& cfg, bool include_output_dir) {
    std::ostringstream out;
    for (const auto& f : fields()) {
        if (!include_output_dir && f.info.name == "output_dir") continue;
        out << f.info.name << " = " << f.get(cfg) << '\n';
    }
    return out.str();
}

}  // namespace bcfl::cli
