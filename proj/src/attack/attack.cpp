#include "bcfl/attack/attack.hpp"

#include <cmath>

#include "bcfl/core/random.hpp"

namespace bcfl::attack {

std::string to_string(AttackMode mode) {
    switch (mode) {
        case AttackMode::UntargetedRandom:
            return "untargeted-random";
    }
    return "unknown";
}

AttackMode parse_attack_mode(const std::string& name) {
    if (name == "untargeted-random") return AttackMode::UntargetedRandom;
    throw Error("unknown attack mode '" + name + "'");
}

void AttackConfig::validate(std::size_t n_workers) const {
    for (auto w : attackers) {
        if (w.value >= n_workers) throw Error("attacker " + std::to_string(w.value) + " is not a worker");
    }
    if (!(magnitude > 0.0) || !std::isfinite(magnitude)) throw Error("attack magnitude must be positive");
}

std::set<WorkerId> first_workers(std::size_t count) {
    std::set<WorkerId> out;
    for (std::size_t i = 0; i < count; ++i) out.insert(WorkerId{static_cast<std::uint32_t>(i)});
    return out;
}

ModelParams maybe_poison(WorkerId worker, Round round, const ModelParams& honest_lm, const AttackConfig& cfg,
                         std::uint64_t seed) {
    if (!cfg.active(worker, round)) return honest_lm;
    auto rng = Rng::stream(seed, Stream::Attack, worker.value, round);
    std::vector<double> w(honest_lm.dimension());
    for (auto& v : w) v = rng.uniform(-cfg.magnitude, cfg.magnitude);
    return ModelParams(std::move(w));
}

}  // namespace bcfl::attack
