#pragma once

// Untargeted poisoning: compromised workers replace their local model with
// random weights once the attack has started.

#include <cstdint>
#include <set>
#include <string>

#include "bcfl/core/types.hpp"

namespace bcfl::attack {

enum class AttackMode { UntargetedRandom };

std::string to_string(AttackMode mode);
/// Throws Error on an unknown name.
AttackMode parse_attack_mode(const std::string& name);

struct AttackConfig {
    std::set<WorkerId> attackers;
    /// Rounds strictly after this one are poisoned.
    Round start = 30;
    AttackMode mode = AttackMode::UntargetedRandom;
    double magnitude = 10.0;

    bool is_attacker(WorkerId w) const { return attackers.count(w) != 0; }
    bool active(WorkerId w, Round round) const { return is_attacker(w) && round > start; }

    /// Throws Error if an attacker id is >= n_workers or magnitude <= 0.
    void validate(std::size_t n_workers) const;
};

/// Attackers 0..count-1.
std::set<WorkerId> first_workers(std::size_t count);

/// Returns `honest_lm` unless `worker` attacks in `round`. A poisoned model
/// has i.i.d. uniform [-magnitude, magnitude] entries drawn from the
/// (seed, worker, round) attack stream, so it does not depend on
/// `honest_lm` beyond its dimension.
ModelParams maybe_poison(WorkerId worker, Round round, const ModelParams& honest_lm, const AttackConfig& cfg,
                         std::uint64_t seed);

}  // namespace bcfl::attack
