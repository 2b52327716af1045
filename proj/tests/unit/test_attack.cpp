#include "bcfl/attack/attack.hpp"
#include "doctest.h"

using namespace bcfl;
using namespace bcfl::attack;

TEST_CASE("honest workers pass through") {
    AttackConfig cfg{first_workers(1)};
    const ModelParams lm({0.1, 0.2, 0.3, 0.4});
    for (Round r : {0u, 30u, 31u, 200u}) CHECK(maybe_poison(WorkerId{5}, r, lm, cfg, 1) == lm);
}

TEST_CASE("attack starts strictly after round 30") {
    AttackConfig cfg{first_workers(2)};
    const ModelParams lm({0.1, 0.2, 0.3, 0.4});
    CHECK(maybe_poison(WorkerId{0}, 30, lm, cfg, 1) == lm);
    CHECK(maybe_poison(WorkerId{1}, 30, lm, cfg, 1) == lm);
    CHECK(maybe_poison(WorkerId{0}, 31, lm, cfg, 1) != lm);
}

TEST_CASE("poisoned weights are bounded and ignore the honest input") {
    AttackConfig cfg{first_workers(1)};
    const ModelParams a({0.1, 0.2, 0.3, 0.4}), b({-9, 9, 0, 1});
    double lo = 0, hi = 0;
    for (Round r = 31; r < 300; ++r) {
        const auto pa = maybe_poison(WorkerId{0}, r, a, cfg, 4);
        CHECK(pa == maybe_poison(WorkerId{0}, r, b, cfg, 4));
        CHECK(pa.dimension() == a.dimension());
        for (double w : pa.weights()) {
            CHECK(w >= -10.0);
            CHECK(w <= 10.0);
            lo = std::min(lo, w);
            hi = std::max(hi, w);
        }
    }
    // Spread covers most of the range.
    CHECK(lo < -9.0);
    CHECK(hi > 9.0);
}

TEST_CASE("different rounds and seeds draw different vectors") {
    AttackConfig cfg{first_workers(1)};
    const ModelParams lm({0, 0, 0, 0});
    CHECK(maybe_poison(WorkerId{0}, 31, lm, cfg, 1) != maybe_poison(WorkerId{0}, 32, lm, cfg, 1));
    CHECK(maybe_poison(WorkerId{0}, 31, lm, cfg, 1) != maybe_poison(WorkerId{0}, 31, lm, cfg, 2));
}

TEST_CASE("config validation") {
    AttackConfig cfg{first_workers(3)};
    CHECK_NOTHROW(cfg.validate(4));
    CHECK_NOTHROW(cfg.validate(3));
    CHECK_THROWS(cfg.validate(2));
    CHECK(parse_attack_mode(to_string(AttackMode::UntargetedRandom)) == AttackMode::UntargetedRandom);
    CHECK_THROWS(parse_attack_mode("targeted"));
    CHECK(first_workers(2) == std::set<WorkerId>{WorkerId{0}, WorkerId{1}});
}
