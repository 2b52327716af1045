#include <algorithm>
#include <cmath>
#include <sstream>

#include "bcfl/core/random.hpp"
#include "bcfl/fl/dataset.hpp"
#include "bcfl/fl/engine.hpp"
#include "doctest.h"

using namespace bcfl;
using namespace bcfl::fl;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4}); }

ModelParams random_params(Rng& rng, double scale) {
    return ModelParams({rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale),
                        rng.uniform(-scale, scale)});
}

Sample random_row(Rng& rng) {
    return {{rng.normal(), rng.normal(), rng.normal()}, static_cast<int>(rng.below(2))};
}

}  // namespace

TEST_CASE("246 rows over 10 workers: six shards of 25, four of 24") {
    const auto data = generate_dataset(1, 246, 10);
    REQUIRE(data.shards.size() == 10);
    std::size_t total = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(data.shards[i].rows.size() == (i < 6 ? 25u : 24u));
        CHECK(data.shards[i].owner.value == i);
        total += data.shards[i].rows.size();
    }
    CHECK(total == 246);
    // Round robin: row k lives in shard k % 10 at position k / 10.
    for (std::size_t k = 0; k < 246; ++k) CHECK(data.shards[k % 10].rows[k / 10] == data.full.rows[k]);
}

TEST_CASE("dataset generation is deterministic and standardized") {
    const auto a = generate_dataset(42, 246, 10);
    const auto b = generate_dataset(42, 246, 10);
    std::ostringstream sa, sb;
    write_csv(sa, a.full);
    write_csv(sb, b.full);
    CHECK(sa.str() == sb.str());
    CHECK(a.full != generate_dataset(43, 246, 10).full);

    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        double mean = 0, var = 0;
        for (const auto& r : a.full.rows) mean += r.features[j];
        mean /= 246;
        for (const auto& r : a.full.rows) var += (r.features[j] - mean) * (r.features[j] - mean);
        var /= 246;
        CHECK(std::abs(mean) < 1e-12);
        CHECK(std::abs(var - 1.0) < 1e-9);
    }
}

TEST_CASE("label base rate stays in [0.2, 0.8]") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const double p = generate_dataset(seed, 246, 10).full.positive_rate();
        CHECK(p >= 0.2);
        CHECK(p <= 0.8);
    }
}

TEST_CASE("csv round-trip") {
    const auto a = generate_dataset(9, 40, 4).full;
    std::stringstream s;
    write_csv(s, a);
    CHECK(read_csv(s) == a);
}

TEST_CASE("init model is seeded and small") {
    const auto m = init_model(7);
    CHECK(m.dimension() == kModelDimension);
    for (double w : m.weights()) {
        CHECK(w >= -0.1);
        CHECK(w <= 0.1);
    }
    CHECK(init_model(7) == m);
    CHECK(init_model(8) != m);
}

TEST_CASE("analytic gradient matches central differences on 100 random cases") {
    Rng rng(99);
    const double h = 1e-5;
    for (int c = 0; c < 100; ++c) {
        const auto p = random_params(rng, 2.0);
        const auto row = random_row(rng);
        const auto g = logistic_gradient(p, row);
        REQUIRE(g.size() == kModelDimension);
        for (std::size_t j = 0; j < kModelDimension; ++j) {
            auto up = p, down = p;
            up[j] += h;
            down[j] -= h;
            const double fd = (logistic_loss(up, row) - logistic_loss(down, row)) / (2 * h);
            CHECK(rel_err(g[j], fd) < 1e-6);
        }
    }
}

TEST_CASE("zero epochs leave the model unchanged") {
    const auto data = generate_dataset(1, 50, 5);
    const auto gm = init_model(1);
    CHECK(local_train(gm, data.shards[0].rows, {0, 0.5, 0}) == gm);
}

TEST_CASE("one full-batch step on one row is gm - lr * grad") {
    const ModelParams gm({0.3, -0.2, 0.1, 0.05});
    const Sample row{{1.5, -0.5, 2.0}, 1};
    // Hand-computed: z = 0.3*1.5 + 0.2*0.5 + 0.1*2 + 0.05 = 0.8
    const double z = 0.8;
    const double r = 1.0 / (1.0 + std::exp(-z)) - 1.0;
    const double lr = 0.5;
    const auto lm = local_train(gm, std::span<const Sample>(&row, 1), {1, lr, 0});
    const double expect[4] = {0.3 - lr * r * 1.5, -0.2 - lr * r * -0.5, 0.1 - lr * r * 2.0, 0.05 - lr * r};
    for (int j = 0; j < 4; ++j) CHECK(lm[j] == doctest::Approx(expect[j]).epsilon(1e-14));
}

TEST_CASE("separable shard reaches training accuracy 1.0") {
    std::vector<Sample> rows;
    Rng rng(5);
    while (rows.size() < 20) {
        Sample s{{rng.normal(), rng.normal(), rng.normal()}, 0};
        const double u = 2 * s.features[0] - s.features[1] + 0.5 * s.features[2];
        if (std::abs(u) < 0.3) continue;
        s.label = u > 0;
        rows.push_back(s);
    }
    const auto lm = local_train(ModelParams(std::vector<double>(4, 0.0)), rows, {200, 1.0, 0});
    CHECK(evaluate(lm, rows).accuracy == 1.0);
}

TEST_CASE("local training rejects a non-finite global model") {
    const auto data = generate_dataset(1, 20, 2);
    ModelParams bad({1.0, INFINITY, 0.0, 0.0});
    CHECK_THROWS_AS(local_train(bad, data.shards[0].rows, {}), TrainingError);
}

TEST_CASE("aggregate examples") {
    SUBCASE("single update is itself") {
        std::vector<WeightedUpdate> u{{WorkerId{0}, ModelParams({1, 2, 3, 4}), 7}};
        CHECK(aggregate(u).model == ModelParams({1, 2, 3, 4}));
    }
    SUBCASE("midpoint") {
        std::vector<WeightedUpdate> u{{WorkerId{0}, ModelParams({1, 1, 1, 1}), 5},
                                      {WorkerId{1}, ModelParams({3, 3, 3, 3}), 5}};
        CHECK(aggregate(u).model == ModelParams({2, 2, 2, 2}));
    }
    SUBCASE("weights 1 and 2") {
        std::vector<WeightedUpdate> u{{WorkerId{0}, ModelParams({0, 0, 0, 0}), 1},
                                      {WorkerId{1}, ModelParams({3, 3, 3, 3}), 2}};
        CHECK(aggregate(u).model == ModelParams({2, 2, 2, 2}));
    }
    SUBCASE("bad updates are dropped, the round survives") {
        std::vector<WeightedUpdate> u{{WorkerId{0}, ModelParams({1, 1, 1, 1}), 1},
                                      {WorkerId{1}, ModelParams({NAN, 0, 0, 0}), 1},
                                      {WorkerId{2}, ModelParams({1, 1, 1}), 1},
                                      {WorkerId{3}, ModelParams({3, 3, 3, 3}), 1}};
        const auto r = aggregate(u);
        CHECK(r.model == ModelParams({2, 2, 2, 2}));
        CHECK(r.rejected == std::vector<WorkerId>{WorkerId{1}, WorkerId{2}});
    }
    SUBCASE("no updates") { CHECK_THROWS(aggregate({})); }
}

TEST_CASE("aggregation is permutation invariant and idempotent") {
    Rng rng(12);
    for (int c = 0; c < 50; ++c) {
        std::vector<WeightedUpdate> u;
        const auto n = 2 + rng.below(9);
        for (std::uint32_t i = 0; i < n; ++i) u.push_back({WorkerId{i}, random_params(rng, 5), 1 + rng.below(30)});
        const auto base = aggregate(u).model;
        auto shuffled = u;
        std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(c));
        const auto perm = aggregate(shuffled).model;
        for (std::size_t j = 0; j < 4; ++j) CHECK(perm[j] == doctest::Approx(base[j]).epsilon(1e-12));

        std::vector<WeightedUpdate> same(n, {WorkerId{0}, u[0].params, 3});
        const auto id = aggregate(same).model;
        for (std::size_t j = 0; j < 4; ++j) CHECK(id[j] == doctest::Approx(u[0].params[j]).epsilon(1e-15));
    }
}

TEST_CASE("evaluate") {
    const std::vector<Sample> rows{{{1, 0, 0}, 1}, {{-1, 0, 0}, 0}, {{2, 0, 0}, 0}};
    const auto e = evaluate(ModelParams({1, 0, 0, 0}), rows);
    CHECK(e.accuracy == doctest::Approx(2.0 / 3));
    const double expect = (std::log1p(std::exp(-1.0)) + std::log1p(std::exp(-1.0)) + std::log1p(std::exp(2.0))) / 3;
    CHECK(e.loss == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("plateau training stops when the loss flattens") {
    const auto data = generate_dataset(1, 246, 10);
    const auto p = train_to_plateau(data.full.rows);
    CHECK(p.steps % 100 == 0);
    CHECK(p.steps < 2'000'000);
    auto more = p.model;
    for (int k = 0; k < 100; ++k) more = local_train(more, data.full.rows, {1, 1.0, 0});
    CHECK(std::abs(evaluate(more, data.full.rows).loss - p.loss) < 1e-8);
}
