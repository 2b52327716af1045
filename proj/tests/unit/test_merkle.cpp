#include <sodium.h>

#include <chrono>

#include "bcfl/core/random.hpp"
#include "bcfl/core/crypto.hpp"
#include "bcfl/merkle/merkle_tree.hpp"
#include "doctest.h"

using namespace bcfl;
using namespace bcfl::merkle;

namespace {

// Reference hashing straight from libsodium.
Digest sha(const Bytes& b) {
    Digest d;
    crypto_hash_sha256(d.bytes.data(), b.data(), b.size());
    return d;
}

Digest ref_leaf(const UpdateRecord& r) {
    Bytes b{0x00};
    const auto s = r.serialize();
    b.insert(b.end(), s.begin(), s.end());
    return sha(b);
}

Digest ref_node(const Digest& l, const Digest& r) {
    Bytes b{0x01};
    b.insert(b.end(), l.bytes.begin(), l.bytes.end());
    b.insert(b.end(), r.bytes.begin(), r.bytes.end());
    return sha(b);
}

// Level-by-level fold, odd tail promoted.
Digest ref_root(std::vector<Digest> level) {
    while (level.size() > 1) {
        std::vector<Digest> up;
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) up.push_back(ref_node(level[i], level[i + 1]));
        if (level.size() % 2) up.push_back(level.back());
        level = std::move(up);
    }
    return level.front();
}

UpdateRecord record(std::uint32_t worker, Round round, double seed = 0.0) {
    return {WorkerId{worker}, round, ModelParams({seed + round, -0.5 * round, 0.25, 1.0}), hash(std::to_string(round))};
}

struct History {
    MerkleTree tree;
    std::vector<UpdateRecord> records;
};

History build(std::size_t n, std::uint32_t worker = 0, double seed = 0.0) {
    History h;
    for (std::size_t i = 0; i < n; ++i) {
        h.records.push_back(record(worker, static_cast<Round>(i), seed));
        h.tree.append(h.records.back());
    }
    return h;
}

}  // namespace

TEST_CASE("single leaf root is the leaf digest") {
    auto h = build(1);
    CHECK(h.tree.root() == ref_leaf(h.records[0]));
}

TEST_CASE("four leaves fold by hand") {
    auto h = build(4);
    Digest l[4];
    for (int i = 0; i < 4; ++i) l[i] = ref_leaf(h.records[i]);
    CHECK(h.tree.root() == ref_node(ref_node(l[0], l[1]), ref_node(l[2], l[3])));
}

TEST_CASE("odd tail is promoted") {
    auto h = build(3);
    const Digest a = ref_leaf(h.records[0]), b = ref_leaf(h.records[1]), c = ref_leaf(h.records[2]);
    CHECK(h.tree.root() == ref_node(ref_node(a, b), c));
}

TEST_CASE("incremental root matches a full recompute for every size up to 300") {
    MerkleTree t;
    std::vector<Digest> leaves;
    for (Round r = 0; r < 300; ++r) {
        const auto rec = record(4, r);
        t.append(rec);
        leaves.push_back(ref_leaf(rec));
        REQUIRE(t.root() == ref_root(leaves));
    }
}

TEST_CASE("append rejects gaps, replays and foreign records") {
    auto h = build(3);
    CHECK_THROWS_AS(h.tree.append(record(0, 5)), MerkleError);
    CHECK_THROWS_AS(h.tree.append(record(0, 2)), MerkleError);
    CHECK_THROWS_AS(h.tree.append(record(1, 3)), MerkleError);
    CHECK(h.tree.size() == 3);
}

TEST_CASE("empty tree has no root") {
    MerkleTree t;
    CHECK_THROWS_AS(t.root(), MerkleError);
    CHECK_THROWS_AS(t.prove(0), MerkleError);
}

TEST_CASE("permuting two leaves changes the root") {
    auto h = build(6);
    MerkleTree swapped;
    auto recs = h.records;
    std::swap(recs[1].local_model, recs[4].local_model);
    for (const auto& r : recs) swapped.append(r);
    CHECK(swapped.root() != h.tree.root());
    CHECK(build(6).tree.root() == h.tree.root());
}

TEST_CASE("nine-leaf tree: every proof verifies, tampered leaves do not") {
    auto h = build(9);
    const auto root = h.tree.root();
    for (std::size_t i = 0; i < 9; ++i) {
        const auto p = h.tree.prove(i);
        CHECK(p.siblings.size() <= ceil_log2(9));
        CHECK(verify(root, h.tree.leaf(i), p));
        auto bad = h.tree.leaf(i);
        bad.bytes[0] ^= 1;
        CHECK_FALSE(verify(root, bad, p));
    }
    CHECK_THROWS_AS(h.tree.prove(9), MerkleError);
}

TEST_CASE("stale root: 4-leaf proofs do not verify against the 8-leaf root") {
    auto h = build(8);
    const auto early = h.tree.prefix(4);
    CHECK(early.root() == build(4).tree.root());
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(verify(early.root(), h.tree.leaf(i), early.prove(i)));
        CHECK_FALSE(verify(h.tree.root(), h.tree.leaf(i), early.prove(i)));
        CHECK_FALSE(verify(early.root(), h.tree.leaf(i), h.tree.prove(i)));
    }
}

TEST_CASE("path length is ceil(log2(n))") {
    CHECK(ceil_log2(1) == 0);
    CHECK(ceil_log2(2) == 1);
    CHECK(ceil_log2(5) == 3);
    CHECK(ceil_log2(512) == 9);
    CHECK(ceil_log2(513) == 10);
    for (std::size_t n = 1; n <= 40; ++n) {
        auto h = build(n);
        for (std::size_t i = 0; i < n; ++i) CHECK(h.tree.prove(i).siblings.size() <= ceil_log2(n));
    }
}

TEST_CASE("open_window returns consecutive records with valid paths") {
    auto h = build(12);
    const auto opened = open_window(h.tree, h.records, {3, 7});
    REQUIRE(opened.size() == 5);
    for (std::size_t k = 0; k < opened.size(); ++k) {
        CHECK(opened[k].first.round == 3 + k);
        CHECK(verify(h.tree.root(), leaf_digest(opened[k].first), opened[k].second));
    }
    CHECK_THROWS_AS(open_window(h.tree, h.records, {10, 12}), MerkleError);
    CHECK_THROWS_AS(open_window(h.tree, h.records, {5, 4}), MerkleError);
}

TEST_CASE("record serialization round-trips") {
    const auto r = record(3, 17, 0.125);
    CHECK(UpdateRecord::deserialize(r.serialize()) == r);
    CHECK(leaf_digest_of_bytes(r.serialize()) == leaf_digest(r));
}

TEST_CASE("fuzz: honest proofs accepted, mutated proofs rejected") {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2024);
    std::size_t honest = 0, mutated = 0;
    for (std::size_t n : {1, 2, 3, 5, 8, 13, 31, 64, 100, 255, 256, 257, 511, 512}) {
        auto h = build(n, 0, static_cast<double>(n));
        const auto root = h.tree.root();
        for (int trial = 0; trial < 80; ++trial) {
            const std::size_t i = rng.below(n);
            const auto leaf = h.tree.leaf(i);
            const auto path = h.tree.prove(i);
            REQUIRE(verify(root, leaf, path));
            ++honest;
            for (int m = 0; m < 10; ++m) {
                auto p = path;
                auto l = leaf;
                auto r = root;
                switch (rng.below(7)) {
                    case 0:
                        if (p.siblings.empty()) {
                            l.bytes[rng.below(32)] ^= 0x80;
                        } else {
                            auto& s = p.siblings[rng.below(p.siblings.size())];
                            s.sibling.bytes[rng.below(32)] ^= static_cast<std::uint8_t>(1u << rng.below(8));
                        }
                        break;
                    case 1:
                        l.bytes[rng.below(32)] ^= static_cast<std::uint8_t>(1u << rng.below(8));
                        break;
                    case 2:
                        r.bytes[rng.below(32)] ^= static_cast<std::uint8_t>(1u << rng.below(8));
                        break;
                    case 3:
                        if (p.siblings.empty()) {
                            p.siblings.push_back({leaf, Side::Right});
                        } else {
                            auto& s = p.siblings[rng.below(p.siblings.size())];
                            s.side = s.side == Side::Left ? Side::Right : Side::Left;
                        }
                        break;
                    case 4:
                        if (p.siblings.empty()) {
                            p.siblings.push_back({leaf, Side::Left});
                        } else {
                            p.siblings.pop_back();
                        }
                        break;
                    case 5:
                        // Another leaf's digest presented with this leaf's path.
                        if (n == 1) {
                            l = hash(std::string("other"));
                        } else {
                            l = h.tree.leaf((i + 1 + rng.below(n - 1)) % n);
                        }
                        break;
                    default:
                        p.siblings.push_back({hash(std::to_string(m)), Side::Right});
                        break;
                }
                CHECK_FALSE(verify(r, l, p));
                ++mutated;
            }
        }
    }
    CHECK(honest * 10 == mutated);
    CHECK(mutated >= 10'000);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(10));
}
