#include "bcfl/merkle/merkle_tree.hpp"

#include <string>

#include "bcfl/core/crypto.hpp"

namespace bcfl::merkle {

namespace {

constexpr std::uint8_t kLeafTag = 0x00;
constexpr std::uint8_t kInternalTag = 0x01;

}  // namespace

Bytes UpdateRecord::serialize() const {
    ByteWriter w;
    w.u32(worker.value).u32(round).raw(local_model.serialize()).digest(global_model_digest);
    return std::move(w).take();
}

UpdateRecord UpdateRecord::deserialize(ByteView bytes) {
    ByteReader r(bytes);
    UpdateRecord rec;
    rec.worker.value = r.u32();
    rec.round = r.u32();
    auto dim = r.u32();
    std::vector<double> weights(dim);
    for (auto& v : weights) v = r.f64();
    rec.local_model = ModelParams(std::move(weights));
    rec.global_model_digest = r.digest();
    r.expect_done();
    return rec;
}

Digest leaf_digest_of_bytes(ByteView serialized_record) {
    ByteWriter w;
    w.u8(kLeafTag).raw(serialized_record);
    return hash(w.bytes());
}

Digest leaf_digest(const UpdateRecord& record) { return leaf_digest_of_bytes(record.serialize()); }

Digest internal_digest(const Digest& left, const Digest& right) {
    ByteWriter w;
    w.u8(kInternalTag).digest(left).digest(right);
    return hash(w.bytes());
}

std::size_t ceil_log2(std::size_t n) {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    return bits;
}

std::vector<Side> expected_sides(std::size_t index, std::size_t count) {
    std::vector<Side> sides;
    std::size_t pos = index;
    std::size_t width = count;
    while (width > 1) {
        if (pos % 2 == 1) {
            sides.push_back(Side::Left);
        } else if (pos + 1 < width) {
            sides.push_back(Side::Right);
        }
        // else: unpaired last node, promoted without a step
        pos /= 2;
        width = (width + 1) / 2;
    }
    return sides;
}

void MerkleTree::append(const UpdateRecord& record) {
    if (record.round != size()) {
        throw MerkleError("non-consecutive round " + std::to_string(record.round) + " appended to tree of " +
                          std::to_string(size()) + " leaves");
    }
    if (owner_ && *owner_ != record.worker) {
        throw MerkleError("record of worker " + std::to_string(record.worker.value) + " appended to tree of worker " +
                          std::to_string(owner_->value));
    }
    owner_ = record.worker;
    if (levels_.empty()) levels_.emplace_back();
    levels_.front().push_back(leaf_digest(record));
    rebuild();
}

void MerkleTree::rebuild() {
    // Only the rightmost node of each level can change after an append.
    std::size_t level = 0;
    while (levels_[level].size() > 1) {
        if (level + 1 == levels_.size()) levels_.emplace_back();
        const auto& below = levels_[level];
        const std::size_t n = below.size();
        auto& above = levels_[level + 1];
        above.resize((n + 1) / 2);
        above.back() = n % 2 == 1 ? below.back() : internal_digest(below[n - 2], below[n - 1]);
        ++level;
    }
    levels_.resize(level + 1);
}

Digest MerkleTree::root() const {
    if (empty()) throw MerkleError("empty tree has no root");
    return levels_.back().front();
}

const Digest& MerkleTree::leaf(std::size_t index) const {
    if (index >= size()) throw MerkleError("leaf index out of range");
    return levels_.front()[index];
}

MerkleTree MerkleTree::prefix(std::size_t count) const {
    if (count > size()) throw MerkleError("prefix longer than the tree");
    MerkleTree out;
    if (count == 0) return out;
    out.owner_ = owner_;
    out.levels_.emplace_back();
    for (std::size_t i = 0; i < count; ++i) {
        out.levels_.front().push_back(levels_.front()[i]);
        out.rebuild();
    }
    return out;
}

MerklePath MerkleTree::prove(std::size_t index) const {
    if (index >= size()) {
        throw MerkleError("proof index " + std::to_string(index) + " out of range for " + std::to_string(size()) +
                          " leaves");
    }
    MerklePath path;
    path.leaf_index = index;
    path.leaf_count = size();
    std::size_t pos = index;
    for (std::size_t level = 0; level + 1 < levels_.size(); ++level) {
        const auto& nodes = levels_[level];
        if (pos % 2 == 1) {
            path.siblings.push_back({nodes[pos - 1], Side::Left});
        } else if (pos + 1 < nodes.size()) {
            path.siblings.push_back({nodes[pos + 1], Side::Right});
        }
        pos /= 2;
    }
    return path;
}

MerkleTree append_leaf(MerkleTree tree, const UpdateRecord& record) {
    tree.append(record);
    return tree;
}

bool verify(const Digest& root, const Digest& leaf, const MerklePath& path) {
    if (path.leaf_count == 0 || path.leaf_index >= path.leaf_count) return false;
    auto sides = expected_sides(path.leaf_index, path.leaf_count);
    if (sides.size() != path.siblings.size()) return false;
    Digest acc = leaf;
    for (std::size_t i = 0; i < sides.size(); ++i) {
        const auto& step = path.siblings[i];
        if (step.side != sides[i]) return false;
        acc = step.side == Side::Left ? internal_digest(step.sibling, acc) : internal_digest(acc, step.sibling);
    }
    return acc == root;
}

std::vector<std::pair<UpdateRecord, MerklePath>> open_window(const MerkleTree& tree,
                                                             const std::vector<UpdateRecord>& records,
                                                             const Window& window) {
    if (window.start > window.end) throw MerkleError("window start after end");
    if (window.end >= tree.size() || window.end >= records.size()) {
        throw MerkleError("window end " + std::to_string(window.end) + " beyond history of " +
                          std::to_string(tree.size()));
    }
    std::vector<std::pair<UpdateRecord, MerklePath>> out;
    out.reserve(window.length());
    for (Round r = window.start; r <= window.end; ++r) out.emplace_back(records[r], tree.prove(r));
    return out;
}

}  // namespace bcfl::merkle
