#pragma once

// Per-worker append-only Merkle tree over the worker's chronological update
// history.
//
// Hashing rules (these fix roots bit-for-bit):
//   leaf     = SHA256(0x00 || serialized UpdateRecord)
//   internal = SHA256(0x01 || left || right)
//   An unpaired last node at any level is promoted to the next level
//   unchanged; it is never duplicated.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "bcfl/core/types.hpp"

namespace bcfl::merkle {

class MerkleError : public Error {
public:
    using Error::Error;
};

/// One round of a worker's history: the local model it produced and the
/// digest of the global model it trained from.
struct UpdateRecord {
    WorkerId worker;
    Round round = 0;
    ModelParams local_model;
    Digest global_model_digest;

    /// u32 worker | u32 round | model (canonical layout) | 32-byte GM digest.
    Bytes serialize() const;
    static UpdateRecord deserialize(ByteView bytes);

    bool operator==(const UpdateRecord&) const = default;
};

Digest leaf_digest(const UpdateRecord& record);
Digest leaf_digest_of_bytes(ByteView serialized_record);
Digest internal_digest(const Digest& left, const Digest& right);

/// Which side of the running hash the sibling sits on.
enum class Side : std::uint8_t { Left = 0, Right = 1 };

struct PathStep {
    Digest sibling;
    Side side = Side::Right;
    bool operator==(const PathStep&) const = default;
};

struct MerklePath {
    std::size_t leaf_index = 0;
    /// Number of leaves in the tree the path was generated from.
    std::size_t leaf_count = 0;
    std::vector<PathStep> siblings;

    /// Bytes a prover ships: 32 per sibling plus one side byte each.
    std::size_t wire_size() const { return siblings.size() * (Digest::size + 1); }
    bool operator==(const MerklePath&) const = default;
};

/// Sibling sides the path for `index` in a tree of `count` leaves must
/// have, bottom-up. Promoted levels contribute no step.
std::vector<Side> expected_sides(std::size_t index, std::size_t count);

/// ceil(log2(n)) for n >= 1.
std::size_t ceil_log2(std::size_t n);

/// Inclusive round range audited in one monitoring pass.
struct Window {
    Round start = 0;
    Round end = 0;

    std::size_t length() const { return std::size_t{end} - start + 1; }
    bool operator==(const Window&) const = default;
};

class MerkleTree {
public:
    MerkleTree() = default;

    /// Appends the next record. Its round must equal the current leaf count
    /// and its worker must match earlier records; otherwise MerkleError
    /// (gap, replay or foreign record).
    void append(const UpdateRecord& record);

    std::size_t size() const { return levels_.empty() ? 0 : levels_.front().size(); }
    bool empty() const { return size() == 0; }

    /// Throws MerkleError on an empty tree.
    Digest root() const;
    /// Throws MerkleError when index >= size().
    MerklePath prove(std::size_t index) const;
    const Digest& leaf(std::size_t index) const;

    /// Tree over the first `count` leaves, as it stood when that many
    /// records had been appended. Throws MerkleError if count > size().
    MerkleTree prefix(std::size_t count) const;

private:
    void rebuild();

    std::optional<WorkerId> owner_;
    std::vector<std::vector<Digest>> levels_;  // levels_[0] = leaves, back() = {root}
};

/// Value-semantics append: returns a new tree with `record` added.
MerkleTree append_leaf(MerkleTree tree, const UpdateRecord& record);

/// True iff folding `leaf` along `path` reproduces `root` and the path's
/// step count and sides match its (index, count) position.
bool verify(const Digest& root, const Digest& leaf, const MerklePath& path);

/// Records and proofs for every round of `window`. `records` is the
/// worker's full history (records[i].round == i). Throws MerkleError if
/// the window extends past the history.
std::vector<std::pair<UpdateRecord, MerklePath>> open_window(const MerkleTree& tree,
                                                             const std::vector<UpdateRecord>& records,
                                                             const Window& window);

}  // namespace bcfl::merkle
