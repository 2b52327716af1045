#pragma once

// Quorum-signed chain of per-round blocks. A block carries the digest of the
// round's global model (the payload itself lives in a content-addressed
// off-chain store) and the signed Merkle roots workers committed that round.
//
// Consensus is modelled as signature collection: a block commits once a
// strict majority of all miners have signed it.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bcfl/core/crypto.hpp"
#include "bcfl/core/types.hpp"

namespace bcfl::ledger {

class LedgerError : public Error {
public:
    using Error::Error;
};

/// Consensus could not collect a strict majority of miner signatures.
class QuorumUnreachable : public LedgerError {
public:
    using LedgerError::LedgerError;
};

/// Bytes a worker signs to commit `root` for `round`.
Bytes root_signing_payload(WorkerId worker, Round round, const Digest& root);

struct RootEntry {
    WorkerId worker;
    /// FL round whose history the root commits to.
    Round round = 0;
    Digest root;
    Signature signature;

    bool operator==(const RootEntry&) const = default;
};

struct Block {
    Round height = 0;
    Digest prev_digest;
    Digest global_model_digest;
    /// Sorted by (round, worker); at most one entry per (worker, round).
    std::vector<RootEntry> merkle_roots;
    /// Only present when the run stores models on-chain.
    std::optional<ModelParams> model_payload;
    double timestamp_ms = 0.0;
    std::vector<Signature> signatures;

    /// Everything except the miner signatures; what miners sign.
    Bytes signing_bytes() const;
    Bytes serialize() const;
    static Block deserialize(ByteView bytes);
    /// hash(serialize()); the next block's prev_digest.
    Digest digest() const;
    std::size_t size_bytes() const { return serialize().size(); }

    bool operator==(const Block&) const = default;
};

/// Minimum signatures for a strict majority of `miner_count`.
std::size_t quorum_size(std::size_t miner_count);

enum class RootStatus { Accepted, BadSignature, Duplicate, WrongSigner };
std::string to_string(RootStatus status);

/// Block under construction for one height.
class PendingBlock {
public:
    PendingBlock(Round height, const Digest& prev_digest) : height_(height), prev_digest_(prev_digest) {}

    /// Registers a worker's signed root after checking the signature over
    /// (worker, round, root) with `worker_key`. Bad signatures and repeated
    /// (worker, round) submissions are rejected and nothing is stored.
    RootStatus record_root(WorkerId worker, Round round, const Digest& root, const Signature& sig,
                           const PublicKey& worker_key);

    void set_global_model(const Digest& digest) { global_model_digest_ = digest; }
    void set_model_payload(ModelParams params) { model_payload_ = std::move(params); }
    void set_timestamp(double ms) { timestamp_ms_ = ms; }

    Round height() const { return height_; }
    bool has_global_model() const { return global_model_digest_.has_value(); }
    std::size_t root_count() const { return roots_.size(); }

    /// Unsigned block with roots in canonical order. Throws LedgerError if
    /// no global model digest was set.
    Block build() const;

private:
    Round height_;
    Digest prev_digest_;
    std::optional<Digest> global_model_digest_;
    std::optional<ModelParams> model_payload_;
    double timestamp_ms_ = 0.0;
    std::map<std::pair<Round, WorkerId>, RootEntry> roots_;
};

/// A miner taking part in consensus.
struct MinerSigner {
    MinerId id;
    const KeyPair* keys = nullptr;
    bool online = true;
};

/// Collects signatures from every online miner over the block. Throws
/// QuorumUnreachable when fewer than a strict majority of `miners` are
/// online; the pending state is left untouched in that case.
Block propose_and_commit(const PendingBlock& pending, std::span<const MinerSigner> miners);

struct ValidationReport {
    bool ok = true;
    std::optional<Round> first_bad_height;
    std::string reason;
};

class Chain {
public:
    Chain() = default;
    explicit Chain(Block genesis);

    /// Appends after checking height and link only; full checks are in
    /// validate().
    void append(Block block);

    std::size_t size() const { return blocks_.size(); }
    bool empty() const { return blocks_.empty(); }
    const Block& tip() const;
    const Block& at(Round height) const;
    const std::vector<Block>& blocks() const { return blocks_; }
    std::vector<Block>& mutable_blocks() { return blocks_; }

    /// Global-model digest committed at `height`. Throws LedgerError for an
    /// unknown height.
    Digest global_model_at(Round height) const;

    /// Verifies heights, hash links, miner quorum signatures (block 0 is
    /// the unsigned genesis) and every worker root signature.
    ValidationReport validate(const KeyDirectory& keys, std::size_t miner_count) const;

    /// One JSON object per line: height, digests, signer ids, roots,
    /// simulated timestamp.
    void write_jsonl(std::ostream& out) const;

private:
    std::vector<Block> blocks_;
};

/// Height-0 block for a randomly initialized model.
Block genesis(const ModelParams& initial_model);
/// Genesis of init_model(seed).
Block genesis(std::uint64_t seed);

/// Validates a chain given only its serialized blocks, as an auditor
/// holding raw bytes would. Undecodable bytes count as invalid.
ValidationReport validate_serialized(std::span<const Bytes> serialized_blocks, const KeyDirectory& keys,
                                     std::size_t miner_count);

/// Content-addressed off-chain store for model payloads.
class ModelStore {
public:
    Digest put(const ModelParams& params);
    bool contains(const Digest& digest) const { return models_.count(digest) != 0; }
    /// Throws LedgerError for an unknown digest or a payload whose hash no
    /// longer matches its key.
    const ModelParams& get(const Digest& digest) const;
    std::size_t size() const { return models_.size(); }
    const std::map<Digest, ModelParams>& entries() const { return models_; }

    /// One JSON object per line: {"digest": hex, "weights": [...]}.
    void write_jsonl(std::ostream& out) const;

private:
    std::map<Digest, ModelParams> models_;
};

Digest model_digest(const ModelParams& params);

}  // namespace bcfl::ledger
