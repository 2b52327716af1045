#include "bcfl/ledger/ledger.hpp"

#include "json.hpp"

#include <algorithm>
#include <ostream>

#include "bcfl/fl/engine.hpp"

namespace bcfl::ledger {

namespace {

constexpr std::string_view kRootTag = "bcfl/root/v1";

void write_root(ByteWriter& w, const RootEntry& e) {
    w.u32(e.worker.value).u32(e.round).digest(e.root).raw(e.signature.serialize());
}

RootEntry read_root(ByteReader& r) {
    RootEntry e;
    e.worker.value = r.u32();
    e.round = r.u32();
    e.root = r.digest();
    e.signature = Signature::deserialize(r);
    return e;
}

}  // namespace

Bytes root_signing_payload(WorkerId worker, Round round, const Digest& root) {
    ByteWriter w;
    w.text(kRootTag).u32(worker.value).u32(round).digest(root);
    return std::move(w).take();
}

Bytes Block::signing_bytes() const {
    ByteWriter w;
    w.u32(height).digest(prev_digest).digest(global_model_digest).f64(timestamp_ms);
    w.u32(static_cast<std::uint32_t>(merkle_roots.size()));
    for (const auto& e : merkle_roots) write_root(w, e);
    w.u8(model_payload ? 1 : 0);
    if (model_payload) w.blob(model_payload->serialize());
    return std::move(w).take();
}

Bytes Block::serialize() const {
    ByteWriter w;
    w.raw(signing_bytes());
    w.u32(static_cast<std::uint32_t>(signatures.size()));
    for (const auto& s : signatures) w.raw(s.serialize());
    return std::move(w).take();
}

Block Block::deserialize(ByteView bytes) {
    ByteReader r(bytes);
    Block b;
    b.height = r.u32();
    b.prev_digest = r.digest();
    b.global_model_digest = r.digest();
    b.timestamp_ms = r.f64();
    auto n_roots = r.u32();
    if (n_roots > r.remaining()) throw DecodeError("root count exceeds payload");
    for (std::uint32_t i = 0; i < n_roots; ++i) b.merkle_roots.push_back(read_root(r));
    auto has_model = r.u8();
    if (has_model > 1) throw DecodeError("bad model flag");
    if (has_model) b.model_payload = ModelParams::deserialize(r.blob());
    auto n_sigs = r.u32();
    if (n_sigs > r.remaining()) throw DecodeError("signature count exceeds payload");
    for (std::uint32_t i = 0; i < n_sigs; ++i) b.signatures.push_back(Signature::deserialize(r));
    r.expect_done();
    return b;
}

Digest Block::digest() const { return hash(serialize()); }

std::size_t quorum_size(std::size_t miner_count) { return miner_count / 2 + 1; }

std::string to_string(RootStatus status) {
    switch (status) {
        case RootStatus::Accepted:
            return "accepted";
        case RootStatus::BadSignature:
            return "bad-signature";
        case RootStatus::Duplicate:
            return "duplicate";
        case RootStatus::WrongSigner:
            return "wrong-signer";
    }
    return "unknown";
}

RootStatus PendingBlock::record_root(WorkerId worker, Round round, const Digest& root, const Signature& sig,
                                     const PublicKey& worker_key) {
    if (sig.signer != NodeId::worker(worker)) return RootStatus::WrongSigner;
    if (!verify(worker_key, root_signing_payload(worker, round, root), sig)) return RootStatus::BadSignature;
    auto [it, inserted] = roots_.try_emplace({round, worker}, RootEntry{worker, round, root, sig});
    (void)it;
    return inserted ? RootStatus::Accepted : RootStatus::Duplicate;
}

Block PendingBlock::build() const {
    if (!global_model_digest_) throw LedgerError("block proposed before aggregation set the global model");
    Block b;
    b.height = height_;
    b.prev_digest = prev_digest_;
    b.global_model_digest = *global_model_digest_;
    b.model_payload = model_payload_;
    b.timestamp_ms = timestamp_ms_;
    for (const auto& [key, entry] : roots_) b.merkle_roots.push_back(entry);
    return b;
}

Block propose_and_commit(const PendingBlock& pending, std::span<const MinerSigner> miners) {
    const auto online = static_cast<std::size_t>(
        std::count_if(miners.begin(), miners.end(), [](const MinerSigner& m) { return m.online && m.keys; }));
    if (online < quorum_size(miners.size())) {
        throw QuorumUnreachable("only " + std::to_string(online) + " of " + std::to_string(miners.size()) +
                                " miners online; quorum needs " + std::to_string(quorum_size(miners.size())));
    }
    Block block = pending.build();
    const Bytes payload = block.signing_bytes();
    for (const auto& m : miners) {
        if (m.online && m.keys) block.signatures.push_back(m.keys->sign(payload));
    }
    return block;
}

Chain::Chain(Block genesis) { blocks_.push_back(std::move(genesis)); }

void Chain::append(Block block) {
    if (blocks_.empty()) {
        if (block.height != 0) throw LedgerError("first block must be genesis");
    } else {
        if (block.height != blocks_.back().height + 1) throw LedgerError("non-consecutive block height");
        if (block.prev_digest != blocks_.back().digest()) throw LedgerError("block does not link to tip");
    }
    blocks_.push_back(std::move(block));
}

const Block& Chain::tip() const {
    if (blocks_.empty()) throw LedgerError("empty chain");
    return blocks_.back();
}

const Block& Chain::at(Round height) const {
    if (height >= blocks_.size()) throw LedgerError("unknown height " + std::to_string(height));
    return blocks_[height];
}

Digest Chain::global_model_at(Round height) const { return at(height).global_model_digest; }

namespace {

ValidationReport fail(Round height, std::string reason) { return {false, height, std::move(reason)}; }

ValidationReport validate_blocks(const std::vector<Block>& blocks, const KeyDirectory& keys,
                                 std::size_t miner_count) {
    if (blocks.empty()) return {false, std::nullopt, "empty chain"};
    const std::size_t quorum = quorum_size(miner_count);
    Digest prev;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        const auto h = static_cast<Round>(i);
        if (b.height != h) return fail(h, "height mismatch");
        if (i == 0) {
            if (!b.prev_digest.is_zero()) return fail(h, "genesis has a parent");
            if (!b.merkle_roots.empty() || !b.signatures.empty()) return fail(h, "genesis carries roots or signatures");
        } else {
            if (b.prev_digest != prev) return fail(h, "broken hash link");
            const Bytes payload = b.signing_bytes();
            std::set<NodeId> signers;
            for (const auto& s : b.signatures) {
                if (s.signer.kind != NodeKind::Miner || s.signer.index >= miner_count)
                    return fail(h, "signature by a non-miner");
                if (!signers.insert(s.signer).second) return fail(h, "repeated miner signature");
                if (!keys.verify(payload, s)) return fail(h, "invalid miner signature");
            }
            if (signers.size() < quorum) return fail(h, "below quorum");
            std::optional<std::pair<Round, WorkerId>> last;
            for (const auto& e : b.merkle_roots) {
                std::pair<Round, WorkerId> key{e.round, e.worker};
                if (last && !(*last < key)) return fail(h, "roots out of canonical order");
                last = key;
                if (e.signature.signer != NodeId::worker(e.worker)) return fail(h, "root signed by another node");
                if (!keys.verify(root_signing_payload(e.worker, e.round, e.root), e.signature))
                    return fail(h, "invalid root signature");
            }
        }
        if (b.model_payload && model_digest(*b.model_payload) != b.global_model_digest)
            return fail(h, "on-chain model does not match its digest");
        prev = b.digest();
    }
    return {};
}

}  // namespace

ValidationReport Chain::validate(const KeyDirectory& keys, std::size_t miner_count) const {
    return validate_blocks(blocks_, keys, miner_count);
}

ValidationReport validate_serialized(std::span<const Bytes> serialized_blocks, const KeyDirectory& keys,
                                     std::size_t miner_count) {
    std::vector<Block> blocks;
    blocks.reserve(serialized_blocks.size());
    for (std::size_t i = 0; i < serialized_blocks.size(); ++i) {
        try {
            blocks.push_back(Block::deserialize(serialized_blocks[i]));
        } catch (const DecodeError& e) {
            return fail(static_cast<Round>(i), std::string("undecodable block: ") + e.what());
        }
    }
    return validate_blocks(blocks, keys, miner_count);
}

void Chain::write_jsonl(std::ostream& out) const {
    for (const auto& b : blocks_) {
        nlohmann::ordered_json j;
        j["height"] = b.height;
        j["digest"] = b.digest().hex();
        j["prev_digest"] = b.prev_digest.hex();
        j["global_model_digest"] = b.global_model_digest.hex();
        auto signers = nlohmann::json::array();
        for (const auto& s : b.signatures) signers.push_back(s.signer.index);
        j["signers"] = signers;
        auto roots = nlohmann::json::array();
        for (const auto& e : b.merkle_roots) {
            roots.push_back({{"worker", e.worker.value}, {"round", e.round}, {"root", e.root.hex()}});
        }
        j["roots"] = roots;
        j["on_chain_model"] = b.model_payload.has_value();
        j["timestamp_ms"] = b.timestamp_ms;
        out << j.dump() << '\n';
    }
}

Block genesis(const ModelParams& initial_model) {
    Block b;
    b.height = 0;
    b.global_model_digest = model_digest(initial_model);
    return b;
}

Block genesis(std::uint64_t seed) { return genesis(fl::init_model(seed)); }

Digest model_digest(const ModelParams& params) { return hash(params.serialize()); }

Digest ModelStore::put(const ModelParams& params) {
    auto d = model_digest(params);
    models_.try_emplace(d, params);
    return d;
}

const ModelParams& ModelStore::get(const Digest& digest) const {
    auto it = models_.find(digest);
    if (it == models_.end()) throw LedgerError("no stored model for digest " + digest.hex());
    if (model_digest(it->second) != digest) throw LedgerError("stored model does not hash to its key");
    return it->second;
}

void ModelStore::write_jsonl(std::ostream& out) const {
    for (const auto& [digest, params] : models_) {
        nlohmann::ordered_json j;
        j["digest"] = digest.hex();
        j["weights"] = std::vector<double>(params.weights().begin(), params.weights().end());
        out << j.dump() << '\n';
    }
}

}  // namespace bcfl::ledger
