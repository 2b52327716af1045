#pragma once

// SHA-256 digests and Ed25519 signatures (libsodium).
//
// Keys are derived deterministically from the run seed so every run is
// reproducible bit-for-bit; Ed25519 signing itself is deterministic.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>

#include "bcfl/core/types.hpp"

namespace bcfl {

Digest hash(ByteView bytes);
Digest hash(std::string_view text);

struct PublicKey {
    std::array<std::uint8_t, 32> bytes{};
    auto operator<=>(const PublicKey&) const = default;
};

struct Signature {
    NodeId signer;
    Digest payload_digest;
    /// 64 bytes when well formed; anything else fails verification.
    Bytes bytes;

    Bytes serialize() const;
    static Signature deserialize(ByteReader& reader);

    bool operator==(const Signature&) const = default;
};

class KeyPair {
public:
    /// Key pair for `owner`, derived from the run seed.
    static KeyPair derive(std::uint64_t run_seed, NodeId owner);

    NodeId owner() const { return owner_; }
    const PublicKey& public_key() const { return public_key_; }

    /// Signs hash(payload).
    Signature sign(ByteView payload) const;

private:
    KeyPair() = default;

    NodeId owner_;
    PublicKey public_key_;
    std::array<std::uint8_t, 64> secret_key_{};
};

/// True iff `sig` is a valid signature by `key` over hash(payload).
bool verify(const PublicKey& key, ByteView payload, const Signature& sig);

/// Public keys of every node in a run. No PKI: keys are registered at run
/// start.
class KeyDirectory {
public:
    void add(NodeId id, const PublicKey& key) { keys_[id] = key; }
    std::optional<PublicKey> find(NodeId id) const;

    /// Looks up the signer's key and verifies; unknown signers fail.
    bool verify(ByteView payload, const Signature& sig) const;

private:
    std::map<NodeId, PublicKey> keys_;
};

}  // namespace bcfl
