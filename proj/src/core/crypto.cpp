#include "bcfl/core/crypto.hpp"

#include <sodium.h>

#include <cstring>

#include "bcfl/core/random.hpp"

namespace bcfl {

namespace {

void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw Error("libsodium initialization failed");
}

}  // namespace

Digest hash(ByteView bytes) {
    Digest d;
    crypto_hash_sha256(d.bytes.data(), bytes.data(), bytes.size());
    return d;
}

Digest hash(std::string_view text) {
    return hash(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Bytes Signature::serialize() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(signer.kind)).u32(signer.index).digest(payload_digest).blob(bytes);
    return std::move(w).take();
}

Signature Signature::deserialize(ByteReader& reader) {
    Signature s;
    auto kind = reader.u8();
    if (kind > 1) throw DecodeError("unknown signer kind");
    s.signer.kind = static_cast<NodeKind>(kind);
    s.signer.index = reader.u32();
    s.payload_digest = reader.digest();
    s.bytes = reader.blob();
    return s;
}

KeyPair KeyPair::derive(std::uint64_t run_seed, NodeId owner) {
    ensure_sodium();
    std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed{};
    for (std::size_t i = 0; i < seed.size() / 8; ++i) {
        auto word = mix_seed({run_seed, static_cast<std::uint64_t>(Stream::Keys),
                              static_cast<std::uint64_t>(owner.kind), owner.index, i});
        for (int b = 0; b < 8; ++b) seed[8 * i + b] = static_cast<std::uint8_t>(word >> (8 * b));
    }
    KeyPair kp;
    kp.owner_ = owner;
    crypto_sign_seed_keypair(kp.public_key_.bytes.data(), kp.secret_key_.data(), seed.data());
    sodium_memzero(seed.data(), seed.size());
    return kp;
}

Signature KeyPair::sign(ByteView payload) const {
    Signature s;
    s.signer = owner_;
    s.payload_digest = hash(payload);
    s.bytes.resize(crypto_sign_BYTES);
    crypto_sign_detached(s.bytes.data(), nullptr, s.payload_digest.bytes.data(), Digest::size,
                         secret_key_.data());
    return s;
}

bool verify(const PublicKey& key, ByteView payload, const Signature& sig) {
    ensure_sodium();
    if (sig.bytes.size() != crypto_sign_BYTES) return false;
    if (hash(payload) != sig.payload_digest) return false;
    return crypto_sign_verify_detached(sig.bytes.data(), sig.payload_digest.bytes.data(), Digest::size,
                                       key.bytes.data()) == 0;
}

std::optional<PublicKey> KeyDirectory::find(NodeId id) const {
    auto it = keys_.find(id);
    if (it == keys_.end()) return std::nullopt;
    return it->second;
}

bool KeyDirectory::verify(ByteView payload, const Signature& sig) const {
    auto key = find(sig.signer);
    return key && bcfl::verify(*key, payload, sig);
}

}  // namespace bcfl
