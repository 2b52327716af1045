#pragma once

// Shared domain vocabulary: node identifiers, rounds, model parameters,
// digests and the little-endian byte codec every hash/sign input goes through.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bcfl {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Iteration counter. Round 0 is the genesis/initialization round.
using Round = std::uint32_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

struct WorkerId {
    std::uint32_t value = 0;
    auto operator<=>(const WorkerId&) const = default;
};

enum class MinerRole : std::uint8_t { FL = 0, MON = 1 };

struct MinerId {
    std::uint32_t value = 0;
    MinerRole role = MinerRole::FL;
    auto operator<=>(const MinerId&) const = default;
};

std::string_view to_string(MinerRole role);

enum class NodeKind : std::uint8_t { Worker = 0, Miner = 1 };

/// Identity of any signing node.
struct NodeId {
    NodeKind kind = NodeKind::Worker;
    std::uint32_t index = 0;

    static NodeId worker(WorkerId w) { return {NodeKind::Worker, w.value}; }
    static NodeId miner(MinerId m) { return {NodeKind::Miner, m.value}; }

    auto operator<=>(const NodeId&) const = default;
};

std::string to_string(NodeId id);

struct Digest {
    static constexpr std::size_t size = 32;
    std::array<std::uint8_t, size> bytes{};

    std::string hex() const;
    static Digest from_hex(std::string_view hex);
    bool is_zero() const;

    auto operator<=>(const Digest&) const = default;
};

/// Flat weight vector of the shared classifier (bias included).
///
/// Canonical byte layout, used as the hashing and signing input:
///   u32 little-endian dimension, then each weight as a little-endian
///   IEEE-754 binary64 in index order.
class ModelParams {
public:
    ModelParams() = default;
    explicit ModelParams(std::vector<double> weights) : weights_(std::move(weights)) {}

    std::size_t dimension() const { return weights_.size(); }
    std::span<const double> weights() const { return weights_; }
    std::span<double> weights() { return weights_; }
    double operator[](std::size_t i) const { return weights_[i]; }
    double& operator[](std::size_t i) { return weights_[i]; }

    bool all_finite() const;

    Bytes serialize() const;
    static ModelParams deserialize(ByteView bytes);
    std::size_t serialized_size() const { return 4 + 8 * weights_.size(); }

    bool operator==(const ModelParams&) const = default;

private:
    std::vector<double> weights_;
};

/// Append-only little-endian encoder.
class ByteWriter {
public:
    ByteWriter& u8(std::uint8_t v);
    ByteWriter& u32(std::uint32_t v);
    ByteWriter& u64(std::uint64_t v);
    ByteWriter& f64(double v);
    ByteWriter& digest(const Digest& d);
    ByteWriter& raw(ByteView bytes);
    /// u32 length prefix followed by the bytes.
    ByteWriter& blob(ByteView bytes);
    ByteWriter& text(std::string_view s);

    const Bytes& bytes() const& { return out_; }
    Bytes take() && { return std::move(out_); }

private:
    Bytes out_;
};

/// Bounds-checked reader for ByteWriter output. Throws DecodeError on
/// truncation.
class ByteReader {
public:
    explicit ByteReader(ByteView bytes) : data_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    Digest digest();
    Bytes raw(std::size_t n);
    Bytes blob();

    bool done() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_done() const;

private:
    void need(std::size_t n) const;

    ByteView data_;
    std::size_t pos_ = 0;
};

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

}  // namespace bcfl
