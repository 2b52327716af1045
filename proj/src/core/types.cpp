#include "bcfl/core/types.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace bcfl {

std::string_view to_string(MinerRole role) {
    return role == MinerRole::FL ? "FL" : "MON";
}

std::string to_string(NodeId id) {
    return (id.kind == NodeKind::Worker ? "worker-" : "miner-") + std::to_string(id.index);
}

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string to_hex(ByteView bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw DecodeError("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw DecodeError("invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

std::string Digest::hex() const { return to_hex(bytes); }

Digest Digest::from_hex(std::string_view hex) {
    auto raw = bcfl::from_hex(hex);
    if (raw.size() != size) throw DecodeError("digest must be 32 bytes");
    Digest d;
    std::copy(raw.begin(), raw.end(), d.bytes.begin());
    return d;
}

bool Digest::is_zero() const {
    return std::all_of(bytes.begin(), bytes.end(), [](auto b) { return b == 0; });
}

bool ModelParams::all_finite() const {
    return std::all_of(weights_.begin(), weights_.end(), [](double w) { return std::isfinite(w); });
}

Bytes ModelParams::serialize() const {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(weights_.size()));
    for (double v : weights_) w.f64(v);
    return std::move(w).take();
}

ModelParams ModelParams::deserialize(ByteView bytes) {
    ByteReader r(bytes);
    auto dim = r.u32();
    if (r.remaining() != std::size_t{dim} * 8) throw DecodeError("model payload size does not match dimension");
    std::vector<double> weights(dim);
    for (auto& v : weights) v = r.f64();
    return ModelParams(std::move(weights));
}

ByteWriter& ByteWriter::u8(std::uint8_t v) {
    out_.push_back(v);
    return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
}

ByteWriter& ByteWriter::f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

ByteWriter& ByteWriter::digest(const Digest& d) { return raw(d.bytes); }

ByteWriter& ByteWriter::raw(ByteView bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
    return *this;
}

ByteWriter& ByteWriter::blob(ByteView bytes) {
    u32(static_cast<std::uint32_t>(bytes.size()));
    return raw(bytes);
}

ByteWriter& ByteWriter::text(std::string_view s) {
    return raw(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void ByteReader::need(std::size_t n) const {
    if (remaining() < n) throw DecodeError("truncated input");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_++]} << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{data_[pos_++]} << (8 * i);
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

Digest ByteReader::digest() {
    need(Digest::size);
    Digest d;
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(pos_), Digest::size, d.bytes.begin());
    pos_ += Digest::size;
    return d;
}

Bytes ByteReader::raw(std::size_t n) {
    need(n);
    Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
              data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
}

Bytes ByteReader::blob() { return raw(u32()); }

void ByteReader::expect_done() const {
    if (!done()) throw DecodeError("trailing bytes after payload");
}

}  // namespace bcfl
