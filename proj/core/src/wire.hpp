#pragma once

// Big-endian frame builder and strict parser shared by the message codecs.

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "ldacs/bits.hpp"
#include "ldacs/messages.hpp"

namespace ldacs::wire {

class Writer {
 public:
  Writer() = default;
  explicit Writer(std::uint8_t tag) { out_.push_back(tag); }
  Writer& bytes(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
    return *this;
  }
  Writer& u16(std::size_t v) {
    if (v > 0xFFFF) throw EncodingError("field longer than 65535 bytes");
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
    return *this;
  }
  Writer& u32(std::uint64_t v) {
    if (v > 0xFFFFFFFFULL) throw EncodingError("value exceeds 32 bits");
    for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
  }
  Writer& u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
  }
  Writer& prefixed(std::span<const std::uint8_t> b) { return u16(b.size()).bytes(b); }
  Writer& prefixed32(std::span<const std::uint8_t> b) { return u32(b.size()).bytes(b); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

/// Every read past the end and every unread trailing byte is a DecodeError.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  Reader(std::span<const std::uint8_t> in, std::uint8_t tag, const std::string& name) : in_(in) {
    if (in.empty() || in[0] != tag) throw proto::DecodeError("expected " + name);
    pos_ = 1;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (in_.size() - pos_ < n) throw proto::DecodeError("frame truncated");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <std::size_t N>
  std::array<std::uint8_t, N> fixed() {
    std::array<std::uint8_t, N> out{};
    const auto s = take(N);
    std::copy(s.begin(), s.end(), out.begin());
    return out;
  }
  std::uint64_t be(std::size_t n) {
    std::uint64_t v = 0;
    for (auto b : take(n)) v = (v << 8) | b;
    return v;
  }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  Bytes prefixed() {
    const auto s = take(u16());
    return Bytes(s.begin(), s.end());
  }
  Bytes prefixed32() {
    const auto s = take(u32());
    return Bytes(s.begin(), s.end());
  }
  std::size_t position() const { return pos_; }
  void finish() const {
    if (pos_ != in_.size()) throw proto::DecodeError("trailing bytes in frame");
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace ldacs::wire
