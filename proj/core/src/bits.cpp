#include "ldacs/bits.hpp"

#include <bit>

#include "ldacs/errors.hpp"

namespace ldacs {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (const auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw EncodingError("hex string has odd length");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw EncodingError("invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

std::string id24_to_hex(std::uint32_t value) {
  const std::uint8_t b[3] = {static_cast<std::uint8_t>(value >> 16),
                             static_cast<std::uint8_t>(value >> 8), static_cast<std::uint8_t>(value)};
  return to_hex(b);
}

std::uint32_t id24_from_hex(std::string_view hex) {
  if (hex.size() != 6) throw EncodingError("24-bit identifier needs 6 hex digits");
  const auto b = from_hex(hex);
  return (std::uint32_t{b[0]} << 16) | (std::uint32_t{b[1]} << 8) | b[2];
}

Challenge Challenge::from_bits(std::span<const std::uint8_t> bits) {
  if (bits.size() != kChallengeBits) {
    throw EncodingError("challenge must be exactly 32 bits, got " + std::to_string(bits.size()));
  }
  std::uint32_t v = 0;
  for (const auto b : bits) v = (v << 1) | (b & 1U);
  return Challenge(v);
}

Challenge Challenge::from_hex(std::string_view hex) {
  if (hex.size() != 8) throw EncodingError("challenge needs 8 hex digits");
  const auto b = ldacs::from_hex(hex);
  return Challenge((std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
                   (std::uint32_t{b[2]} << 8) | b[3]);
}

std::array<std::uint8_t, 4> Challenge::to_bytes() const {
  return {static_cast<std::uint8_t>(value_ >> 24), static_cast<std::uint8_t>(value_ >> 16),
          static_cast<std::uint8_t>(value_ >> 8), static_cast<std::uint8_t>(value_)};
}

std::string Challenge::to_hex() const { return ldacs::to_hex(to_bytes()); }

Response Response::from_bits(std::span<const std::uint8_t> bits) {
  if (bits.size() != kResponseBits) {
    throw EncodingError("response must be exactly 128 bits, got " + std::to_string(bits.size()));
  }
  Response r;
  for (std::size_t i = 0; i < kResponseBits; ++i) r.set_bit(i, bits[i] & 1);
  return r;
}

Response Response::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kResponseBytes) throw EncodingError("response must be exactly 16 bytes");
  Storage s{};
  std::copy(bytes.begin(), bytes.end(), s.begin());
  return Response(s);
}

Response Response::from_hex(std::string_view hex) {
  if (hex.size() != 2 * kResponseBytes) throw EncodingError("response needs 32 hex digits");
  return from_bytes(ldacs::from_hex(hex));
}

std::string Response::to_hex() const { return ldacs::to_hex(bytes_); }

int hamming_distance(const Response& a, const Response& b) {
  int d = 0;
  for (std::size_t i = 0; i < kResponseBytes; ++i) {
    d += std::popcount(static_cast<unsigned>(a.bytes()[i] ^ b.bytes()[i]));
  }
  return d;
}

}  // namespace ldacs
