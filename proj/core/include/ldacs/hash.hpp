#pragma once

// The single 256-bit hash h used everywhere (pseudo-address, theta, KDF, MAC).
// SHA-256 is the fixed choice; golden vectors in the tests are relative to it.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

#include "ldacs/bits.hpp"

namespace ldacs {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);

/// Hash of the concatenation of all parts, without materializing it.
Digest sha256(std::initializer_list<std::span<const std::uint8_t>> parts);

Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message);

/// KDF(secret, label, context...) = HMAC(secret, label || context...).
Digest kdf(std::span<const std::uint8_t> secret, std::string_view label,
           std::initializer_list<std::span<const std::uint8_t>> context);

/// Constant-time equality for MAC tags.
bool digest_equal(const Digest& a, const Digest& b);

/// First 32 bits of a digest, big-endian.
constexpr std::uint32_t trunc32(const Digest& d) {
  return (std::uint32_t{d[0]} << 24) | (std::uint32_t{d[1]} << 16) | (std::uint32_t{d[2]} << 8) | d[3];
}

/// First 24 bits of a digest, big-endian.
constexpr std::uint32_t trunc24(const Digest& d) {
  return (std::uint32_t{d[0]} << 16) | (std::uint32_t{d[1]} << 8) | d[2];
}

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace ldacs
