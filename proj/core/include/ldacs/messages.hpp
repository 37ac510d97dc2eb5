#pragma once

// Handshake wire format. Every frame is one tag byte followed by fixed-width
// big-endian fields in declared order:
//
//   M1 = 0x01 | tau(3) | N1(16)
//   M2 = 0x02 | omega(4) | N2(16) | len(2) | kem public key | mac(32)
//   M3 = 0x03 | len(2) | kem ciphertext | mac(32)
//   M4 = 0x04 | mac(32)
//
// The four-message flow is a reconstruction: tau travels in clear in M1,
// omega goes tower -> aircraft in M2, the KEM runs across M2/M3 and M4
// confirms the derived key. Decoders reject any frame whose length does
// not match its declared layout exactly.

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "ldacs/bits.hpp"
#include "ldacs/errors.hpp"
#include "ldacs/hash.hpp"

namespace ldacs::proto {

inline constexpr std::size_t kNonceBytes = 16;
using Nonce = std::array<std::uint8_t, kNonceBytes>;

enum class MessageKind : std::uint8_t { kM1 = 0x01, kM2 = 0x02, kM3 = 0x03, kM4 = 0x04 };

std::string to_string(MessageKind kind);

class DecodeError : public EncodingError {
 public:
  using EncodingError::EncodingError;
};

/// Tag of a frame; throws DecodeError on an empty frame or unknown tag.
MessageKind frame_kind(std::span<const std::uint8_t> frame);

struct M1 {
  static constexpr std::size_t kSize = 1 + 3 + kNonceBytes;
  Tau tau;
  Nonce n1{};

  Bytes encode() const;
  static M1 decode(std::span<const std::uint8_t> frame);
  friend bool operator==(const M1&, const M1&) = default;
};

struct M2 {
  std::uint32_t omega = 0;
  Nonce n2{};
  Bytes kem_public_key;
  Digest mac{};

  /// Everything up to (not including) the mac field.
  Bytes encode_unauthenticated() const;
  Bytes encode() const;
  static M2 decode(std::span<const std::uint8_t> frame);
  friend bool operator==(const M2&, const M2&) = default;
};

struct M3 {
  Bytes kem_ciphertext;
  Digest mac{};

  Bytes encode_unauthenticated() const;
  Bytes encode() const;
  static M3 decode(std::span<const std::uint8_t> frame);
  friend bool operator==(const M3&, const M3&) = default;
};

struct M4 {
  static constexpr std::size_t kSize = 1 + 32;
  Digest mac{};

  Bytes encode() const;
  static M4 decode(std::span<const std::uint8_t> frame);
  friend bool operator==(const M4&, const M4&) = default;
};

}  // namespace ldacs::proto
