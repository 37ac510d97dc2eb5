#pragma once

// Fixed-width bit strings used across the protocol.
//
// Bit order is big-endian everywhere: bit 0 is the most significant bit of
// the first byte (or of the integer, for the narrow types). Hex renderings
// use the same order, so bit 0 is the top bit of the first hex digit.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ldacs {

inline constexpr std::size_t kChallengeBits = 32;
inline constexpr std::size_t kResponseBits = 128;
inline constexpr std::size_t kResponseBytes = kResponseBits / 8;
inline constexpr std::size_t kIdBits = 24;

using Bytes = std::vector<std::uint8_t>;

/// 32-bit PUF challenge.
class Challenge {
 public:
  constexpr Challenge() = default;
  constexpr explicit Challenge(std::uint32_t value) : value_(value) {}

  /// Builds from an explicit bit vector; throws EncodingError unless it has 32 entries.
  static Challenge from_bits(std::span<const std::uint8_t> bits);
  static Challenge from_hex(std::string_view hex);

  constexpr std::uint32_t value() const { return value_; }
  constexpr int bit(std::size_t i) const { return static_cast<int>((value_ >> (31 - i)) & 1U); }
  std::array<std::uint8_t, 4> to_bytes() const;
  std::string to_hex() const;

  friend constexpr auto operator<=>(Challenge, Challenge) = default;

 private:
  std::uint32_t value_ = 0;
};

/// 128-bit PUF response.
class Response {
 public:
  using Storage = std::array<std::uint8_t, kResponseBytes>;

  constexpr Response() = default;
  constexpr explicit Response(const Storage& bytes) : bytes_(bytes) {}

  static Response from_bits(std::span<const std::uint8_t> bits);
  static Response from_bytes(std::span<const std::uint8_t> bytes);
  static Response from_hex(std::string_view hex);

  int bit(std::size_t i) const { return (bytes_[i / 8] >> (7 - i % 8)) & 1; }
  void set_bit(std::size_t i, int v) {
    const auto mask = static_cast<std::uint8_t>(1U << (7 - i % 8));
    bytes_[i / 8] = v ? static_cast<std::uint8_t>(bytes_[i / 8] | mask)
                      : static_cast<std::uint8_t>(bytes_[i / 8] & ~mask);
  }
  void flip_bit(std::size_t i) { bytes_[i / 8] ^= static_cast<std::uint8_t>(1U << (7 - i % 8)); }

  const Storage& bytes() const { return bytes_; }
  std::string to_hex() const;

  friend bool operator==(const Response&, const Response&) = default;

 private:
  Storage bytes_{};
};

/// Number of differing bits.
int hamming_distance(const Response& a, const Response& b);

/// 24-bit identifier; backs both the ICAO address and the pseudo-address.
template <typename Tag>
class Id24 {
 public:
  constexpr Id24() = default;
  constexpr explicit Id24(std::uint32_t value) : value_(value & 0xFFFFFFU) {}

  constexpr std::uint32_t value() const { return value_; }
  std::array<std::uint8_t, 3> to_bytes() const {
    return {static_cast<std::uint8_t>(value_ >> 16), static_cast<std::uint8_t>(value_ >> 8),
            static_cast<std::uint8_t>(value_)};
  }
  static Id24 from_bytes(std::span<const std::uint8_t, 3> b) {
    return Id24((std::uint32_t{b[0]} << 16) | (std::uint32_t{b[1]} << 8) | b[2]);
  }

  friend constexpr auto operator<=>(Id24, Id24) = default;

 private:
  std::uint32_t value_ = 0;
};

struct IcaoTag {};
struct TauTag {};
using IcaoAddress = Id24<IcaoTag>;
using Tau = Id24<TauTag>;

// Hex helpers. Output is lowercase; input accepts either case.
std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);
std::string id24_to_hex(std::uint32_t value);
std::uint32_t id24_from_hex(std::string_view hex);

}  // namespace ldacs
