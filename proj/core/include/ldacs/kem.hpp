#pragma once

// Simulation-grade key encapsulation.
//
// NOT SECURE. The construction only satisfies the correctness contract
// decapsulate(sk, encapsulate(pk).ciphertext) == encapsulate(pk).shared_secret
// so that handshake logic can be exercised. The masking key is derived from
// the public key, which any observer can recompute.
//
//   pk = H("kem.pk" || sk)
//   ct = (m XOR H("kem.mask" || pk)) || H("kem.check" || m || pk)[0..16)
//   ss = H("kem.ss" || m || ct)

#include <cstdint>
#include <optional>
#include <span>

#include "ldacs/bits.hpp"
#include "ldacs/hash.hpp"

namespace ldacs::kem {

inline constexpr std::size_t kPublicKeyBytes = 32;
inline constexpr std::size_t kSecretKeyBytes = 32;
inline constexpr std::size_t kCiphertextBytes = 48;

struct KeyPair {
  Bytes public_key;
  Bytes secret_key;
};

struct Encapsulation {
  Bytes ciphertext;
  Digest shared_secret;
};

KeyPair keygen(std::uint64_t seed);
/// Throws EncodingError on a public key of the wrong length.
Encapsulation encapsulate(std::span<const std::uint8_t> public_key, std::uint64_t seed);
/// std::nullopt when the ciphertext is malformed or fails its check tag.
std::optional<Digest> decapsulate(std::span<const std::uint8_t> secret_key,
                                  std::span<const std::uint8_t> ciphertext);

}  // namespace ldacs::kem
