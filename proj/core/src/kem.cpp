#include "ldacs/kem.hpp"

#include <algorithm>

#include "ldacs/errors.hpp"
#include "ldacs/rng.hpp"

namespace ldacs::kem {

namespace {

constexpr std::size_t kCheckBytes = kCiphertextBytes - 32;

Bytes random_bytes(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next_u64() >> 56);
  return out;
}

Digest public_from_secret(std::span<const std::uint8_t> sk) { return sha256({as_bytes("kem.pk"), sk}); }

}  // namespace

KeyPair keygen(std::uint64_t seed) {
  KeyPair kp;
  kp.secret_key = random_bytes(seed, kSecretKeyBytes);
  const Digest pk = public_from_secret(kp.secret_key);
  kp.public_key.assign(pk.begin(), pk.end());
  return kp;
}

Encapsulation encapsulate(std::span<const std::uint8_t> public_key, std::uint64_t seed) {
  if (public_key.size() != kPublicKeyBytes) throw EncodingError("kem: public key must be 32 bytes");
  const Bytes m = random_bytes(seed, 32);
  const Digest mask = sha256({as_bytes("kem.mask"), public_key});
  const Digest check = sha256({as_bytes("kem.check"), m, public_key});

  Encapsulation e;
  e.ciphertext.resize(kCiphertextBytes);
  for (std::size_t i = 0; i < 32; ++i) e.ciphertext[i] = m[i] ^ mask[i];
  std::copy_n(check.begin(), kCheckBytes, e.ciphertext.begin() + 32);
  e.shared_secret = sha256({as_bytes("kem.ss"), m, e.ciphertext});
  return e;
}

std::optional<Digest> decapsulate(std::span<const std::uint8_t> secret_key,
                                  std::span<const std::uint8_t> ciphertext) {
  if (secret_key.size() != kSecretKeyBytes || ciphertext.size() != kCiphertextBytes) return std::nullopt;
  const Digest pk = public_from_secret(secret_key);
  const Digest mask = sha256({as_bytes("kem.mask"), pk});
  Bytes m(32);
  for (std::size_t i = 0; i < 32; ++i) m[i] = ciphertext[i] ^ mask[i];
  const Digest check = sha256({as_bytes("kem.check"), m, pk});
  if (!std::equal(check.begin(), check.begin() + kCheckBytes, ciphertext.begin() + 32)) return std::nullopt;
  return sha256({as_bytes("kem.ss"), m, ciphertext});
}

}  // namespace ldacs::kem
