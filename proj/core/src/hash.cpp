#include "ldacs/hash.hpp"

// The low-level SHA256_* calls are deprecated in OpenSSL 3 but are several
// times faster than EVP for the 19-byte inputs hashed in the attack sweep.
#define OPENSSL_SUPPRESS_DEPRECATED
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <openssl/crypto.h>

namespace ldacs {

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out;
  SHA256_CTX ctx;
  SHA256_Init(&ctx);
  SHA256_Update(&ctx, data.data(), data.size());
  SHA256_Final(out.data(), &ctx);
  return out;
}

Digest sha256(std::initializer_list<std::span<const std::uint8_t>> parts) {
  Digest out;
  SHA256_CTX ctx;
  SHA256_Init(&ctx);
  for (const auto& p : parts) SHA256_Update(&ctx, p.data(), p.size());
  SHA256_Final(out.data(), &ctx);
  return out;
}

Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message) {
  Digest out;
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(),
       out.data(), &len);
  return out;
}

Digest kdf(std::span<const std::uint8_t> secret, std::string_view label,
           std::initializer_list<std::span<const std::uint8_t>> context) {
  Bytes msg(label.begin(), label.end());
  for (const auto& c : context) msg.insert(msg.end(), c.begin(), c.end());
  return hmac_sha256(secret, msg);
}

bool digest_equal(const Digest& a, const Digest& b) {
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace ldacs
