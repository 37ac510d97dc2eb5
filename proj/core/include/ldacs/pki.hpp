#pragma once

// Certificate-based mutual authentication between aircraft and tower, as a
// baseline next to the PUF handshake. Nothing here touches PUF state, so
// device aging cannot affect it.
//
// Signatures are Lamport one-time signatures over SHA-256. NOT PRODUCTION
// CRYPTOGRAPHY: every key in the simulation signs many messages, which a
// one-time scheme does not allow. Sizes are in the right ballpark for a
// hash-based post-quantum scheme, which is what the comparison needs.
//
//   sk  = 2 x 256 random 32-byte preimages
//   vk  = h(h(sk[0][0]) || h(sk[1][0]) || ... || h(sk[0][255]) || h(sk[1][255]))
//   sig = for each bit b_i of h(m): sk[b_i][i] || h(sk[1 - b_i][i])     (16384 bytes)
//
// Certificate layout (big-endian, u16/u32 length prefixes):
//   u16 len | subject | u16 len | subject vk | u16 len | issuer |
//   u64 not_before | u64 not_after | u32 len | signature
// The signature covers every byte before its own length prefix.
//
// Handshake (chain depth 2: CA -> entity):
//   P1 a -> t : 0x11 | u32 len | cert_A | N1(16)
//   P2 t -> a : 0x12 | u32 len | cert_T | N2(16) | u16 len | kem pk | u32 len | sig_T(P1 || P2')
//   P3 a -> t : 0x13 | u16 len | kem ct | u32 len | sig_A(P1 || P2 || P3')
//   P4 t -> a : 0x14 | mac(key, "confirm" || h(P1 || P2 || P3))
//   key = KDF(ss, "session", h(P1 || P2 || P3))

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldacs/abort.hpp"
#include "ldacs/bits.hpp"
#include "ldacs/hash.hpp"

namespace ldacs::pki {

inline constexpr std::size_t kSignatureBytes = 2 * 256 * 32;

using VerifyKey = Digest;

struct SigningKey {
  std::vector<Digest> preimages;  // 512 entries, index 2 * i + b
};

struct SignatureKeyPair {
  VerifyKey vk{};
  SigningKey sk;
};

SignatureKeyPair keygen(std::uint64_t seed);
Bytes sign(const SigningKey& sk, std::span<const std::uint8_t> message);
bool verify(const VerifyKey& vk, std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature);

struct Validity {
  std::uint64_t not_before = 0;
  std::uint64_t not_after = 0;
  bool covers(std::uint64_t tick) const { return not_before <= tick && tick <= not_after; }
};

struct Certificate {
  std::string subject;
  VerifyKey subject_vk{};
  std::string issuer;
  Validity validity;
  Bytes signature;

  Bytes to_be_signed() const;
  Bytes encode() const;
  /// Throws proto::DecodeError on malformed input.
  static Certificate decode(std::span<const std::uint8_t> bytes);
  friend bool operator==(const Certificate& a, const Certificate& b) {
    return a.encode() == b.encode();
  }
};

struct CertificateAuthority {
  std::string id;
  SignatureKeyPair keys;
};

CertificateAuthority make_ca(std::string id, std::uint64_t seed);

/// Throws ArgumentError when validity.not_before > validity.not_after.
Certificate ca_issue(const CertificateAuthority& ca, std::string subject, const VerifyKey& subject_vk,
                     Validity validity);

/// True when the certificate's signature verifies under `ca_vk`.
bool verify_certificate(const Certificate& cert, const VerifyKey& ca_vk);

struct Identity {
  std::string id;
  SignatureKeyPair keys;
  Certificate cert;
};

Identity enroll(const CertificateAuthority& ca, std::string id, Validity validity, std::uint64_t seed);

// --- handshake --------------------------------------------------------------

struct PkiSessionKey {
  Digest key{};
  Digest transcript_hash{};
  friend bool operator==(const PkiSessionKey&, const PkiSessionKey&) = default;
};

struct PkiSeeds {
  std::uint64_t aircraft_nonce = 0;
  std::uint64_t tower_nonce = 0;
  std::uint64_t tower_kem = 0;
  std::uint64_t aircraft_kem = 0;
  static PkiSeeds derive(std::uint64_t seed);
};

struct PkiMetrics {
  std::size_t messages = 0;
  std::size_t bytes_on_air = 0;
  std::size_t verifications = 0;
};

struct PkiOutcome {
  bool completed = false;
  std::optional<proto::AbortReason> abort_reason;
  std::optional<proto::Party> aborted_by;
  PkiSessionKey aircraft_key;
  PkiSessionKey tower_key;
  std::vector<Bytes> frames;
  PkiMetrics metrics;
};

/// Sees every frame in flight (index 0..3 = P1..P4) and may rewrite it.
using PkiTamper = std::function<void(std::size_t index, Bytes& frame)>;

/// Both sides trust only `ca_vk` and check validity against `now`.
/// Aborts: decode-error, untrusted-issuer (certificate does not verify under
/// the trusted CA), certificate-expired, bad-signature (P2/P3 signature) and
/// confirmation-failed (P4).
PkiOutcome pki_handshake(const Identity& aircraft, const Identity& tower, const VerifyKey& ca_vk, std::uint64_t now,
                         const PkiSeeds& seeds, const PkiTamper& tamper = {});

}  // namespace ldacs::pki
