#include "ldacs/pki.hpp"

#include "ldacs/errors.hpp"
#include "ldacs/kem.hpp"
#include "ldacs/messages.hpp"
#include "ldacs/rng.hpp"
#include "wire.hpp"

namespace ldacs::pki {

namespace {

using proto::AbortReason;
using proto::Party;
using proto::ProtocolAbort;

constexpr std::uint8_t kP1 = 0x11, kP2 = 0x12, kP3 = 0x13, kP4 = 0x14;

int digest_bit(const Digest& d, std::size_t i) { return (d[i / 8] >> (7 - i % 8)) & 1; }

Bytes concat(std::initializer_list<std::span<const std::uint8_t>> parts) {
  Bytes out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

proto::Nonce make_nonce(std::uint64_t seed) {
  Rng rng(seed);
  proto::Nonce n{};
  for (auto& b : n) b = static_cast<std::uint8_t>(rng.next_u64() >> 56);
  return n;
}

PkiSessionKey session_key(const Digest& ss, std::span<const std::uint8_t> p1, std::span<const std::uint8_t> p2,
                          std::span<const std::uint8_t> p3) {
  PkiSessionKey k;
  k.transcript_hash = sha256({p1, p2, p3});
  k.key = kdf(ss, "session", {k.transcript_hash});
  return k;
}

Digest confirmation_tag(const PkiSessionKey& k) {
  return hmac_sha256(k.key, concat({as_bytes("confirm"), k.transcript_hash}));
}

struct P1 {
  Certificate cert;
  proto::Nonce n1{};
};

struct P2 {
  Certificate cert;
  proto::Nonce n2{};
  Bytes kem_pk;
  Bytes signature;
  std::size_t signed_prefix = 0;  // bytes of the frame covered by the signature
};

struct P3 {
  Bytes kem_ct;
  Bytes signature;
  std::size_t signed_prefix = 0;
};

template <typename F>
auto decode_or_abort(Party party, F&& f) {
  try {
    return f();
  } catch (const EncodingError& e) {
    throw ProtocolAbort(AbortReason::kDecodeError, party, e.what());
  }
}

P1 decode_p1(std::span<const std::uint8_t> frame) {
  wire::Reader r(frame, kP1, "P1");
  P1 m;
  m.cert = Certificate::decode(r.prefixed32());
  m.n1 = r.fixed<proto::kNonceBytes>();
  r.finish();
  return m;
}

P2 decode_p2(std::span<const std::uint8_t> frame) {
  wire::Reader r(frame, kP2, "P2");
  P2 m;
  m.cert = Certificate::decode(r.prefixed32());
  m.n2 = r.fixed<proto::kNonceBytes>();
  m.kem_pk = r.prefixed();
  m.signed_prefix = r.position();
  m.signature = r.prefixed32();
  r.finish();
  return m;
}

P3 decode_p3(std::span<const std::uint8_t> frame) {
  wire::Reader r(frame, kP3, "P3");
  P3 m;
  m.kem_ct = r.prefixed();
  m.signed_prefix = r.position();
  m.signature = r.prefixed32();
  r.finish();
  return m;
}

// Chain check then validity; counts one verification.
void check_peer(const Certificate& cert, const VerifyKey& ca_vk, std::uint64_t now, Party party,
                std::size_t& verifications) {
  ++verifications;
  if (!verify_certificate(cert, ca_vk)) throw ProtocolAbort(AbortReason::kUntrustedIssuer, party, cert.subject);
  if (!cert.validity.covers(now)) throw ProtocolAbort(AbortReason::kCertificateExpired, party, cert.subject);
}

}  // namespace

SignatureKeyPair keygen(std::uint64_t seed) {
  SignatureKeyPair kp;
  std::array<std::uint8_t, 8> s{};
  for (int i = 0; i < 8; ++i) s[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  kp.sk.preimages.resize(512);
  Bytes publics;
  publics.reserve(512 * 32);
  for (std::uint32_t j = 0; j < 512; ++j) {
    const std::array<std::uint8_t, 2> idx{static_cast<std::uint8_t>(j >> 8), static_cast<std::uint8_t>(j)};
    kp.sk.preimages[j] = kdf(s, "lamport.sk", {idx});
    const Digest pub = sha256(kp.sk.preimages[j]);
    publics.insert(publics.end(), pub.begin(), pub.end());
  }
  kp.vk = sha256(publics);
  return kp;
}

Bytes sign(const SigningKey& sk, std::span<const std::uint8_t> message) {
  if (sk.preimages.size() != 512) throw ArgumentError("signing key must hold 512 preimages");
  const Digest h = sha256(message);
  Bytes sig;
  sig.reserve(kSignatureBytes);
  for (std::size_t i = 0; i < 256; ++i) {
    const int b = digest_bit(h, i);
    const Digest& reveal = sk.preimages[2 * i + static_cast<std::size_t>(b)];
    const Digest other = sha256(sk.preimages[2 * i + static_cast<std::size_t>(1 - b)]);
    sig.insert(sig.end(), reveal.begin(), reveal.end());
    sig.insert(sig.end(), other.begin(), other.end());
  }
  return sig;
}

bool verify(const VerifyKey& vk, std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature) {
  if (signature.size() != kSignatureBytes) return false;
  const Digest h = sha256(message);
  Bytes publics(512 * 32);
  for (std::size_t i = 0; i < 256; ++i) {
    const int b = digest_bit(h, i);
    const Digest revealed = sha256(signature.subspan(64 * i, 32));
    const auto other = signature.subspan(64 * i + 32, 32);
    auto* slot_b = publics.data() + 32 * (2 * i + static_cast<std::size_t>(b));
    auto* slot_o = publics.data() + 32 * (2 * i + static_cast<std::size_t>(1 - b));
    std::copy(revealed.begin(), revealed.end(), slot_b);
    std::copy(other.begin(), other.end(), slot_o);
  }
  return digest_equal(sha256(publics), vk);
}

Bytes Certificate::to_be_signed() const {
  return wire::Writer()
      .prefixed(as_bytes(subject))
      .prefixed(subject_vk)
      .prefixed(as_bytes(issuer))
      .u64(validity.not_before)
      .u64(validity.not_after)
      .take();
}

Bytes Certificate::encode() const {
  Bytes out = to_be_signed();
  const Bytes sig = wire::Writer().prefixed32(signature).take();
  out.insert(out.end(), sig.begin(), sig.end());
  return out;
}

Certificate Certificate::decode(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  Certificate c;
  const Bytes subject = r.prefixed();
  c.subject.assign(subject.begin(), subject.end());
  const Bytes vk = r.prefixed();
  if (vk.size() != c.subject_vk.size()) throw proto::DecodeError("certificate: verify key must be 32 bytes");
  std::copy(vk.begin(), vk.end(), c.subject_vk.begin());
  const Bytes issuer = r.prefixed();
  c.issuer.assign(issuer.begin(), issuer.end());
  c.validity.not_before = r.u64();
  c.validity.not_after = r.u64();
  c.signature = r.prefixed32();
  r.finish();
  return c;
}

CertificateAuthority make_ca(std::string id, std::uint64_t seed) { return {std::move(id), keygen(seed)}; }

Certificate ca_issue(const CertificateAuthority& ca, std::string subject, const VerifyKey& subject_vk,
                     Validity validity) {
  if (validity.not_before > validity.not_after) throw ArgumentError("ca_issue: empty validity interval");
  Certificate c;
  c.subject = std::move(subject);
  c.subject_vk = subject_vk;
  c.issuer = ca.id;
  c.validity = validity;
  c.signature = sign(ca.keys.sk, c.to_be_signed());
  return c;
}

bool verify_certificate(const Certificate& cert, const VerifyKey& ca_vk) {
  return verify(ca_vk, cert.to_be_signed(), cert.signature);
}

Identity enroll(const CertificateAuthority& ca, std::string id, Validity validity, std::uint64_t seed) {
  Identity e;
  e.id = std::move(id);
  e.keys = keygen(seed);
  e.cert = ca_issue(ca, e.id, e.keys.vk, validity);
  return e;
}

PkiSeeds PkiSeeds::derive(std::uint64_t seed) {
  return {derive_seed(seed, 21), derive_seed(seed, 22), derive_seed(seed, 23), derive_seed(seed, 24)};
}

PkiOutcome pki_handshake(const Identity& aircraft, const Identity& tower, const VerifyKey& ca_vk, std::uint64_t now,
                         const PkiSeeds& seeds, const PkiTamper& tamper) {
  PkiOutcome out;
  auto& verifications = out.metrics.verifications;
  auto send = [&](Bytes frame) -> const Bytes& {
    if (tamper) tamper(out.frames.size(), frame);
    out.metrics.bytes_on_air += frame.size();
    ++out.metrics.messages;
    out.frames.push_back(std::move(frame));
    return out.frames.back();
  };

  // Each side hashes and signs its own copy of the frames it sent, so an
  // in-flight change to any frame breaks a signature or the confirmation.
  try {
    // P1: aircraft presents its certificate and a fresh nonce.
    const auto n1 = make_nonce(seeds.aircraft_nonce);
    const Bytes p1_sent = wire::Writer(kP1).prefixed32(aircraft.cert.encode()).bytes(n1).take();
    const Bytes p1 = send(p1_sent);

    // Tower: check the aircraft certificate, answer with its own, a nonce and a signed KEM key.
    const auto in1 = decode_or_abort(Party::kTower, [&] { return decode_p1(p1); });
    check_peer(in1.cert, ca_vk, now, Party::kTower, verifications);
    const auto n2 = make_nonce(seeds.tower_nonce);
    const auto kem_keys = kem::keygen(seeds.tower_kem);
    Bytes p2_body = wire::Writer(kP2).prefixed32(tower.cert.encode()).bytes(n2).prefixed(kem_keys.public_key).take();
    const Bytes p2_sig = sign(tower.keys.sk, concat({p1, p2_body}));
    const Bytes p2_tail = wire::Writer().prefixed32(p2_sig).take();
    p2_body.insert(p2_body.end(), p2_tail.begin(), p2_tail.end());
    const Bytes p2 = send(p2_body);

    // Aircraft: check the tower certificate and signature, encapsulate and sign.
    const auto in2 = decode_or_abort(Party::kAircraft, [&] { return decode_p2(p2); });
    check_peer(in2.cert, ca_vk, now, Party::kAircraft, verifications);
    ++verifications;
    const auto p2_signed = std::span<const std::uint8_t>(p2).first(in2.signed_prefix);
    if (!verify(in2.cert.subject_vk, concat({p1_sent, p2_signed}), in2.signature)) {
      throw ProtocolAbort(AbortReason::kBadSignature, Party::kAircraft, "P2");
    }
    const auto enc = decode_or_abort(Party::kAircraft, [&] { return kem::encapsulate(in2.kem_pk, seeds.aircraft_kem); });
    Bytes p3_body = wire::Writer(kP3).prefixed(enc.ciphertext).take();
    const Bytes p3_sig = sign(aircraft.keys.sk, concat({p1_sent, p2, p3_body}));
    const Bytes p3_tail = wire::Writer().prefixed32(p3_sig).take();
    p3_body.insert(p3_body.end(), p3_tail.begin(), p3_tail.end());
    const Bytes p3 = send(p3_body);
    const auto aircraft_key = session_key(enc.shared_secret, p1_sent, p2, p3_body);

    // Tower: check the aircraft signature, decapsulate, confirm the key.
    const auto in3 = decode_or_abort(Party::kTower, [&] { return decode_p3(p3); });
    ++verifications;
    const auto p3_signed = std::span<const std::uint8_t>(p3).first(in3.signed_prefix);
    if (!verify(in1.cert.subject_vk, concat({p1, p2_body, p3_signed}), in3.signature)) {
      throw ProtocolAbort(AbortReason::kBadSignature, Party::kTower, "P3");
    }
    const auto ss = kem::decapsulate(kem_keys.secret_key, in3.kem_ct);
    if (!ss) throw ProtocolAbort(AbortReason::kDecodeError, Party::kTower, "decapsulation");
    out.tower_key = session_key(*ss, p1, p2_body, p3);
    const Bytes p4 = send(wire::Writer(kP4).bytes(confirmation_tag(out.tower_key)).take());

    // Aircraft: key confirmation.
    const auto tag = decode_or_abort(Party::kAircraft, [&] {
      wire::Reader r(p4, kP4, "P4");
      const auto t = r.fixed<32>();
      r.finish();
      return t;
    });
    if (!digest_equal(tag, confirmation_tag(aircraft_key))) {
      throw ProtocolAbort(AbortReason::kConfirmationFailed, Party::kAircraft);
    }
    out.aircraft_key = aircraft_key;
    out.completed = true;
  } catch (const ProtocolAbort& a) {
    out.abort_reason = a.reason();
    out.aborted_by = a.party();
  }
  return out;
}

}  // namespace ldacs::pki
