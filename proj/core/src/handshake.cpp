#include "ldacs/handshake.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace ldacs::proto {

namespace {

Nonce make_nonce(std::uint64_t seed) {
  Rng rng(seed);
  Nonce n{};
  for (auto& b : n) b = static_cast<std::uint8_t>(rng.next_u64() >> 56);
  return n;
}

Bytes concat(std::initializer_list<std::span<const std::uint8_t>> parts) {
  Bytes out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Digest mac_key(const Response& r, const Nonce& n1, const Nonce& n2) { return kdf(r.bytes(), "mac", {n1, n2}); }

SessionKey session_key(const Digest& shared_secret, const Bytes& m1, const Bytes& m2, const Bytes& m3) {
  SessionKey k;
  k.transcript_hash = sha256({m1, m2, m3});
  k.key = kdf(shared_secret, "session", {k.transcript_hash});
  return k;
}

Digest confirmation_tag(const SessionKey& k) {
  return hmac_sha256(k.key, concat({as_bytes("confirm"), k.transcript_hash}));
}

template <typename Message>
Message decode_or_abort(std::span<const std::uint8_t> frame, Party party) {
  try {
    return Message::decode(frame);
  } catch (const DecodeError& e) {
    throw ProtocolAbort(AbortReason::kDecodeError, party, e.what());
  }
}

}  // namespace

std::string to_string(AbortReason reason) {
  switch (reason) {
    case AbortReason::kDecodeError: return "decode-error";
    case AbortReason::kUnknownAircraft: return "unknown-aircraft";
    case AbortReason::kAmbiguousTau: return "ambiguous-tau";
    case AbortReason::kTowerAuthFailed: return "tower-auth-failed";
    case AbortReason::kMacFailed: return "mac-failed";
    case AbortReason::kAircraftAuthFailed: return "aircraft-auth-failed";
    case AbortReason::kConfirmationFailed: return "confirmation-failed";
    case AbortReason::kUntrustedIssuer: return "untrusted-issuer";
    case AbortReason::kCertificateExpired: return "certificate-expired";
    case AbortReason::kBadSignature: return "bad-signature";
  }
  return "unknown";
}

std::string to_string(Party party) { return party == Party::kAircraft ? "aircraft" : "tower"; }

AircraftHello aircraft_start(const AircraftSecrets& secrets, std::uint64_t nonce_seed) {
  AircraftHello hello;
  hello.secrets = secrets;
  hello.n1 = make_nonce(nonce_seed);
  hello.m1 = M1{secrets.tau, hello.n1}.encode();
  return hello;
}

TowerPending tower_respond(const TowerDb& db, std::span<const std::uint8_t> m1_frame, std::uint64_t nonce_seed,
                           std::uint64_t kem_seed) {
  const auto m1 = decode_or_abort<M1>(m1_frame, Party::kTower);
  TowerPending p;
  p.record = db.lookup(m1.tau);
  p.m1.assign(m1_frame.begin(), m1_frame.end());
  p.n1 = m1.n1;
  p.n2 = make_nonce(nonce_seed);
  p.kem = kem::keygen(kem_seed);
  p.mac_key = mac_key(p.record.response, p.n1, p.n2);

  M2 m2;
  m2.omega = derive_omega(p.record.challenge, p.record.response);
  m2.n2 = p.n2;
  m2.kem_public_key = p.kem.public_key;
  m2.mac = hmac_sha256(p.mac_key, concat({p.m1, m2.encode_unauthenticated()}));
  p.m2 = m2.encode();
  return p;
}

AircraftPending aircraft_verify_tower(const AircraftHello& hello, std::span<const std::uint8_t> m2_frame,
                                      ResponseSource& puf, std::uint64_t kem_seed, const AircraftPolicy& policy) {
  const auto m2 = decode_or_abort<M2>(m2_frame, Party::kAircraft);

  // The tower proves knowledge of C (through omega) and R (through the mac).
  const Challenge c_prime(m2.omega ^ trunc32(hello.secrets.theta));
  const Response r_prime = puf.read(c_prime);
  if (policy.verify_tower && !digest_equal(derive_theta(r_prime), hello.secrets.theta)) {
    throw ProtocolAbort(AbortReason::kTowerAuthFailed, Party::kAircraft);
  }
  const Digest km = mac_key(r_prime, hello.n1, m2.n2);
  const auto m2_body = m2.encode_unauthenticated();
  if (policy.verify_tower && !digest_equal(hmac_sha256(km, concat({hello.m1, m2_body})), m2.mac)) {
    throw ProtocolAbort(AbortReason::kMacFailed, Party::kAircraft);
  }

  kem::Encapsulation enc;
  try {
    enc = kem::encapsulate(m2.kem_public_key, kem_seed);
  } catch (const EncodingError& e) {
    throw ProtocolAbort(AbortReason::kDecodeError, Party::kAircraft, e.what());
  }

  AircraftPending p;
  p.m1 = hello.m1;
  p.m2.assign(m2_frame.begin(), m2_frame.end());
  M3 m3;
  m3.kem_ciphertext = enc.ciphertext;
  m3.mac = hmac_sha256(km, concat({p.m1, p.m2, m3.encode_unauthenticated()}));
  p.m3 = m3.encode();
  p.key = session_key(enc.shared_secret, p.m1, p.m2, p.m3);
  return p;
}

TowerDone tower_finalize(const TowerPending& pending, std::span<const std::uint8_t> m3_frame) {
  const auto m3 = decode_or_abort<M3>(m3_frame, Party::kTower);
  const Digest expected = hmac_sha256(pending.mac_key, concat({pending.m1, pending.m2, m3.encode_unauthenticated()}));
  if (!digest_equal(expected, m3.mac)) throw ProtocolAbort(AbortReason::kAircraftAuthFailed, Party::kTower, "mac");
  const auto ss = kem::decapsulate(pending.kem.secret_key, m3.kem_ciphertext);
  if (!ss) throw ProtocolAbort(AbortReason::kAircraftAuthFailed, Party::kTower, "decapsulation");

  TowerDone done;
  const Bytes m3_bytes(m3_frame.begin(), m3_frame.end());
  done.key = session_key(*ss, pending.m1, pending.m2, m3_bytes);
  done.m4 = M4{confirmation_tag(done.key)}.encode();
  return done;
}

SessionKey aircraft_confirm(const AircraftPending& pending, std::span<const std::uint8_t> m4_frame) {
  const auto m4 = decode_or_abort<M4>(m4_frame, Party::kAircraft);
  if (!digest_equal(m4.mac, confirmation_tag(pending.key))) {
    throw ProtocolAbort(AbortReason::kConfirmationFailed, Party::kAircraft);
  }
  return pending.key;
}

HandshakeSeeds HandshakeSeeds::derive(std::uint64_t seed) {
  return {derive_seed(seed, 11), derive_seed(seed, 12), derive_seed(seed, 13), derive_seed(seed, 14)};
}

std::size_t HandshakeOutcome::bytes_on_air() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.size();
  return n;
}

HandshakeOutcome run_handshake(const AircraftSecrets& secrets, ResponseSource& puf, const TowerDb& db,
                               const HandshakeSeeds& seeds, const Tamper& tamper, const AircraftPolicy& policy) {
  HandshakeOutcome out;
  auto send = [&](Bytes frame) -> const Bytes& {
    if (tamper) tamper(out.frames.size(), frame);
    out.frames.push_back(std::move(frame));
    return out.frames.back();
  };
  try {
    const auto hello = aircraft_start(secrets, seeds.aircraft_nonce);
    const Bytes m1 = send(hello.m1);
    const auto tower = tower_respond(db, m1, seeds.tower_nonce, seeds.tower_kem);
    const Bytes m2 = send(tower.m2);
    const auto aircraft = aircraft_verify_tower(hello, m2, puf, seeds.aircraft_kem, policy);
    const Bytes m3 = send(aircraft.m3);
    const auto done = tower_finalize(tower, m3);
    out.tower_key = done.key;
    const Bytes m4 = send(done.m4);
    out.aircraft_key = aircraft_confirm(aircraft, m4);
    out.completed = true;
  } catch (const ProtocolAbort& a) {
    out.abort_reason = a.reason();
    out.aborted_by = a.party();
  }
  return out;
}

void write_tap(std::ostream& out, std::span<const TapFrame> frames) {
  out << "#tap v1\n";
  for (const auto& f : frames) out << f.tick << ' ' << to_hex(f.frame) << '\n';
}

std::vector<TapFrame> read_tap(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "#tap v1") throw FormatError("tap: missing or unsupported header");
  std::vector<TapFrame> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream f(line);
    TapFrame t;
    std::string hex, extra;
    if (!(f >> t.tick >> hex) || (f >> extra)) throw FormatError("tap: malformed line");
    try {
      t.frame = from_hex(hex);
    } catch (const EncodingError& e) {
      throw FormatError(std::string("tap: ") + e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace ldacs::proto
