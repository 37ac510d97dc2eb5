#include "doctest.h"

#include <set>
#include <sstream>

#include "ldacs/handshake.hpp"
#include "ldacs/hash.hpp"
#include "ldacs/kem.hpp"
#include "ldacs/messages.hpp"
#include "ldacs/registration.hpp"

using namespace ldacs;
using namespace ldacs::proto;

namespace {

struct Setup {
  puf::PufDevice device = puf::generate_device(21, 0.0);
  RegistrationRecord reg = register_aircraft(IcaoAddress(0xA00001), device, Challenge(0x5A5A0000));
  TowerDb db;
  Setup() { db.enroll(reg.tower_side); }
};

HandshakeOutcome honest_run(const Setup& s, std::uint64_t seed, const Tamper& tamper = {}) {
  PufReader reader(s.device, 5, seed);
  return run_handshake(s.reg.aircraft_side, reader, s.db, HandshakeSeeds::derive(seed), tamper);
}

Nonce nonce_of(std::uint8_t fill) {
  Nonce n;
  n.fill(fill);
  return n;
}

// Field layout per message, written out by hand: (first byte, last byte, abort)
// for a single-aircraft tower table. Tag bytes are handled separately.
struct Field {
  std::size_t first, last;
  AbortReason reason;
};

std::vector<Field> layout(std::size_t frame, std::size_t size) {
  switch (frame) {
    case 0: return {{1, 3, AbortReason::kUnknownAircraft}, {4, 19, AbortReason::kMacFailed}};
    case 1:
      return {{1, 4, AbortReason::kTowerAuthFailed},
              {5, 20, AbortReason::kMacFailed},
              {21, 22, AbortReason::kDecodeError},
              {23, size - 1, AbortReason::kMacFailed}};
    case 2: return {{1, 2, AbortReason::kDecodeError}, {3, size - 1, AbortReason::kAircraftAuthFailed}};
    default: return {{1, size - 1, AbortReason::kConfirmationFailed}};
  }
}

AbortReason expected_abort(std::size_t frame, std::size_t byte, std::size_t size) {
  if (byte == 0) return AbortReason::kDecodeError;
  for (const auto& f : layout(frame, size)) {
    if (byte >= f.first && byte <= f.last) return f.reason;
  }
  FAIL("byte outside layout");
  return AbortReason::kDecodeError;
}

}  // namespace

TEST_SUITE("protocol") {
  TEST_CASE("golden pseudonym and verifier for a zero response") {
    const Response zero;
    CHECK(id24_to_hex(derive_tau(IcaoAddress(0x000001), zero).value()) == "bd895d");
    CHECK(to_hex(derive_theta(zero)) == "374708fff7719dd5979ec875d56cd2286f6d3cf7ec317a3b25632aab28ec37bb");
    // Shorter pseudonyms keep the leading bits in place.
    CHECK(derive_tau(IcaoAddress(0x000001), zero, 8).value() == 0xbd0000);
  }

  TEST_CASE("omega hides the challenge behind the response") {
    const Response r = Response::from_hex("00112233445566778899aabbccddeeff");
    const Challenge c(0xCAFEF00D);
    const auto omega = derive_omega(c, r);
    CHECK(omega == (c.value() ^ trunc32(sha256(r.bytes()))));
    CHECK(challenge_from_omega(omega, r) == c);
  }

  TEST_CASE("messages round-trip and reject truncation and wrong tags") {
    const M1 m1{Tau(0x123456), nonce_of(7)};
    const Bytes e1 = m1.encode();
    CHECK(e1.size() == M1::kSize);
    CHECK(e1[0] == 0x01);
    CHECK(M1::decode(e1) == m1);
    CHECK_THROWS_AS(M1::decode(std::span(e1).first(e1.size() - 1)), DecodeError);
    Bytes extra = e1;
    extra.push_back(0);
    CHECK_THROWS_AS(M1::decode(extra), DecodeError);

    M2 m2;
    m2.omega = 0xDEADBEEF;
    m2.n2 = nonce_of(9);
    m2.kem_public_key = Bytes(kem::kPublicKeyBytes, 0x33);
    m2.mac.fill(0x44);
    const Bytes e2 = m2.encode();
    CHECK(M2::decode(e2) == m2);
    CHECK(e2.size() == 1 + 4 + 16 + 2 + 32 + 32);
    CHECK_THROWS_AS(M1::decode(e2), DecodeError);
    CHECK_THROWS_AS(M2::decode(std::span(e2).first(30)), DecodeError);

    M3 m3;
    m3.kem_ciphertext = Bytes(kem::kCiphertextBytes, 0x55);
    m3.mac.fill(0x66);
    CHECK(M3::decode(m3.encode()) == m3);

    M4 m4;
    m4.mac.fill(0x77);
    CHECK(M4::decode(m4.encode()) == m4);
    CHECK(frame_kind(m4.encode()) == MessageKind::kM4);
    CHECK_THROWS_AS(frame_kind(Bytes{}), DecodeError);
    CHECK_THROWS_AS(frame_kind(Bytes{0x09}), DecodeError);
  }

  TEST_CASE("KEM decapsulates to the encapsulated secret") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto kp = kem::keygen(s);
      const auto enc = kem::encapsulate(kp.public_key, 1000 + s);
      CHECK(enc.ciphertext.size() == kem::kCiphertextBytes);
      const auto dec = kem::decapsulate(kp.secret_key, enc.ciphertext);
      REQUIRE(dec.has_value());
      CHECK(*dec == enc.shared_secret);

      Bytes bad = enc.ciphertext;
      bad[s % bad.size()] ^= 1;
      const auto d2 = kem::decapsulate(kp.secret_key, bad);
      CHECK((!d2 || *d2 != enc.shared_secret));
    }
    CHECK_FALSE(kem::decapsulate(kem::keygen(1).secret_key, Bytes(3, 0)).has_value());
  }

  TEST_CASE("an honest handshake agrees on one key") {
    const Setup s;
    const auto out = honest_run(s, 1);
    REQUIRE(out.completed);
    CHECK(out.aircraft_key == out.tower_key);
    CHECK(out.frames.size() == 4);
    CHECK(out.bytes_on_air() == 20 + 87 + 83 + 33);
    for (std::size_t i = 0; i < 4; ++i) CHECK(frame_kind(out.frames[i]) == static_cast<MessageKind>(i + 1));
    CHECK(M1::decode(out.frames[0]).tau == s.reg.aircraft_side.tau);
  }

  TEST_CASE("fresh nonces give fresh keys") {
    const Setup s;
    std::set<Digest> keys;
    std::set<Nonce> n1s;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto out = honest_run(s, seed);
      REQUIRE(out.completed);
      keys.insert(out.tower_key.key);
      n1s.insert(M1::decode(out.frames[0]).n1);
    }
    CHECK(keys.size() == 50);
    CHECK(n1s.size() == 50);
    CHECK(honest_run(s, 3).tower_key == honest_run(s, 3).tower_key);
  }

  TEST_CASE("every single-bit omega flip is caught by the aircraft") {
    const Setup s;
    for (std::size_t bit = 0; bit < 32; ++bit) {
      const auto out = honest_run(s, 2, [bit](std::size_t i, Bytes& f) {
        if (i == 1) f[1 + bit / 8] ^= static_cast<std::uint8_t>(1U << (7 - bit % 8));
      });
      CHECK_FALSE(out.completed);
      CHECK(out.abort_reason == AbortReason::kTowerAuthFailed);
      CHECK(out.aborted_by == Party::kAircraft);
    }
  }

  TEST_CASE("a replayed M3 from an earlier session is rejected") {
    const Setup s;
    const auto earlier = honest_run(s, 10);
    REQUIRE(earlier.completed);
    const auto out = honest_run(s, 11, [&](std::size_t i, Bytes& f) {
      if (i == 2) f = earlier.frames[2];
    });
    CHECK_FALSE(out.completed);
    CHECK(out.abort_reason == AbortReason::kAircraftAuthFailed);
    CHECK(out.aborted_by == Party::kTower);
  }

  TEST_CASE("unknown and ambiguous pseudonyms abort at the tower") {
    const Setup s;
    const TowerDb empty;
    PufReader reader(s.device, 5, 1);
    const auto unknown = run_handshake(s.reg.aircraft_side, reader, empty, HandshakeSeeds::derive(1));
    CHECK(unknown.abort_reason == AbortReason::kUnknownAircraft);
    CHECK(unknown.aborted_by == Party::kTower);

    TowerDb twice = s.db;
    auto clash = s.reg.tower_side;
    clash.icao = IcaoAddress(0xB00000);
    CHECK_THROWS_AS(twice.enroll(clash), RegistrationError);
    twice.insert_unchecked(clash);
    const auto ambiguous = run_handshake(s.reg.aircraft_side, reader, twice, HandshakeSeeds::derive(1));
    CHECK(ambiguous.abort_reason == AbortReason::kAmbiguousTau);
  }

  TEST_CASE("exhaustive single-bit tampering raises the abort of the hit field") {
    const Setup s;
    const auto honest = honest_run(s, 5);
    REQUIRE(honest.completed);
    std::size_t cases = 0;
    for (std::size_t f = 0; f < 4; ++f) {
      const std::size_t size = honest.frames[f].size();
      for (std::size_t bit = 0; bit < size * 8; ++bit) {
        const auto out = honest_run(s, 5, [&](std::size_t i, Bytes& frame) {
          if (i == f) frame[bit / 8] ^= static_cast<std::uint8_t>(1U << (7 - bit % 8));
        });
        ++cases;
        CAPTURE(f);
        CAPTURE(bit);
        REQUIRE_FALSE(out.completed);
        CHECK(out.abort_reason == expected_abort(f, bit / 8, size));
      }
    }
    CHECK(cases == 8 * (20 + 87 + 83 + 33));
  }

  TEST_CASE("tower table and aircraft files round-trip") {
    const Setup s;
    std::stringstream db_text;
    write_tower_db(db_text, s.db);
    const auto db = read_tower_db(db_text);
    CHECK(db.records() == s.db.records());

    const std::vector<AircraftRecordFile> recs{{IcaoAddress(0xA00001), s.reg.aircraft_side, 21, 0.25},
                                               {IcaoAddress(0xA00002), s.reg.aircraft_side, 22, 0.125}};
    std::stringstream ac;
    write_aircraft_records(ac, recs);
    CHECK(read_aircraft_records(ac) == recs);

    std::stringstream bad("#towerdb v0\n");
    CHECK_THROWS_AS(read_tower_db(bad), FormatError);
  }

  TEST_CASE("tap files round-trip") {
    const Setup s;
    const auto out = honest_run(s, 1);
    std::vector<TapFrame> tap;
    for (std::size_t i = 0; i < out.frames.size(); ++i) tap.push_back({100 + i, out.frames[i]});
    std::stringstream ss;
    write_tap(ss, tap);
    CHECK(read_tap(ss) == tap);
  }
}
