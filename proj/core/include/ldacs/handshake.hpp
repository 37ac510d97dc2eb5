#pragma once

// In-flight mutual authentication between an aircraft and a ground station.
//
//   aircraft                                     tower
//   M1 = tau | N1                     --->       look up (ICAO, C, R) by tau
//                                                omega = C ^ trunc32(h(R))
//                                                K_m = KDF(R, "mac", N1, N2)
//                                     <---       M2 = omega | N2 | pk | mac(K_m, M1|M2')
//   C' = omega ^ trunc32(theta)
//   R' = majority-vote PUF(C'); check h(R') == theta     (tower authenticated)
//   check M2 mac under KDF(R', "mac", N1, N2)
//   (ct, ss) = Encaps(pk)
//   M3 = ct | mac(K_m, M1|M2|M3')      --->      check mac, ss = Decaps(sk, ct)
//                                                key = KDF(ss, "session", h(M1|M2|M3))
//                                     <---       M4 = mac(key, "confirm" | h(M1|M2|M3))
//   check M4                                      (aircraft authenticated)
//
// Only "aircraft authenticates tower" is pinned down by the source material;
// the exact field layout and the M3/M4 confirmation round are a reconstruction.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldacs/abort.hpp"
#include "ldacs/kem.hpp"
#include "ldacs/messages.hpp"
#include "ldacs/puf.hpp"
#include "ldacs/registration.hpp"

namespace ldacs::proto {

struct SessionKey {
  Digest key{};
  Digest transcript_hash{};
  friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

/// Where the aircraft role gets PUF responses from.
class ResponseSource {
 public:
  virtual ~ResponseSource() = default;
  virtual Response read(Challenge c) = 0;
};

/// Honest aircraft radio: majority vote over `votes` noisy reads per bit.
class PufReader final : public ResponseSource {
 public:
  PufReader(const puf::PufDevice& device, int votes, std::uint64_t seed)
      : device_(device), votes_(votes), rng_(seed) {}
  Response read(Challenge c) override { return device_.read_majority(c, votes_, rng_); }

 private:
  const puf::PufDevice& device_;
  int votes_;
  Rng rng_;
};

/// An impersonator that learned one (C, R) pair answers every challenge with R.
class KnownResponse final : public ResponseSource {
 public:
  explicit KnownResponse(Response r) : r_(r) {}
  Response read(Challenge) override { return r_; }

 private:
  Response r_;
};

struct AircraftPolicy {
  /// When false the aircraft role skips the theta and M2 mac checks and
  /// carries on regardless, as an impersonator would.
  bool verify_tower = true;
};

struct AircraftHello {
  Bytes m1;
  Nonce n1{};
  AircraftSecrets secrets;
};

AircraftHello aircraft_start(const AircraftSecrets& secrets, std::uint64_t nonce_seed);

struct TowerPending {
  TowerRecord record;
  Bytes m1;
  Bytes m2;
  Nonce n1{};
  Nonce n2{};
  kem::KeyPair kem;
  Digest mac_key{};
};

TowerPending tower_respond(const TowerDb& db, std::span<const std::uint8_t> m1_frame, std::uint64_t nonce_seed,
                           std::uint64_t kem_seed);

struct AircraftPending {
  Bytes m1;
  Bytes m2;
  Bytes m3;
  SessionKey key;
};

AircraftPending aircraft_verify_tower(const AircraftHello& hello, std::span<const std::uint8_t> m2_frame,
                                      ResponseSource& puf, std::uint64_t kem_seed,
                                      const AircraftPolicy& policy = {});

struct TowerDone {
  Bytes m4;
  SessionKey key;
};

TowerDone tower_finalize(const TowerPending& pending, std::span<const std::uint8_t> m3_frame);

/// Checks the key confirmation; returns the established session key.
SessionKey aircraft_confirm(const AircraftPending& pending, std::span<const std::uint8_t> m4_frame);

// --- driver ---------------------------------------------------------------

struct HandshakeSeeds {
  std::uint64_t aircraft_nonce = 0;
  std::uint64_t tower_nonce = 0;
  std::uint64_t tower_kem = 0;
  std::uint64_t aircraft_kem = 0;

  static HandshakeSeeds derive(std::uint64_t seed);
};

/// Sees every frame in flight (index 0..3 = M1..M4) and may rewrite it.
using Tamper = std::function<void(std::size_t index, Bytes& frame)>;

struct HandshakeOutcome {
  bool completed = false;
  std::optional<AbortReason> abort_reason;
  std::optional<Party> aborted_by;
  SessionKey aircraft_key;
  SessionKey tower_key;
  /// Frames as delivered, in order.
  std::vector<Bytes> frames;

  std::size_t bytes_on_air() const;
};

HandshakeOutcome run_handshake(const AircraftSecrets& secrets, ResponseSource& puf, const TowerDb& db,
                               const HandshakeSeeds& seeds, const Tamper& tamper = {},
                               const AircraftPolicy& policy = {});

// --- channel tap ----------------------------------------------------------

struct TapFrame {
  std::uint64_t tick = 0;
  Bytes frame;
  friend bool operator==(const TapFrame&, const TapFrame&) = default;
};

// Tap file:
//   #tap v1
//   <tick> <frame hex>
void write_tap(std::ostream& out, std::span<const TapFrame> frames);
std::vector<TapFrame> read_tap(std::istream& in);

}  // namespace ldacs::proto
