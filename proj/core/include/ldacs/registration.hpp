#pragma once

// Offline registration: the aircraft keeps (tau, theta), the ground station
// keeps (ICAO, C, R, tau).
//
//   R     = PUF(C)
//   tau   = first 24 bits of h(ICAO || R)      ICAO as 3 bytes, R as 16 bytes
//   theta = h(R)
//   omega = C XOR first 32 bits of h(R)        sent tower -> aircraft

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "ldacs/bits.hpp"
#include "ldacs/hash.hpp"
#include "ldacs/puf.hpp"

namespace ldacs::proto {

inline constexpr int kTauBits = 24;

/// First `tau_bits` bits of h(icao || response_bytes), left-aligned in 24 bits.
/// `tau_bits` below 24 is a debug mode that makes collisions easy to find.
Tau derive_tau(IcaoAddress icao, std::span<const std::uint8_t> response_bytes, int tau_bits = kTauBits);
Tau derive_tau(IcaoAddress icao, const Response& r, int tau_bits = kTauBits);

Digest derive_theta(const Response& r);

std::uint32_t derive_omega(Challenge c, const Response& r);
/// omega XOR first 32 bits of h(R).
Challenge challenge_from_omega(std::uint32_t omega, const Response& r);

struct AircraftSecrets {
  Tau tau;
  Digest theta{};
  friend bool operator==(const AircraftSecrets&, const AircraftSecrets&) = default;
};

struct TowerRecord {
  IcaoAddress icao;
  Challenge challenge;
  Response response;
  Tau tau;
  friend bool operator==(const TowerRecord&, const TowerRecord&) = default;
};

struct RegistrationRecord {
  AircraftSecrets aircraft_side;
  TowerRecord tower_side;
};

/// R is the noiseless response of `device` to `challenge`.
RegistrationRecord register_aircraft(IcaoAddress icao, const puf::PufDevice& device, Challenge challenge,
                                     int tau_bits = kTauBits);

class RegistrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The ground station's CRP lookup table, keyed by tau.
class TowerDb {
 public:
  /// Adds a newly registered aircraft. Throws RegistrationError when its tau
  /// or ICAO address is already present.
  void enroll(const TowerRecord& record);

  /// Adds a record without collision checks (used when loading a stored table).
  void insert_unchecked(const TowerRecord& record);

  /// Throws ProtocolAbort "unknown-aircraft" on a miss and "ambiguous-tau"
  /// when several records share the tau.
  const TowerRecord& lookup(Tau tau) const;

  bool contains(Tau tau) const { return by_tau_.count(tau.value()) > 0; }
  const std::vector<TowerRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<TowerRecord> records_;
  std::multimap<std::uint32_t, std::size_t> by_tau_;
};

// Tower table file:
//   #towerdb v1
//   <ICAO 6 hex> <C 8 hex> <R 32 hex> <tau 6 hex>
void write_tower_db(std::ostream& out, const TowerDb& db);
TowerDb read_tower_db(std::istream& in);

struct AircraftRecordFile {
  IcaoAddress icao;
  AircraftSecrets secrets;
  std::uint64_t device_seed = 0;
  double noise_sigma = 0.0;
  friend bool operator==(const AircraftRecordFile&, const AircraftRecordFile&) = default;
};

// Aircraft records file:
//   #aircraft v1
//   <ICAO 6 hex> <tau 6 hex> <theta 64 hex> <device seed> <noise sigma>
void write_aircraft_records(std::ostream& out, std::span<const AircraftRecordFile> records);
std::vector<AircraftRecordFile> read_aircraft_records(std::istream& in);

}  // namespace ldacs::proto
