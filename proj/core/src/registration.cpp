#include "ldacs/registration.hpp"

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "ldacs/abort.hpp"
#include "ldacs/errors.hpp"

namespace ldacs::proto {

Tau derive_tau(IcaoAddress icao, std::span<const std::uint8_t> response_bytes, int tau_bits) {
  if (tau_bits < 1 || tau_bits > kTauBits) throw ArgumentError("tau_bits must be in 1..24");
  const auto id = icao.to_bytes();
  const std::uint32_t full = trunc24(sha256({id, response_bytes}));
  const std::uint32_t mask = (0xFFFFFFU << (kTauBits - tau_bits)) & 0xFFFFFFU;
  return Tau(full & mask);
}

Tau derive_tau(IcaoAddress icao, const Response& r, int tau_bits) { return derive_tau(icao, r.bytes(), tau_bits); }

Digest derive_theta(const Response& r) { return sha256(r.bytes()); }

std::uint32_t derive_omega(Challenge c, const Response& r) { return c.value() ^ trunc32(derive_theta(r)); }

Challenge challenge_from_omega(std::uint32_t omega, const Response& r) {
  return Challenge(omega ^ trunc32(derive_theta(r)));
}

RegistrationRecord register_aircraft(IcaoAddress icao, const puf::PufDevice& device, Challenge challenge,
                                     int tau_bits) {
  const Response r = device.evaluate(challenge);
  RegistrationRecord rec;
  rec.tower_side = {icao, challenge, r, derive_tau(icao, r, tau_bits)};
  rec.aircraft_side = {rec.tower_side.tau, derive_theta(r)};
  return rec;
}

void TowerDb::enroll(const TowerRecord& record) {
  if (contains(record.tau)) {
    throw RegistrationError("tau collision: " + id24_to_hex(record.tau.value()) + " already registered");
  }
  for (const auto& r : records_) {
    if (r.icao == record.icao) throw RegistrationError("ICAO address already registered");
  }
  insert_unchecked(record);
}

void TowerDb::insert_unchecked(const TowerRecord& record) {
  by_tau_.emplace(record.tau.value(), records_.size());
  records_.push_back(record);
}

const TowerRecord& TowerDb::lookup(Tau tau) const {
  const auto [first, last] = by_tau_.equal_range(tau.value());
  if (first == last) throw ProtocolAbort(AbortReason::kUnknownAircraft, Party::kTower);
  if (std::next(first) != last) throw ProtocolAbort(AbortReason::kAmbiguousTau, Party::kTower);
  return records_[first->second];
}

void write_tower_db(std::ostream& out, const TowerDb& db) {
  out << "#towerdb v1\n";
  for (const auto& r : db.records()) {
    out << id24_to_hex(r.icao.value()) << ' ' << r.challenge.to_hex() << ' ' << r.response.to_hex() << ' '
        << id24_to_hex(r.tau.value()) << '\n';
  }
}

TowerDb read_tower_db(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "#towerdb v1") throw FormatError("towerdb: missing or unsupported header");
  TowerDb db;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream f(line);
    std::string icao, c, r, tau, extra;
    if (!(f >> icao >> c >> r >> tau) || (f >> extra)) throw FormatError("towerdb: malformed record");
    try {
      db.insert_unchecked({IcaoAddress(id24_from_hex(icao)), Challenge::from_hex(c), Response::from_hex(r),
                           Tau(id24_from_hex(tau))});
    } catch (const EncodingError& e) {
      throw FormatError(std::string("towerdb: ") + e.what());
    }
  }
  return db;
}

void write_aircraft_records(std::ostream& out, std::span<const AircraftRecordFile> records) {
  out << "#aircraft v1\n";
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : records) {
    out << id24_to_hex(r.icao.value()) << ' ' << id24_to_hex(r.secrets.tau.value()) << ' '
        << to_hex(r.secrets.theta) << ' ' << r.device_seed << ' ' << r.noise_sigma << '\n';
  }
  out.precision(old_precision);
}

std::vector<AircraftRecordFile> read_aircraft_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "#aircraft v1") throw FormatError("aircraft: missing or unsupported header");
  std::vector<AircraftRecordFile> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream f(line);
    std::string icao, tau, theta, extra;
    AircraftRecordFile rec;
    if (!(f >> icao >> tau >> theta >> rec.device_seed >> rec.noise_sigma) || (f >> extra)) {
      throw FormatError("aircraft: malformed record");
    }
    try {
      rec.icao = IcaoAddress(id24_from_hex(icao));
      rec.secrets.tau = Tau(id24_from_hex(tau));
      const auto th = from_hex(theta);
      if (th.size() != rec.secrets.theta.size()) throw EncodingError("theta must be 32 bytes");
      std::copy(th.begin(), th.end(), rec.secrets.theta.begin());
    } catch (const EncodingError& e) {
      throw FormatError(std::string("aircraft: ") + e.what());
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace ldacs::proto
