#pragma once

#include <stdexcept>
#include <string>

namespace ldacs::proto {

enum class AbortReason {
  kDecodeError,         ///< malformed or unexpected frame
  kUnknownAircraft,     ///< tau not in the tower table
  kAmbiguousTau,        ///< several tower records share the tau
  kTowerAuthFailed,     ///< h(PUF(C')) != theta on the aircraft
  kMacFailed,           ///< M2 mac rejected by the aircraft
  kAircraftAuthFailed,  ///< M3 rejected by the tower (bad mac or decapsulation)
  kConfirmationFailed,  ///< M4 key confirmation rejected by the aircraft
  kUntrustedIssuer,     ///< certificate not signed by the trusted CA
  kCertificateExpired,  ///< certificate validity does not cover the handshake time
  kBadSignature,        ///< handshake signature rejected
};

enum class Party { kAircraft, kTower };

/// Documented error name, e.g. "unknown-aircraft".
std::string to_string(AbortReason reason);
std::string to_string(Party party);

/// A handshake step refused to continue. Carries which side aborted and why.
class ProtocolAbort : public std::runtime_error {
 public:
  ProtocolAbort(AbortReason reason, Party party, const std::string& detail = {})
      : std::runtime_error(to_string(party) + " aborted: " + to_string(reason) +
                           (detail.empty() ? "" : " (" + detail + ")")),
        reason_(reason),
        party_(party) {}

  AbortReason reason() const { return reason_; }
  Party party() const { return party_; }

 private:
  AbortReason reason_;
  Party party_;
};

}  // namespace ldacs::proto
