#pragma once

// Challenge-response pair datasets.
//
// File format, line oriented:
//   #crp v1 clen=32 rlen=128
//   <8 hex digits C> <32 hex digits R>
//   ...
// Hex is fixed width, zero padded, big-endian bit order.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ldacs/bits.hpp"
#include "ldacs/puf.hpp"

namespace ldacs::puf {

struct CrpRecord {
  Challenge challenge;
  Response response;
  friend bool operator==(const CrpRecord&, const CrpRecord&) = default;
};

using CrpTable = std::vector<CrpRecord>;

/// `count` uniformly random challenges and the device's responses.
CrpTable collect_crps(const PufDevice& device, std::size_t count, std::uint64_t seed, bool noisy = false);
CrpTable collect_crps(const PufDevice& device, std::span<const Challenge> challenges);

std::vector<Challenge> challenges_of(const CrpTable& crps);

void write_crps(std::ostream& out, const CrpTable& crps);
/// Throws FormatError on a bad header or record.
CrpTable read_crps(std::istream& in);

}  // namespace ldacs::puf
