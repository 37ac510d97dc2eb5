#include "ldacs/crp.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ldacs/errors.hpp"

namespace ldacs::puf {

namespace {
constexpr const char* kHeader = "#crp v1 clen=32 rlen=128";
}

CrpTable collect_crps(const PufDevice& device, std::size_t count, std::uint64_t seed, bool noisy) {
  Rng rng(seed);
  CrpTable out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const Challenge c(rng.next_u32());
    out.push_back({c, noisy ? device.evaluate_noisy(c, rng) : device.evaluate(c)});
  }
  return out;
}

CrpTable collect_crps(const PufDevice& device, std::span<const Challenge> challenges) {
  CrpTable out;
  out.reserve(challenges.size());
  for (const auto c : challenges) out.push_back({c, device.evaluate(c)});
  return out;
}

std::vector<Challenge> challenges_of(const CrpTable& crps) {
  std::vector<Challenge> out;
  out.reserve(crps.size());
  for (const auto& r : crps) out.push_back(r.challenge);
  return out;
}

void write_crps(std::ostream& out, const CrpTable& crps) {
  out << kHeader << '\n';
  for (const auto& r : crps) out << r.challenge.to_hex() << ' ' << r.response.to_hex() << '\n';
}

CrpTable read_crps(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw FormatError("crp: missing or unsupported header");
  CrpTable out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string c, r, extra;
    if (!(fields >> c >> r) || (fields >> extra)) {
      throw FormatError("crp: malformed record on line " + std::to_string(lineno));
    }
    try {
      out.push_back({Challenge::from_hex(c), Response::from_hex(r)});
    } catch (const EncodingError& e) {
      throw FormatError("crp: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ldacs::puf
