#pragma once

// Passive and active attacks on the PUF handshake.
//
//  * tau extraction from captured M1 frames and tau <-> ICAO linking by
//    co-occurrence with a public flight schedule;
//  * the model-based lookup attack: predict R for every challenge in a
//    (reduced) challenge space, test tau = h(ICAO || R) truncated to 24 bits,
//    and retry with every correction of up to `flip_budget` bit flips;
//  * impersonation with a recovered (C, R);
//  * quantum brute-force exponents. These are cost arithmetic only, nothing
//    is simulated.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ldacs/bits.hpp"
#include "ldacs/crp.hpp"
#include "ldacs/handshake.hpp"
#include "ldacs/puf_fit.hpp"
#include "ldacs/registration.hpp"

namespace ldacs::attack {

class WrongFrameError : public EncodingError {
 public:
  using EncodingError::EncodingError;
};

/// The 24-bit tau field of an M1 frame. Throws WrongFrameError for any other
/// message kind and proto::DecodeError for malformed frames.
Tau extract_tau(std::span<const std::uint8_t> frame);
/// The omega field of an M2 frame; same error behaviour for other frames.
std::uint32_t extract_omega(std::span<const std::uint8_t> frame);

// --- linkability ------------------------------------------------------------

struct SniffedSession {
  std::vector<Bytes> frames;
  Tau extracted_tau;
  std::uint64_t timestamp = 0;
};

/// Splits a tap capture into sessions; every M1 opens a new session.
/// Frames before the first M1 are dropped.
std::vector<SniffedSession> sessions_from_tap(std::span<const proto::TapFrame> tap);

/// One flight: the aircraft is on frequency during [start, end].
struct ScheduleEntry {
  IcaoAddress icao;
  std::uint64_t start = 0;
  std::uint64_t end = 0;
};

struct LinkEntry {
  Tau tau;
  /// Remaining candidates after intersecting every observation of this tau.
  std::vector<IcaoAddress> candidates;
  /// 1 / |candidates|, or 0 when no scheduled aircraft fits.
  double confidence = 0.0;
  /// The unique candidate when confidence is 1, otherwise the lowest candidate.
  std::optional<IcaoAddress> icao;
};

struct LinkTable {
  std::vector<LinkEntry> entries;  // sorted by tau
  const LinkEntry* find(Tau tau) const;
};

LinkTable link_tau_to_icao(std::span<const SniffedSession> observations, std::span<const ScheduleEntry> schedule);

// --- counting ---------------------------------------------------------------

/// n! / (n - k)!, exact. Throws ArgumentError when k > n or the result overflows 64 bits.
std::uint64_t permutation_count(std::uint64_t n, std::uint64_t k);
/// n choose k, exact. Same error conditions.
std::uint64_t combination_count(std::uint64_t n, std::uint64_t k);

enum class QuantumAttack { kGroverSearch, kPreimage };

/// log2 of the asymptotic query cost: n/2 for Grover search, n/3 for the
/// quantum preimage attack. Pure arithmetic; nothing is executed.
double quantum_cost_bits(std::uint64_t n_bits, QuantumAttack attack);

/// omega XOR first 32 bits of h(R).
Challenge recover_challenge_from_omega(std::uint32_t omega, const Response& r);

// --- flip correction ----------------------------------------------------------

/// Flips every `flips`-subset of the first `nbits` bits of `bits` (big-endian
/// bit order) in lexicographic order and calls `test()` after each flip.
/// Stops at the first subset for which test() is true, leaving it applied.
template <typename Test>
bool enumerate_flips(std::span<std::uint8_t> bits, std::size_t nbits, int flips, Test&& test,
                     std::uint64_t& tested, std::vector<std::size_t>& chosen, std::size_t start = 0) {
  if (flips == 0) {
    ++tested;
    return test();
  }
  for (std::size_t i = start; i + static_cast<std::size_t>(flips) <= nbits; ++i) {
    const auto mask = static_cast<std::uint8_t>(1U << (7 - i % 8));
    bits[i / 8] ^= mask;
    chosen.push_back(i);
    if (enumerate_flips(bits, nbits, flips - 1, test, tested, chosen, i + 1)) return true;
    chosen.pop_back();
    bits[i / 8] ^= mask;
  }
  return false;
}

struct Correction {
  bool found = false;
  Bytes response;                  // corrected response bytes when found
  std::vector<std::size_t> flipped;
  std::uint64_t candidates_tested = 0;
};

/// Searches `predicted` and its corrections with up to `flip_budget` flipped
/// bits, fewest flips first, for a response whose pseudo-address under
/// `icao` equals `target`. `nbits` may be smaller than 128 for debug widths;
/// the response is then ceil(nbits / 8) bytes.
Correction correct_response(IcaoAddress icao, Tau target, std::span<const std::uint8_t> predicted,
                            std::size_t nbits, int flip_budget);

// --- model-based lookup attack --------------------------------------------------

struct AttackModel {
  cma::PufModel model;
  /// Measured on CRPs whose challenges are disjoint from training.
  double heldout_accuracy = 0.0;
  std::size_t training_crps = 0;
};

/// Fits a model on `training` and scores it on `heldout`. Throws ArgumentError
/// when the two tables share a challenge.
AttackModel train_attack_model(const puf::CrpTable& training, const puf::CrpTable& heldout,
                               const cma::FitOptions& options, std::uint64_t seed);

struct Alg1Options {
  /// Candidates are C = x << (32 - bits) for x in [0, 2^bits): the registered
  /// challenge is assumed to lie in {0,1}^bits || 0^(32 - bits).
  int challenge_space_bits = 16;
  /// 0..3.
  int flip_budget = 2;
  /// Sniffed omega from M2. When present a tau hit is only accepted if
  /// omega XOR trunc32(h(R)) also gives back the candidate challenge, which
  /// removes the false tau matches that otherwise appear once
  /// |challenge space| x |corrections| approaches 2^24.
  std::optional<std::uint32_t> omega;
};

struct Alg1Result {
  bool found = false;
  Challenge challenge;
  Response response;
  int flips_used = 0;
  std::uint64_t candidates_tested = 0;
  std::chrono::duration<double> wall_time{};
};

/// Candidate order: all challenges with 0 flips, then all with 1 flip, and
/// so on; within a level challenges ascend numerically and flip sets ascend
/// lexicographically. The first hit wins.
Alg1Result algorithm1_attack(const cma::PufModel& model, Tau target_tau, IcaoAddress icao,
                             const Alg1Options& options);

/// Upper bound on candidate tests: |space| * (1 + sum_{j<=budget} C(128, j)).
std::uint64_t algorithm1_cost_bound(int challenge_space_bits, int flip_budget);

/// Source of fresh CRPs from the target (or a sibling) device.
using CrpOracle = std::function<puf::CrpTable(std::size_t count, std::uint64_t seed)>;

struct CampaignOptions {
  std::size_t initial_crps = 5'000;
  std::size_t max_crps = 80'000;
  std::size_t heldout_crps = 10'000;
  cma::FitOptions fit{};
};

struct CampaignResult {
  Alg1Result attack;
  AttackModel model;
  int rounds = 0;
};

/// Train, sweep, and on failure retrain with twice the CRPs, up to max_crps.
CampaignResult run_algorithm1(const CrpOracle& oracle, Tau target_tau, IcaoAddress icao,
                              const Alg1Options& options, const CampaignOptions& campaign, std::uint64_t seed);

// --- impersonation ----------------------------------------------------------------

struct ImpersonationResult {
  bool success = false;
  proto::HandshakeOutcome handshake;
};

/// Runs the aircraft role with the recovered R standing in for the PUF and
/// theta = h(R). Throws ArgumentError when `recovered` is empty or its R does
/// not map to `target_tau` under `icao`.
ImpersonationResult impersonate(const std::optional<puf::CrpRecord>& recovered, IcaoAddress icao,
                                Tau target_tau, const proto::TowerDb& tower, std::uint64_t seed);

/// A response != `avoid` with the same 24-bit pseudo-address under `icao`,
/// found by sweeping the low-order bytes starting from a seeded random
/// response. std::nullopt if `max_tries` is exhausted.
std::optional<Response> find_tau_collision(IcaoAddress icao, Tau target, const Response& avoid,
                                           std::uint64_t seed, std::uint64_t max_tries);

}  // namespace ldacs::attack
