#include "ldacs/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "ldacs/errors.hpp"
#include "ldacs/hash.hpp"
#include "ldacs/messages.hpp"

namespace ldacs::attack {

Tau extract_tau(std::span<const std::uint8_t> frame) {
  const auto kind = proto::frame_kind(frame);
  if (kind != proto::MessageKind::kM1) throw WrongFrameError("tau is only carried in M1, got " + proto::to_string(kind));
  return proto::M1::decode(frame).tau;
}

std::uint32_t extract_omega(std::span<const std::uint8_t> frame) {
  const auto kind = proto::frame_kind(frame);
  if (kind != proto::MessageKind::kM2) throw WrongFrameError("omega is only carried in M2, got " + proto::to_string(kind));
  return proto::M2::decode(frame).omega;
}

std::vector<SniffedSession> sessions_from_tap(std::span<const proto::TapFrame> tap) {
  std::vector<SniffedSession> out;
  for (const auto& t : tap) {
    proto::MessageKind kind;
    try {
      kind = proto::frame_kind(t.frame);
    } catch (const proto::DecodeError&) {
      continue;  // garbage on the channel
    }
    if (kind == proto::MessageKind::kM1) {
      SniffedSession s;
      try {
        s.extracted_tau = extract_tau(t.frame);
      } catch (const proto::DecodeError&) {
        continue;
      }
      s.timestamp = t.tick;
      s.frames.push_back(t.frame);
      out.push_back(std::move(s));
    } else if (!out.empty()) {
      out.back().frames.push_back(t.frame);
    }
  }
  return out;
}

const LinkEntry* LinkTable::find(Tau tau) const {
  const auto it = std::lower_bound(entries.begin(), entries.end(), tau,
                                   [](const LinkEntry& e, Tau t) { return e.tau < t; });
  return it != entries.end() && it->tau == tau ? &*it : nullptr;
}

LinkTable link_tau_to_icao(std::span<const SniffedSession> observations, std::span<const ScheduleEntry> schedule) {
  std::map<Tau, std::set<IcaoAddress>> candidates;
  for (const auto& obs : observations) {
    std::set<IcaoAddress> on_air;
    for (const auto& e : schedule) {
      if (e.start <= obs.timestamp && obs.timestamp <= e.end) on_air.insert(e.icao);
    }
    auto [it, fresh] = candidates.try_emplace(obs.extracted_tau, on_air);
    if (fresh) continue;
    std::set<IcaoAddress> kept;
    std::set_intersection(it->second.begin(), it->second.end(), on_air.begin(), on_air.end(),
                          std::inserter(kept, kept.begin()));
    it->second = std::move(kept);
  }

  LinkTable table;
  for (auto& [tau, set] : candidates) {
    LinkEntry e;
    e.tau = tau;
    e.candidates.assign(set.begin(), set.end());
    if (!set.empty()) {
      e.confidence = 1.0 / static_cast<double>(set.size());
      e.icao = *set.begin();
    }
    table.entries.push_back(std::move(e));
  }
  return table;
}

std::uint64_t permutation_count(std::uint64_t n, std::uint64_t k) {
  if (k > n) throw ArgumentError("permutation_count: k > n");
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    const std::uint64_t f = n - i;
    if (out > UINT64_MAX / f) throw ArgumentError("permutation_count: result exceeds 64 bits");
    out *= f;
  }
  return out;
}

std::uint64_t combination_count(std::uint64_t n, std::uint64_t k) {
  if (k > n) throw ArgumentError("combination_count: k > n");
  k = std::min(k, n - k);
  unsigned __int128 out = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // out * (n - k + i) / i stays integral at every step.
    out = out * (n - k + i) / i;
    if (out > UINT64_MAX) throw ArgumentError("combination_count: result exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(out);
}

double quantum_cost_bits(std::uint64_t n_bits, QuantumAttack attack) {
  const auto n = static_cast<double>(n_bits);
  return attack == QuantumAttack::kGroverSearch ? n / 2.0 : n / 3.0;
}

Challenge recover_challenge_from_omega(std::uint32_t omega, const Response& r) {
  return proto::challenge_from_omega(omega, r);
}

Correction correct_response(IcaoAddress icao, Tau target, std::span<const std::uint8_t> predicted, std::size_t nbits,
                            int flip_budget) {
  if (flip_budget < 0) throw ArgumentError("flip budget must be non-negative");
  if (nbits == 0 || (nbits + 7) / 8 != predicted.size()) throw ArgumentError("response width does not match bytes");

  const auto id = icao.to_bytes();
  Bytes buf(id.begin(), id.end());
  buf.insert(buf.end(), predicted.begin(), predicted.end());
  const std::span<std::uint8_t> r(buf.data() + id.size(), predicted.size());
  auto test = [&] { return Tau(trunc24(sha256(buf))) == target; };

  Correction out;
  for (int j = 0; j <= flip_budget && static_cast<std::size_t>(j) <= nbits; ++j) {
    if (enumerate_flips(r, nbits, j, test, out.candidates_tested, out.flipped)) {
      out.found = true;
      out.response.assign(r.begin(), r.end());
      return out;
    }
  }
  return out;
}

AttackModel train_attack_model(const puf::CrpTable& training, const puf::CrpTable& heldout,
                               const cma::FitOptions& options, std::uint64_t seed) {
  if (heldout.empty()) throw ArgumentError("held-out set is empty");
  std::unordered_set<std::uint32_t> seen;
  for (const auto& r : training) seen.insert(r.challenge.value());
  for (const auto& r : heldout) {
    if (seen.count(r.challenge.value())) throw ArgumentError("held-out challenge also appears in training");
  }
  AttackModel out;
  out.model = cma::fit_puf_model(training, options, seed).model;
  out.heldout_accuracy = cma::bit_accuracy(out.model, heldout);
  out.training_crps = training.size();
  return out;
}

std::uint64_t algorithm1_cost_bound(int challenge_space_bits, int flip_budget) {
  std::uint64_t per = 0;
  for (int j = 0; j <= flip_budget; ++j) per += combination_count(kResponseBits, static_cast<std::uint64_t>(j));
  return (std::uint64_t{1} << challenge_space_bits) * per;
}

Alg1Result algorithm1_attack(const cma::PufModel& model, Tau target_tau, IcaoAddress icao,
                             const Alg1Options& options) {
  if (options.challenge_space_bits < 1 || options.challenge_space_bits > 32) {
    throw ArgumentError("challenge space bits must be in 1..32");
  }
  if (options.flip_budget < 0 || options.flip_budget > 3) throw ArgumentError("flip budget must be in 0..3");
  const auto start = std::chrono::steady_clock::now();

  // Predictions are produced block by block so that wide sweeps stay in
  // bounded memory; a space that fits in one block is predicted once.
  constexpr std::uint64_t kBlock = std::uint64_t{1} << 20;
  const int k = options.challenge_space_bits;
  const std::uint64_t space = std::uint64_t{1} << k;
  const std::uint64_t blocks = (space + kBlock - 1) / kBlock;
  std::vector<Challenge> challenges;
  std::vector<Response> predicted;
  std::uint64_t loaded = UINT64_MAX;
  auto load = [&](std::uint64_t b) {
    if (loaded == b) return;
    const std::uint64_t first = b * kBlock;
    const std::uint64_t last = std::min(space, first + kBlock);
    challenges.clear();
    for (std::uint64_t x = first; x < last; ++x) challenges.emplace_back(static_cast<std::uint32_t>(x << (32 - k)));
    predicted = cma::predict_responses(model, challenges);
    loaded = b;
  };

  Alg1Result out;
  const auto id = icao.to_bytes();
  std::array<std::uint8_t, 3 + kResponseBytes> buf{};
  std::copy(id.begin(), id.end(), buf.begin());
  const std::span<std::uint8_t> r(buf.data() + 3, kResponseBytes);
  std::vector<std::size_t> chosen;
  std::size_t current = 0;

  auto test = [&] {
    if (Tau(trunc24(sha256(buf))) != target_tau) return false;
    if (!options.omega) return true;
    const Response cand = Response::from_bytes(r);
    return proto::challenge_from_omega(*options.omega, cand) == challenges[current];
  };

  for (int j = 0; j <= options.flip_budget; ++j) {
    for (std::uint64_t b = 0; b < blocks; ++b) {
      load(b);
      for (current = 0; current < challenges.size(); ++current) {
        const auto& p = predicted[current].bytes();
        std::copy(p.begin(), p.end(), r.begin());
        chosen.clear();
        if (enumerate_flips(r, kResponseBits, j, test, out.candidates_tested, chosen)) {
          out.found = true;
          out.challenge = challenges[current];
          out.response = Response::from_bytes(r);
          out.flips_used = j;
          if (proto::derive_tau(icao, out.response) != target_tau) throw std::logic_error("alg1: unsound hit");
          out.wall_time = std::chrono::steady_clock::now() - start;
          return out;
        }
      }
    }
  }
  out.wall_time = std::chrono::steady_clock::now() - start;
  return out;
}

CampaignResult run_algorithm1(const CrpOracle& oracle, Tau target_tau, IcaoAddress icao, const Alg1Options& options,
                              const CampaignOptions& campaign, std::uint64_t seed) {
  if (!oracle) throw ArgumentError("no CRP oracle");
  if (campaign.initial_crps == 0) throw ArgumentError("initial CRP count must be positive");

  CampaignResult out;
  for (std::size_t n = campaign.initial_crps;; n *= 2) {
    n = std::min(n, campaign.max_crps);
    ++out.rounds;
    const auto round = static_cast<std::uint64_t>(out.rounds);
    const auto training = oracle(n, derive_seed(seed, 3 * round));
    std::unordered_set<std::uint32_t> seen;
    for (const auto& c : training) seen.insert(c.challenge.value());
    puf::CrpTable heldout;
    for (auto& c : oracle(campaign.heldout_crps, derive_seed(seed, 3 * round + 1))) {
      if (!seen.count(c.challenge.value())) heldout.push_back(c);
    }
    out.model = train_attack_model(training, heldout, campaign.fit, derive_seed(seed, 3 * round + 2));
    out.attack = algorithm1_attack(out.model.model, target_tau, icao, options);
    if (out.attack.found || n >= campaign.max_crps) return out;
  }
}

ImpersonationResult impersonate(const std::optional<puf::CrpRecord>& recovered, IcaoAddress icao, Tau target_tau,
                                const proto::TowerDb& tower, std::uint64_t seed) {
  if (!recovered) throw ArgumentError("impersonate: no recovered (C, R) pair");
  if (proto::derive_tau(icao, recovered->response) != target_tau) {
    throw ArgumentError("impersonate: recovered response does not map to the target pseudo-address");
  }
  const proto::AircraftSecrets secrets{target_tau, proto::derive_theta(recovered->response)};
  proto::KnownResponse source(recovered->response);
  ImpersonationResult out;
  out.handshake = proto::run_handshake(secrets, source, tower, proto::HandshakeSeeds::derive(seed), {},
                                       proto::AircraftPolicy{.verify_tower = false});
  out.success = out.handshake.completed;
  return out;
}

std::optional<Response> find_tau_collision(IcaoAddress icao, Tau target, const Response& avoid, std::uint64_t seed,
                                           std::uint64_t max_tries) {
  Rng rng(seed);
  const auto id = icao.to_bytes();
  std::array<std::uint8_t, 3 + kResponseBytes> buf{};
  std::copy(id.begin(), id.end(), buf.begin());
  for (std::size_t i = 3; i < buf.size(); ++i) buf[i] = static_cast<std::uint8_t>(rng.next_u32() >> 24);

  for (std::uint64_t t = 0; t < max_tries; ++t) {
    // Counter in the last 8 bytes.
    for (std::size_t i = 0; i < 8; ++i) buf[buf.size() - 1 - i] ^= static_cast<std::uint8_t>(t >> (8 * i));
    const Response r = Response::from_bytes(std::span<const std::uint8_t>(buf).subspan(3));
    if (r != avoid && Tau(trunc24(sha256(buf))) == target) return r;
    for (std::size_t i = 0; i < 8; ++i) buf[buf.size() - 1 - i] ^= static_cast<std::uint8_t>(t >> (8 * i));
  }
  return std::nullopt;
}

}  // namespace ldacs::attack
