#include "doctest.h"

#include <functional>

#include "ldacs/adversary.hpp"
#include "ldacs/hash.hpp"

using namespace ldacs;
using namespace ldacs::attack;

namespace {

// Ordered selections of k distinct items out of n, counted by enumeration.
std::uint64_t brute_permutations(std::uint64_t n, std::uint64_t k) {
  std::vector<bool> used(n, false);
  std::function<std::uint64_t(std::uint64_t)> rec = [&](std::uint64_t left) -> std::uint64_t {
    if (left == 0) return 1;
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      used[i] = true;
      total += rec(left - 1);
      used[i] = false;
    }
    return total;
  };
  return rec(k);
}

Challenge reduced(std::uint32_t x, int k) { return Challenge(x << (32 - k)); }

SniffedSession seen(Tau tau, std::uint64_t tick) { return {{}, tau, tick}; }

}  // namespace

TEST_SUITE("adversary") {
  TEST_CASE("permutation counts match enumeration") {
    for (std::uint64_t n = 0; n <= 10; ++n) {
      for (std::uint64_t k = 0; k <= std::min<std::uint64_t>(n, 3); ++k) {
        CAPTURE(n);
        CAPTURE(k);
        CHECK(permutation_count(n, k) == brute_permutations(n, k));
      }
    }
    CHECK(permutation_count(128, 2) == 16256);
    CHECK(permutation_count(192, 3) == 6967680);
    CHECK(combination_count(128, 2) == 8128);
    CHECK(combination_count(128, 0) == 1);
    CHECK_THROWS_AS(permutation_count(3, 4), ArgumentError);
    CHECK_THROWS_AS(combination_count(3, 4), ArgumentError);
    CHECK_THROWS_AS(permutation_count(1000, 10), ArgumentError);  // overflows 64 bits
  }

  TEST_CASE("quantum cost exponents") {
    CHECK(quantum_cost_bits(128, QuantumAttack::kGroverSearch) == 64.0);
    CHECK(quantum_cost_bits(256, QuantumAttack::kGroverSearch) == 128.0);
    CHECK(quantum_cost_bits(192, QuantumAttack::kPreimage) == 64.0);
    CHECK(quantum_cost_bits(128, QuantumAttack::kPreimage) == doctest::Approx(128.0 / 3.0));
  }

  TEST_CASE("tau and omega are only read from the right frames") {
    const proto::M1 m1{Tau(0xABCDEF), {}};
    CHECK(extract_tau(m1.encode()) == Tau(0xABCDEF));
    proto::M4 m4;
    CHECK_THROWS_AS(extract_tau(m4.encode()), WrongFrameError);
    CHECK_THROWS_AS(extract_omega(m1.encode()), WrongFrameError);
    CHECK_THROWS_AS(extract_tau(Bytes{0x01, 0x02}), proto::DecodeError);
  }

  TEST_CASE("sessions are split at each M1") {
    const Bytes m1 = proto::M1{Tau(1), {}}.encode();
    const Bytes m4 = proto::M4{}.encode();
    const std::vector<proto::TapFrame> tap{{5, m4}, {10, m1}, {11, m4}, {20, Bytes{0xFF}}, {30, m1}};
    const auto s = sessions_from_tap(tap);
    REQUIRE(s.size() == 2);
    CHECK(s[0].timestamp == 10);
    CHECK(s[0].frames.size() == 2);
    CHECK(s[1].timestamp == 30);
  }

  TEST_CASE("linking by flight schedule") {
    const IcaoAddress a(0xA00001), b(0xA00002);
    const std::vector<ScheduleEntry> schedule{{a, 0, 100}, {b, 50, 200}};

    SUBCASE("a lone aircraft is linked with certainty") {
      const std::vector<SniffedSession> obs{seen(Tau(7), 10)};
      const auto t = link_tau_to_icao(obs, schedule);
      REQUIRE(t.find(Tau(7)) != nullptr);
      CHECK(t.find(Tau(7))->confidence == 1.0);
      CHECK(t.find(Tau(7))->icao == a);
      CHECK(t.find(Tau(8)) == nullptr);
    }
    SUBCASE("overlap halves the confidence until a second sighting") {
      std::vector<SniffedSession> obs{seen(Tau(7), 60)};
      CHECK(link_tau_to_icao(obs, schedule).find(Tau(7))->confidence == 0.5);
      obs.push_back(seen(Tau(7), 150));
      const auto t = link_tau_to_icao(obs, schedule);
      const auto* e = t.find(Tau(7));
      CHECK(e->confidence == 1.0);
      CHECK(e->icao == b);
    }
    SUBCASE("contradictory sightings leave no candidate") {
      const std::vector<SniffedSession> obs{seen(Tau(7), 10), seen(Tau(7), 150)};
      const auto t = link_tau_to_icao(obs, schedule);
      const auto* e = t.find(Tau(7));
      CHECK(e->candidates.empty());
      CHECK(e->confidence == 0.0);
      CHECK_FALSE(e->icao.has_value());
    }
  }

  TEST_CASE("omega reveals the challenge given the response") {
    const Response r = puf::generate_device(3, 0.0).evaluate(Challenge(0x12340000));
    Rng rng(5);
    int ok = 0;
    for (int n = 0; n < 1000; ++n) {
      const Challenge c(rng.next_u32());
      ok += recover_challenge_from_omega(proto::derive_omega(c, r), r) == c;
    }
    CHECK(ok == 1000);
    CHECK(recover_challenge_from_omega(proto::derive_omega(Challenge(0), r), r) == Challenge(0));
    // A wrong response gives a wrong challenge.
    Response wrong = r;
    wrong.flip_bit(0);
    CHECK(recover_challenge_from_omega(proto::derive_omega(Challenge(1), r), wrong) != Challenge(1));
  }

  TEST_CASE("flip correction finds every response within the budget") {
    const IcaoAddress icao(0x00ABCD);
    const Bytes truth{0x5A, 0xC3};
    const Tau target = proto::derive_tau(icao, truth);
    std::size_t recovered = 0, pairs = 0;
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = i + 1; j < 16; ++j) {
        Bytes noisy = truth;
        noisy[i / 8] ^= static_cast<std::uint8_t>(1U << (7 - i % 8));
        noisy[j / 8] ^= static_cast<std::uint8_t>(1U << (7 - j % 8));
        const auto c = correct_response(icao, target, noisy, 16, 2);
        ++pairs;
        recovered += c.found && c.response == truth;
        CHECK(c.candidates_tested <= 1 + 16 + 120);
      }
    }
    CHECK(pairs == 120);
    CHECK(recovered == pairs);
    Bytes one = truth;
    one[0] ^= 0x80;
    one[1] ^= 0x01;
    CHECK_FALSE(correct_response(icao, target, one, 16, 1).found);
    CHECK_THROWS_AS(correct_response(icao, target, truth, 17, 1), ArgumentError);
  }

  TEST_CASE("cost bound") {
    CHECK(algorithm1_cost_bound(16, 0) == 65536);
    CHECK(algorithm1_cost_bound(16, 2) == 65536ULL * (1 + 128 + 8128));
    CHECK(algorithm1_cost_bound(8, 1) == 256ULL * 129);
  }

  TEST_CASE("a perfect model recovers the registered pair and impersonates") {
    const int k = 16;
    const auto dev = puf::generate_device(77, 0.0);
    const IcaoAddress icao(0xA00042);
    const auto reg = proto::register_aircraft(icao, dev, reduced(0x9C41, k));
    proto::TowerDb db;
    db.enroll(reg.tower_side);

    Alg1Options opt;
    opt.challenge_space_bits = k;
    opt.flip_budget = 0;
    const auto r = algorithm1_attack(cma::PufModel::from_device(dev), reg.aircraft_side.tau, icao, opt);
    REQUIRE(r.found);
    CHECK(r.challenge == reg.tower_side.challenge);
    CHECK(r.response == reg.tower_side.response);
    CHECK(r.flips_used == 0);
    CHECK(r.candidates_tested <= algorithm1_cost_bound(k, 0));

    const auto imp = impersonate(puf::CrpRecord{r.challenge, r.response}, icao, reg.aircraft_side.tau, db, 4);
    CHECK(imp.success);
  }

  TEST_CASE("two wrong model bits need a flip budget of two") {
    const int k = 8;
    const auto dev = puf::generate_device(78, 0.0);
    const IcaoAddress icao(0xA00043);
    const auto reg = proto::register_aircraft(icao, dev, reduced(0xB7, k));
    auto model = cma::PufModel::from_device(dev);
    model.chains.row(17) *= -1.0;
    model.chains.row(90) *= -1.0;

    Alg1Options opt;
    opt.challenge_space_bits = k;
    opt.omega = proto::derive_omega(reg.tower_side.challenge, reg.tower_side.response);

    opt.flip_budget = 1;
    CHECK_FALSE(algorithm1_attack(model, reg.aircraft_side.tau, icao, opt).found);

    opt.flip_budget = 2;
    const auto r = algorithm1_attack(model, reg.aircraft_side.tau, icao, opt);
    REQUIRE(r.found);
    CHECK(r.flips_used == 2);
    CHECK(r.challenge == reg.tower_side.challenge);
    CHECK(r.response == reg.tower_side.response);
  }

  TEST_CASE("a colliding decoy response passes tau but not the tower") {
    const auto dev = puf::generate_device(79, 0.0);
    const IcaoAddress icao(0xA00044);
    const auto reg = proto::register_aircraft(icao, dev, Challenge(0x11110000));
    proto::TowerDb db;
    db.enroll(reg.tower_side);

    const auto decoy = find_tau_collision(icao, reg.aircraft_side.tau, reg.tower_side.response, 1, 1ULL << 28);
    REQUIRE(decoy.has_value());
    CHECK(*decoy != reg.tower_side.response);
    CHECK(proto::derive_tau(icao, *decoy) == reg.aircraft_side.tau);

    const auto imp = impersonate(puf::CrpRecord{reg.tower_side.challenge, *decoy}, icao, reg.aircraft_side.tau, db, 2);
    CHECK_FALSE(imp.success);
    CHECK(imp.handshake.abort_reason == proto::AbortReason::kAircraftAuthFailed);

    CHECK_THROWS_AS(impersonate(std::nullopt, icao, reg.aircraft_side.tau, db, 2), ArgumentError);
    CHECK_THROWS_AS(impersonate(puf::CrpRecord{reg.tower_side.challenge, Response{}}, icao, reg.aircraft_side.tau, db, 2),
                    ArgumentError);
  }

  TEST_CASE("attack training refuses overlapping held-out data") {
    const auto dev = puf::generate_device(80, 0.0);
    const auto crps = puf::collect_crps(dev, 20, 1);
    CHECK_THROWS_AS(train_attack_model(crps, crps, {}, 1), ArgumentError);
  }
}
