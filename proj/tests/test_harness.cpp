#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ldacs/harness.hpp"

using namespace ldacs;
using namespace ldacs::lab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ldacs-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig small(const std::string& name) {
  ScenarioConfig c;
  c.output_dir = scratch(name).string();
  c.aircraft.target_ber = 0.0;
  c.handshake.runs = 20;
  c.handshake.tamper = false;
  return c;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config survives a JSON round trip") {
    ScenarioConfig c;
    c.seed = 99;
    c.aircraft.device_seeds = {1, 2, 3, 4, 5};
    c.aging.mode = "additive";
    c.quantum.n_bits = {64};
    const auto back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    c.seed = 100;
    CHECK(config_hash(back) != config_hash(c));
  }

  TEST_CASE("partial configs fall back to defaults") {
    const auto c = config_from_json(json{{"schema", kSchema}, {"seed", 5}});
    CHECK(c.seed == 5);
    CHECK(c.aircraft.count == 5);
    CHECK(c.challenge_space_bits == 16);
    CHECK(c.aircraft.icao_base == 0xA00001);
  }

  TEST_CASE("bad configs are config errors") {
    const json base = to_json(ScenarioConfig{});
    auto with = [&](const std::function<void(json&)>& edit) {
      json j = base;
      edit(j);
      return j;
    };
    CHECK_THROWS_AS(config_from_json(with([](json& j) { j["colour"] = "red"; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](json& j) { j["aircraft"]["wings"] = 2; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](json& j) { j.erase("schema"); })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](json& j) { j["schema"] = "ldacs-lab/0"; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](json& j) { j["seed"] = "one"; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](json& j) { j["aircraft"]["votes"] = 4; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](json& j) { j["aircraft"]["icao_base"] = "zz"; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](json& j) { j["attack"]["crp_source"] = "oracle"; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);
  }

  TEST_CASE("config files load and a missing file is reported") {
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    ScenarioConfig c;
    c.seed = 3;
    save_config(dir / "s.json", c);
    CHECK(config_hash(load_config(dir / "s.json")) == config_hash(c));
    CHECK_THROWS(load_config(dir / "absent.json"));
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  }

  TEST_CASE("registration gives five distinct pseudonyms and is reproducible") {
    const auto c = small("reg");
    const auto a = run_registration(c);
    const auto b = run_registration(c);
    REQUIRE(a.aircraft.size() == 5);
    std::set<std::uint32_t> taus;
    for (const auto& r : a.aircraft) taus.insert(r.secrets.tau.value());
    CHECK(taus.size() == 5);
    CHECK(a.aircraft == b.aircraft);
    CHECK(a.tower.records() == b.tower.records());
    for (const auto& r : a.tower.records()) CHECK((r.challenge.value() & 0xFFFF) == 0);

    save_fleet(c.output_dir, a);
    const auto loaded = load_fleet(c.output_dir);
    CHECK(loaded.aircraft == a.aircraft);
    CHECK(loaded.tower.records() == a.tower.records());
  }

  TEST_CASE("a short pseudonym collision is rejected at registration") {
    auto c = small("collide");
    c.tau_bits = 8;
    std::optional<std::uint64_t> colliding;
    for (std::uint64_t seed = 1; seed <= 2000 && !colliding; ++seed) {
      c.seed = seed;
      try {
        run_registration(c);
      } catch (const proto::RegistrationError&) {
        colliding = seed;
      }
    }
    REQUIRE(colliding.has_value());
    c.seed = *colliding;
    CHECK_THROWS_AS(run_registration(c), proto::RegistrationError);
  }

  TEST_CASE("experiments that need a fleet report the missing artifact") {
    const auto c = small("missing");
    CHECK_THROWS_AS(load_fleet(c.output_dir), MissingArtifact);
    CHECK_THROWS_AS(run_experiment(c, Experiment::kHandshake), MissingArtifact);
  }

  TEST_CASE("quantum table rows") {
    const auto c = small("quantum");
    const auto r = run_experiment(c, Experiment::kQuantumTable);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.number(0, "n_bits") == 128);
    CHECK(r.number(0, "grover_bits") == 64);
    CHECK(r.number(1, "preimage_bits") == 64);
    CHECK(r.number(2, "grover_bits") == 128);
    CHECK(fs::exists(fs::path(c.output_dir) / "quantum_table.csv"));
  }

  TEST_CASE("every CSV row carries the config hash") {
    const auto c = small("csv");
    const auto r = report_flip_cost(c);
    std::stringstream ss;
    write_csv(ss, r);
    std::string line;
    std::size_t data = 0;
    bool header = false;
    while (std::getline(ss, line)) {
      if (line.starts_with("#")) continue;
      if (!header) {
        CHECK(line.starts_with("config_hash,"));
        header = true;
        continue;
      }
      CHECK(line.starts_with(config_hash(c) + ","));
      ++data;
    }
    CHECK(data == r.rows.size());
    CHECK(Report::format_cell(0.1) == "0.1");
    CHECK(Report::format_cell(true) == "1");
  }

  TEST_CASE("reruns of a config write byte-identical reports") {
    auto c = small("rerun");
    fs::create_directories(c.output_dir);
    save_fleet(c.output_dir, run_registration(c));
    run_experiment(c, Experiment::kHandshake);
    run_experiment(c, Experiment::kLinkability);
    const auto hs = slurp(fs::path(c.output_dir) / "handshake.csv");
    const auto lk = slurp(fs::path(c.output_dir) / "linkability.csv");
    CHECK_FALSE(hs.empty());
    run_experiment(c, Experiment::kHandshake);
    run_experiment(c, Experiment::kLinkability);
    CHECK(slurp(fs::path(c.output_dir) / "handshake.csv") == hs);
    CHECK(slurp(fs::path(c.output_dir) / "linkability.csv") == lk);
  }

  TEST_CASE("experiment names") {
    for (auto e : {Experiment::kHandshake, Experiment::kLinkability, Experiment::kAlg1, Experiment::kAgingCurve,
                   Experiment::kQuantumTable, Experiment::kPkiCompare, Experiment::kFlipCost}) {
      CHECK(experiment_from_string(to_string(e)) == e);
    }
    CHECK_THROWS_AS(experiment_from_string("nope"), ConfigError);
  }

  TEST_CASE("closed-form failure helpers") {
    CHECK(majority_failure(0.0, 5) == 0.0);
    CHECK(majority_failure(0.5, 5) == doctest::Approx(0.5));
    // P(>= 3 of 5) at p = 0.1: 10 p^3 q^2 + 5 p^4 q + p^5.
    CHECK(majority_failure(0.1, 5) == doctest::Approx(0.00856));
    CHECK(session_failure_iid(0.0, 5) == 0.0);
    CHECK(session_failure_iid(0.1, 5) == doctest::Approx(1.0 - std::pow(1.0 - 0.00856, 128)));
  }
}
