// ldacs-lab: command line front end for the scenario harness.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ldacs/adversary.hpp"
#include "ldacs/crp.hpp"
#include "ldacs/harness.hpp"

namespace {

using namespace ldacs;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Scenario JSON file (defaults apply when omitted)");
  cmd->add_option("--seed", c.seed, "Override the root seed");
  cmd->add_option("--out", c.out_dir, "Override output_dir");
}

lab::ScenarioConfig resolve(const Common& c) {
  lab::ScenarioConfig cfg = c.config_path.empty() ? lab::ScenarioConfig{} : lab::load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  cfg.validate();
  return cfg;
}

void emit(const lab::Report& r) {
  lab::write_csv(std::cout, r);
  std::cerr << "wrote " << (std::filesystem::path(r.experiment) += ".csv").string() << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"LDACS PUF authentication lab"};
  app.require_subcommand(1);

  Common common;
  auto* init = app.add_subcommand("init-config", "Write the default scenario config");
  std::string init_path = "scenario.json";
  init->add_option("path", init_path, "Destination file");
  add_common(init, common);

  auto* reg = app.add_subcommand("register", "Create, calibrate and register the fleet");
  add_common(reg, common);

  auto* hs = app.add_subcommand("handshake", "Honest runs plus exhaustive single-bit tampering");
  add_common(hs, common);

  auto* sniff = app.add_subcommand("sniff", "Tap the fleet's sessions and link tau to ICAO");
  add_common(sniff, common);

  auto* alg1 = app.add_subcommand("attack-alg1", "Model-based (C, R) recovery and impersonation");
  add_common(alg1, common);

  auto* cost = app.add_subcommand("attack-cost", "Bit-flip counts and quantum cost exponents");
  add_common(cost, common);

  auto* age = app.add_subcommand("age-study", "Handshake failure rate against device age");
  add_common(age, common);

  auto* pki = app.add_subcommand("pki-compare", "PUF handshake against the certificate baseline");
  add_common(pki, common);

  auto* exp = app.add_subcommand("export-crps", "Write CRPs of a registered aircraft");
  add_common(exp, common);
  std::size_t aircraft_index = 0;
  std::size_t crp_count = 1000;
  bool noisy = false;
  std::string crp_path;
  exp->add_option("--aircraft", aircraft_index, "Fleet index");
  exp->add_option("--count", crp_count, "Number of random challenges");
  exp->add_flag("--noisy", noisy, "Single noisy read instead of the noiseless response");
  exp->add_option("--file", crp_path, "Destination (default <output_dir>/crps-<index>.txt)");

  CLI11_PARSE(app, argc, argv);

  if (init->parsed()) {
    lab::save_config(init_path, resolve(common));
    std::cerr << "wrote " << init_path << '\n';
    return lab::kExitOk;
  }

  const auto cfg = resolve(common);
  const std::filesystem::path dir(cfg.output_dir);

  if (reg->parsed()) {
    const auto fleet = lab::run_registration(cfg);
    lab::save_fleet(dir, fleet);
    for (const auto& a : fleet.aircraft) {
      std::cout << id24_to_hex(a.icao.value()) << " tau=" << id24_to_hex(a.secrets.tau.value())
                << " sigma=" << a.noise_sigma << '\n';
    }
    std::cerr << "registered " << fleet.aircraft.size() << " aircraft into " << dir.string() << '\n';
  } else if (hs->parsed()) {
    emit(lab::run_experiment(cfg, lab::Experiment::kHandshake));
  } else if (sniff->parsed()) {
    // One captured session per registered aircraft, then the linkability study.
    const auto fleet = lab::load_fleet(dir);
    std::vector<proto::TapFrame> tap;
    for (std::size_t i = 0; i < fleet.aircraft.size(); ++i) {
      const auto device = puf::generate_device(fleet.aircraft[i].device_seed, 0.0);
      proto::PufReader reader(device, cfg.aircraft.votes, i);
      const auto out = proto::run_handshake(fleet.aircraft[i].secrets, reader, fleet.tower,
                                            proto::HandshakeSeeds::derive(derive_seed(cfg.seed, 900 + i)));
      for (const auto& f : out.frames) tap.push_back({i, f});
    }
    std::ofstream tap_file(dir / "tap.txt");
    proto::write_tap(tap_file, tap);
    for (const auto& s : attack::sessions_from_tap(tap)) {
      std::cout << "tick " << s.timestamp << " tau=" << id24_to_hex(s.extracted_tau.value()) << " frames=" << s.frames.size()
                << '\n';
    }
    emit(lab::run_experiment(cfg, lab::Experiment::kLinkability));
  } else if (alg1->parsed()) {
    emit(lab::run_experiment(cfg, lab::Experiment::kAlg1));
  } else if (cost->parsed()) {
    emit(lab::run_experiment(cfg, lab::Experiment::kFlipCost));
    emit(lab::run_experiment(cfg, lab::Experiment::kQuantumTable));
  } else if (age->parsed()) {
    emit(lab::run_experiment(cfg, lab::Experiment::kAgingCurve));
  } else if (pki->parsed()) {
    emit(lab::run_experiment(cfg, lab::Experiment::kPkiCompare));
  } else if (exp->parsed()) {
    const auto fleet = lab::load_fleet(dir);
    if (aircraft_index >= fleet.aircraft.size()) throw lab::ConfigError("--aircraft out of range");
    const auto device = lab::device_of(fleet.aircraft[aircraft_index]);
    const auto crps = puf::collect_crps(device, crp_count, derive_seed(cfg.seed, 800 + aircraft_index), noisy);
    if (crp_path.empty()) crp_path = (dir / ("crps-" + std::to_string(aircraft_index) + ".txt")).string();
    std::ofstream out(crp_path);
    puf::write_crps(out, crps);
    std::cerr << "wrote " << crps.size() << " CRPs to " << crp_path << '\n';
  }
  return lab::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return lab::kExitConfig;
  } catch (const lab::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return lab::kExitInvariant;
  } catch (const proto::RegistrationError& e) {
    std::cerr << "registration rejected: " << e.what() << '\n';
    return lab::kExitInvariant;
  } catch (const lab::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return lab::kExitMissing;
  } catch (const FormatError& e) {
    std::cerr << "unreadable artifact: " << e.what() << '\n';
    return lab::kExitMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
