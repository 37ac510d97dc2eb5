#pragma once

// Scenario configuration, experiment drivers and report emission.
//
// A scenario is one JSON file (schema "ldacs-lab/1"). Every key is optional
// and falls back to the desk-scale defaults below; unknown keys are errors.
// Every stochastic choice is derived from the root `seed` with derive_seed
// and a fixed stream id, so a config file fully determines every report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ldacs/adversary.hpp"
#include "ldacs/handshake.hpp"
#include "ldacs/puf.hpp"
#include "ldacs/registration.hpp"

namespace ldacs::lab {

inline constexpr const char* kSchema = "ldacs-lab/1";
inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInvariant = 3, kExitMissing = 4 };

struct AircraftConfig {
  std::size_t count = 5;
  std::uint32_t icao_base = 0xA00001;
  /// Explicit device seeds; when empty, device i uses derive_seed(seed, 100 + i).
  std::vector<std::uint64_t> device_seeds;
  /// Manufacturing bit error rate each device is calibrated to; 0 = noiseless.
  double target_ber = 0.02;
  int votes = 5;
};

struct HandshakeConfig {
  std::size_t runs = 1000;
  /// Read the PUF with noise during the runs (criterion runs are noiseless).
  bool noisy = false;
  /// Exhaustive single-bit tampering of one honest transcript.
  bool tamper = true;
};

struct LinkabilityConfig {
  std::size_t scenarios = 100;
  std::size_t aircraft = 5;
  std::size_t sessions_per_aircraft = 3;
  /// Observation window and flight length, in ticks. The "small airport"
  /// sparsity is flight_ticks * aircraft * sessions / window_ticks.
  std::uint64_t window_ticks = 100'000;
  std::uint64_t flight_ticks = 600;
};

struct AttackConfig {
  std::size_t scenarios = 20;
  int flip_budget = 2;
  std::size_t training_crps = 5'000;
  std::size_t heldout_crps = 10'000;
  std::size_t max_crps = 40'000;
  std::uint64_t cma_budget = 50'000;
  std::uint64_t stall_generations = 100;
  /// "target": CRPs from the attacked device; "sibling": from another device.
  std::string crp_source = "target";
  /// Filter tau hits with the omega sniffed from M2.
  bool use_omega = true;
};

struct AgingConfig {
  double factor_per_period = 1.19;
  double period_years = 2.0;
  std::string mode = "multiplicative";  // or "additive"
  double horizon_years = 10.0;
  double step_years = 1.0;
  std::size_t trials_per_point = 10'000;

  puf::AgingPolicy policy() const;
};

struct QuantumConfig {
  std::vector<std::uint64_t> n_bits{128, 192, 256};
};

struct PkiConfig {
  std::size_t runs_per_age = 200;
  std::uint64_t validity_ticks = 1'000'000;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  int challenge_space_bits = 16;
  int tau_bits = proto::kTauBits;
  AircraftConfig aircraft;
  HandshakeConfig handshake;
  LinkabilityConfig linkability;
  AttackConfig attack;
  AgingConfig aging;
  QuantumConfig quantum;
  PkiConfig pki;
  std::string output_dir = "lab-out";

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  std::uint64_t device_seed(std::size_t i) const;
};

nlohmann::json to_json(const ScenarioConfig& config);
/// Throws ConfigError on unknown keys, wrong types, a missing or different
/// schema tag, or values that fail validate().
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ScenarioConfig& config);
/// First 16 hex digits of h(canonical JSON of the config).
std::string config_hash(const ScenarioConfig& config);

// --- reports ----------------------------------------------------------------

struct Report {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;
  /// Cells are pre-formatted; numbers use the shortest round-trip form.
  std::vector<std::vector<std::string>> rows;
  /// Nested records for the JSON side-car, may be null.
  nlohmann::json trace;

  template <typename... T>
  void add_row(const T&... cells) {
    rows.push_back({format_cell(cells)...});
  }
  static std::string format_cell(double v);
  static std::string format_cell(const std::string& v) { return v; }
  static std::string format_cell(const char* v) { return v; }
  static std::string format_cell(bool v) { return v ? "1" : "0"; }
  template <typename I>
    requires std::is_integral_v<I>
  static std::string format_cell(I v) { return std::to_string(v); }

  /// Index of a column; throws std::out_of_range.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

/// CSV: "# key=value" provenance lines, a header row, then data rows; the
/// first column of every row is the config hash.
void write_csv(std::ostream& out, const Report& report);
nlohmann::json to_json(const Report& report);

// --- registration -------------------------------------------------------------

struct Fleet {
  proto::TowerDb tower;
  std::vector<proto::AircraftRecordFile> aircraft;
};

/// Creates, calibrates and registers `aircraft.count` devices. Challenges are
/// drawn from the reduced space {0,1}^k || 0^(32-k). Throws
/// proto::RegistrationError when two aircraft collide on tau.
Fleet run_registration(const ScenarioConfig& config);
void save_fleet(const std::filesystem::path& dir, const Fleet& fleet);
/// Throws MissingArtifact when either file is absent.
Fleet load_fleet(const std::filesystem::path& dir);
/// Rebuilds an aircraft's device from its record.
puf::PufDevice device_of(const proto::AircraftRecordFile& record);

// --- experiments ---------------------------------------------------------------

enum class Experiment { kHandshake, kLinkability, kAlg1, kAgingCurve, kQuantumTable, kPkiCompare, kFlipCost };

std::string to_string(Experiment e);
/// Throws ConfigError on an unknown name.
Experiment experiment_from_string(const std::string& name);

/// Abort class the protocol must raise when bit `bit` of frame `frame_index`
/// (0..3 = M1..M4) of an honest run is flipped in flight.
proto::AbortReason documented_abort(std::size_t frame_index, std::size_t bit,
                                    const std::vector<Bytes>& honest_frames, const proto::TowerDb& db);

struct HandshakeStudy {
  std::size_t runs = 0;
  std::size_t completed = 0;
  std::size_t keys_equal = 0;
  std::size_t tamper_cases = 0;
  std::size_t tamper_matched = 0;
  std::size_t omega_checked = 0;
  std::size_t bytes_on_air = 0;
};
HandshakeStudy study_handshake(const ScenarioConfig& config, const Fleet& fleet);

struct LinkabilityStudy {
  std::size_t scenarios = 0;
  /// Scenarios in which every aircraft's tau links to its ICAO at confidence 1.
  std::size_t sparse_all_linked = 0;
  double sparse_mean_confidence = 0.0;
  double overlap_max_confidence = 0.0;
  /// Links at confidence 1 that name the wrong aircraft (must stay 0).
  std::size_t false_links = 0;
};
LinkabilityStudy study_linkability(const ScenarioConfig& config);

struct Alg1Scenario {
  std::uint64_t seed = 0;
  Tau target_tau;
  Challenge registered;
  bool recovered = false;
  bool exact = false;  // recovered pair equals the registered (C, R)
  bool impersonated = false;
  int flips_used = 0;
  int rounds = 0;
  std::size_t training_crps = 0;
  double heldout_accuracy = 0.0;
  std::uint64_t candidates_tested = 0;
  double attack_seconds = 0.0;
  double train_seconds = 0.0;
};
struct Alg1Study {
  std::vector<Alg1Scenario> scenarios;
  double success_rate() const;
  double total_seconds() const;
};
Alg1Study study_alg1(const ScenarioConfig& config);

/// P(majority of `votes` reads wrong) for a per-read error probability p.
double majority_failure(double p, int votes);
/// Closed-form session failure for one device and registered challenge:
/// 1 - prod_i (1 - majority_failure(Phi(-|delta_i| / sigma))).
double session_failure_closed_form(const puf::PufDevice& device, Challenge c, int votes);
/// Same for 128 independent bits each failing a read with probability `ber`.
double session_failure_iid(double ber, int votes);

struct AgingPoint {
  double years = 0.0;
  double effective_ber = 0.0;
  double ber_ratio = 0.0;  // effective / base, fleet mean
  double mc_failure = 0.0;
  double closed_form_failure = 0.0;
  double iid_failure = 0.0;
  std::size_t trials = 0;
};
/// Monte-Carlo handshakes against the fleet at each age. Noise draws are
/// shared across ages (common random numbers), so the failure curve is
/// pathwise non-decreasing.
std::vector<AgingPoint> study_aging(const ScenarioConfig& config, const Fleet& fleet, std::size_t trials_per_point);

struct PkiAgePoint {
  double years = 0.0;
  double puf_success = 0.0;
  double pki_success = 0.0;
};
struct PkiComparison {
  std::vector<PkiAgePoint> ages;
  std::size_t puf_messages = 0;
  std::size_t puf_bytes = 0;
  std::size_t pki_messages = 0;
  std::size_t pki_bytes = 0;
  std::size_t pki_verifications = 0;
  std::size_t puf_aircraft_secrets = 0;
  std::size_t puf_tower_secrets = 0;
  std::size_t pki_aircraft_secrets = 0;
  std::size_t pki_tower_secrets = 0;
};
PkiComparison study_pki(const ScenarioConfig& config, const Fleet& fleet);

Report report_handshake(const ScenarioConfig& config, const HandshakeStudy& s);
Report report_linkability(const ScenarioConfig& config, const LinkabilityStudy& s);
Report report_alg1(const ScenarioConfig& config, const Alg1Study& s);
Report report_aging(const ScenarioConfig& config, const std::vector<AgingPoint>& points);
Report report_quantum(const ScenarioConfig& config);
Report report_flip_cost(const ScenarioConfig& config);
Report report_pki(const ScenarioConfig& config, const PkiComparison& c);

/// Runs one experiment, checks its invariants (InvariantViolation) and
/// writes <output_dir>/<experiment>.csv (plus .json for alg1). Experiments
/// that use the registered fleet throw MissingArtifact when it is absent.
Report run_experiment(const ScenarioConfig& config, Experiment experiment);

}  // namespace ldacs::lab
