#include "ldacs/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "ldacs/crp.hpp"
#include "ldacs/errors.hpp"
#include "ldacs/hash.hpp"
#include "ldacs/messages.hpp"
#include "ldacs/pki.hpp"

namespace ldacs::lab {

using nlohmann::json;

namespace {

// Seed streams under the root seed.
constexpr std::uint64_t kRegistrationChallenges = 1;
constexpr std::uint64_t kDeviceBase = 100;
constexpr std::uint64_t kHandshakeBase = 200'000;
constexpr std::uint64_t kAlg1Base = 300'000;
constexpr std::uint64_t kAgingReadBase = 400'000;
constexpr std::uint64_t kAgingSessionBase = 500'000;
constexpr std::uint64_t kPkiBase = 600'000;
constexpr std::uint64_t kLinkBase = 700'000;

// --- strict JSON reading --------------------------------------------------------

template <typename T>
bool has_type(const json& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v.is_boolean();
  } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  } else if constexpr (std::is_integral_v<T>) {
    return v.is_number_integer();
  } else if constexpr (std::is_floating_point_v<T>) {
    return v.is_number();
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v.is_string();
  } else {
    return v.is_array();
  }
}

class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!has_type<T>(*it)) throw ConfigError(where_ + "." + key + ": wrong type");
    if constexpr (std::is_same_v<T, std::vector<std::uint64_t>>) {
      out.clear();
      for (const auto& e : *it) {
        if (!has_type<std::uint64_t>(e)) throw ConfigError(where_ + "." + key + ": expected unsigned integers");
        out.push_back(e.get<std::uint64_t>());
      }
    } else {
      out = it->template get<T>();
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

std::string hex_prefix(const Digest& d, std::size_t bytes) {
  return to_hex(std::span<const std::uint8_t>(d.data(), bytes));
}

// --- fleet helpers ----------------------------------------------------------------

Challenge reduced_challenge(Rng& rng, int bits) {
  const std::uint32_t x = rng.next_u32() >> (32 - bits);
  return Challenge(bits == 32 ? x : x << (32 - bits));
}

const proto::TowerRecord& record_for(const Fleet& fleet, IcaoAddress icao) {
  for (const auto& r : fleet.tower.records()) {
    if (r.icao == icao) return r;
  }
  throw MissingArtifact("tower table has no record for ICAO " + id24_to_hex(icao.value()));
}

void check_fleet_identities(const ScenarioConfig& config, const Fleet& fleet) {
  for (const auto& r : fleet.tower.records()) {
    if (proto::challenge_from_omega(proto::derive_omega(r.challenge, r.response), r.response) != r.challenge) {
      throw InvariantViolation("omega does not give back C for ICAO " + id24_to_hex(r.icao.value()));
    }
    if (proto::derive_tau(r.icao, r.response, config.tau_bits) != r.tau) {
      throw InvariantViolation("stored tau disagrees with h(ICAO || R) for ICAO " + id24_to_hex(r.icao.value()));
    }
  }
}

double normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

// --- config -----------------------------------------------------------------------

puf::AgingPolicy AgingConfig::policy() const {
  puf::AgingPolicy p;
  p.factor_per_period = factor_per_period;
  p.period_years = period_years;
  p.mode = mode == "additive" ? puf::AgingMode::kAdditive : puf::AgingMode::kMultiplicative;
  return p;
}

void ScenarioConfig::validate() const {
  require(challenge_space_bits >= 1 && challenge_space_bits <= 32, "challenge_space_bits must be in 1..32");
  require(tau_bits >= 1 && tau_bits <= proto::kTauBits, "tau_bits must be in 1..24");
  require(aircraft.count >= 1, "aircraft.count must be positive");
  require(aircraft.icao_base + aircraft.count - 1 <= 0xFFFFFF, "ICAO addresses overflow 24 bits");
  require(aircraft.device_seeds.empty() || aircraft.device_seeds.size() == aircraft.count,
          "aircraft.device_seeds must be empty or list one seed per aircraft");
  require(aircraft.target_ber >= 0.0 && aircraft.target_ber < 0.5, "aircraft.target_ber must be in [0, 0.5)");
  require(aircraft.votes >= 1 && aircraft.votes % 2 == 1, "aircraft.votes must be odd");
  require(handshake.runs >= 1, "handshake.runs must be positive");
  require(linkability.scenarios >= 1 && linkability.aircraft >= 1 && linkability.sessions_per_aircraft >= 1,
          "linkability counts must be positive");
  require(linkability.flight_ticks >= 1 && linkability.flight_ticks <= linkability.window_ticks,
          "linkability.flight_ticks must be in 1..window_ticks");
  require(attack.scenarios >= 1, "attack.scenarios must be positive");
  require(attack.flip_budget >= 0 && attack.flip_budget <= 3, "attack.flip_budget must be in 0..3");
  require(attack.training_crps >= 1 && attack.heldout_crps >= 1, "attack CRP counts must be positive");
  require(attack.max_crps >= attack.training_crps, "attack.max_crps must be at least training_crps");
  require(attack.cma_budget >= 1, "attack.cma_budget must be positive");
  require(attack.crp_source == "target" || attack.crp_source == "sibling",
          "attack.crp_source must be \"target\" or \"sibling\"");
  require(aging.factor_per_period >= 1.0, "aging.factor_per_period must be >= 1");
  require(aging.period_years > 0.0, "aging.period_years must be positive");
  require(aging.mode == "multiplicative" || aging.mode == "additive",
          "aging.mode must be \"multiplicative\" or \"additive\"");
  require(aging.horizon_years >= 0.0 && aging.step_years > 0.0, "aging horizon/step out of range");
  require(aging.horizon_years / aging.step_years <= 10'000, "aging curve has too many points");
  require(aging.trials_per_point >= 1, "aging.trials_per_point must be positive");
  for (auto n : quantum.n_bits) require(n >= 1, "quantum.n_bits entries must be positive");
  require(pki.runs_per_age >= 1 && pki.validity_ticks >= 1, "pki counts must be positive");
  require(!output_dir.empty(), "output_dir must not be empty");
}

std::uint64_t ScenarioConfig::device_seed(std::size_t i) const {
  return aircraft.device_seeds.empty() ? derive_seed(seed, kDeviceBase + i) : aircraft.device_seeds.at(i);
}

json to_json(const ScenarioConfig& c) {
  return json{
      {"schema", kSchema},
      {"seed", c.seed},
      {"challenge_space_bits", c.challenge_space_bits},
      {"tau_bits", c.tau_bits},
      {"aircraft",
       {{"count", c.aircraft.count},
        {"icao_base", id24_to_hex(c.aircraft.icao_base)},
        {"device_seeds", c.aircraft.device_seeds},
        {"target_ber", c.aircraft.target_ber},
        {"votes", c.aircraft.votes}}},
      {"handshake", {{"runs", c.handshake.runs}, {"noisy", c.handshake.noisy}, {"tamper", c.handshake.tamper}}},
      {"linkability",
       {{"scenarios", c.linkability.scenarios},
        {"aircraft", c.linkability.aircraft},
        {"sessions_per_aircraft", c.linkability.sessions_per_aircraft},
        {"window_ticks", c.linkability.window_ticks},
        {"flight_ticks", c.linkability.flight_ticks}}},
      {"attack",
       {{"scenarios", c.attack.scenarios},
        {"flip_budget", c.attack.flip_budget},
        {"training_crps", c.attack.training_crps},
        {"heldout_crps", c.attack.heldout_crps},
        {"max_crps", c.attack.max_crps},
        {"cma_budget", c.attack.cma_budget},
        {"stall_generations", c.attack.stall_generations},
        {"crp_source", c.attack.crp_source},
        {"use_omega", c.attack.use_omega}}},
      {"aging",
       {{"factor_per_period", c.aging.factor_per_period},
        {"period_years", c.aging.period_years},
        {"mode", c.aging.mode},
        {"horizon_years", c.aging.horizon_years},
        {"step_years", c.aging.step_years},
        {"trials_per_point", c.aging.trials_per_point}}},
      {"quantum", {{"n_bits", c.quantum.n_bits}}},
      {"pki", {{"runs_per_age", c.pki.runs_per_age}, {"validity_ticks", c.pki.validity_ticks}}},
      {"output_dir", c.output_dir},
  };
}

ScenarioConfig config_from_json(const json& j) {
  ScenarioConfig c;
  Fields top(j, "config");
  std::string schema;
  top.get("schema", schema);
  if (schema != kSchema) throw ConfigError(std::string("config: schema must be \"") + kSchema + "\"");
  top.get("seed", c.seed);
  top.get("challenge_space_bits", c.challenge_space_bits);
  top.get("tau_bits", c.tau_bits);
  top.get("output_dir", c.output_dir);

  if (const json* a = top.sub("aircraft")) {
    Fields f(*a, top.where("aircraft"));
    f.get("count", c.aircraft.count);
    std::string base;
    f.get("icao_base", base);
    if (!base.empty()) {
      try {
        c.aircraft.icao_base = id24_from_hex(base);
      } catch (const EncodingError& e) {
        throw ConfigError(std::string("config.aircraft.icao_base: ") + e.what());
      }
    }
    f.get("device_seeds", c.aircraft.device_seeds);
    f.get("target_ber", c.aircraft.target_ber);
    f.get("votes", c.aircraft.votes);
    f.finish();
  }
  if (const json* h = top.sub("handshake")) {
    Fields f(*h, top.where("handshake"));
    f.get("runs", c.handshake.runs);
    f.get("noisy", c.handshake.noisy);
    f.get("tamper", c.handshake.tamper);
    f.finish();
  }
  if (const json* l = top.sub("linkability")) {
    Fields f(*l, top.where("linkability"));
    f.get("scenarios", c.linkability.scenarios);
    f.get("aircraft", c.linkability.aircraft);
    f.get("sessions_per_aircraft", c.linkability.sessions_per_aircraft);
    f.get("window_ticks", c.linkability.window_ticks);
    f.get("flight_ticks", c.linkability.flight_ticks);
    f.finish();
  }
  if (const json* a = top.sub("attack")) {
    Fields f(*a, top.where("attack"));
    f.get("scenarios", c.attack.scenarios);
    f.get("flip_budget", c.attack.flip_budget);
    f.get("training_crps", c.attack.training_crps);
    f.get("heldout_crps", c.attack.heldout_crps);
    f.get("max_crps", c.attack.max_crps);
    f.get("cma_budget", c.attack.cma_budget);
    f.get("stall_generations", c.attack.stall_generations);
    f.get("crp_source", c.attack.crp_source);
    f.get("use_omega", c.attack.use_omega);
    f.finish();
  }
  if (const json* a = top.sub("aging")) {
    Fields f(*a, top.where("aging"));
    f.get("factor_per_period", c.aging.factor_per_period);
    f.get("period_years", c.aging.period_years);
    f.get("mode", c.aging.mode);
    f.get("horizon_years", c.aging.horizon_years);
    f.get("step_years", c.aging.step_years);
    f.get("trials_per_point", c.aging.trials_per_point);
    f.finish();
  }
  if (const json* q = top.sub("quantum")) {
    Fields f(*q, top.where("quantum"));
    f.get("n_bits", c.quantum.n_bits);
    f.finish();
  }
  if (const json* p = top.sub("pki")) {
    Fields f(*p, top.where("pki"));
    f.get("runs_per_age", c.pki.runs_per_age);
    f.get("validity_ticks", c.pki.validity_ticks);
    f.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const ScenarioConfig& config) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << to_json(config).dump(2) << '\n';
}

std::string config_hash(const ScenarioConfig& config) {
  return hex_prefix(sha256(as_bytes(to_json(config).dump())), 8);
}

// --- reports ------------------------------------------------------------------------

std::string Report::format_cell(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::size_t Report::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("report " + experiment + " has no column " + name);
  return static_cast<std::size_t>(it - columns.begin());
}

double Report::number(std::size_t row, const std::string& name) const {
  return std::stod(rows.at(row).at(column(name)));
}

void write_csv(std::ostream& out, const Report& report) {
  out << "# experiment=" << report.experiment << '\n';
  out << "# config_hash=" << report.config_hash << '\n';
  out << "# seed=" << report.seed << '\n';
  out << "# version=" << kVersion << '\n';
  out << "config_hash";
  for (const auto& c : report.columns) out << ',' << c;
  out << '\n';
  for (const auto& row : report.rows) {
    out << report.config_hash;
    for (const auto& cell : row) out << ',' << cell;
    out << '\n';
  }
}

json to_json(const Report& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r = json::object();
    for (std::size_t i = 0; i < report.columns.size(); ++i) r[report.columns[i]] = row.at(i);
    rows.push_back(std::move(r));
  }
  return json{{"experiment", report.experiment},
              {"config_hash", report.config_hash},
              {"seed", report.seed},
              {"version", kVersion},
              {"rows", rows},
              {"trace", report.trace}};
}

namespace {

Report new_report(const ScenarioConfig& config, Experiment e, std::vector<std::string> columns) {
  Report r;
  r.experiment = to_string(e);
  r.config_hash = config_hash(config);
  r.seed = config.seed;
  r.columns = std::move(columns);
  return r;
}

}  // namespace

// --- registration ---------------------------------------------------------------------

Fleet run_registration(const ScenarioConfig& config) {
  config.validate();
  Fleet fleet;
  Rng rng(derive_seed(config.seed, kRegistrationChallenges));
  for (std::size_t i = 0; i < config.aircraft.count; ++i) {
    const std::uint64_t seed = config.device_seed(i);
    const double sigma =
        config.aircraft.target_ber > 0.0 ? puf::calibrate_sigma_for_ber(seed, config.aircraft.target_ber) : 0.0;
    const IcaoAddress icao(config.aircraft.icao_base + static_cast<std::uint32_t>(i));
    const Challenge c = reduced_challenge(rng, config.challenge_space_bits);
    const auto rec = proto::register_aircraft(icao, puf::generate_device(seed, 0.0), c, config.tau_bits);
    fleet.tower.enroll(rec.tower_side);
    fleet.aircraft.push_back({icao, rec.aircraft_side, seed, sigma});
  }
  return fleet;
}

void save_fleet(const std::filesystem::path& dir, const Fleet& fleet) {
  std::filesystem::create_directories(dir);
  std::ofstream db(dir / "towerdb.txt");
  std::ofstream ac(dir / "aircraft.txt");
  if (!db || !ac) throw std::runtime_error("cannot write registration artifacts to " + dir.string());
  proto::write_tower_db(db, fleet.tower);
  proto::write_aircraft_records(ac, fleet.aircraft);
}

Fleet load_fleet(const std::filesystem::path& dir) {
  std::ifstream db(dir / "towerdb.txt");
  std::ifstream ac(dir / "aircraft.txt");
  if (!db || !ac) throw MissingArtifact("no registration artifacts in " + dir.string() + " (run `register` first)");
  return {proto::read_tower_db(db), proto::read_aircraft_records(ac)};
}

puf::PufDevice device_of(const proto::AircraftRecordFile& record) {
  return puf::generate_device(record.device_seed, record.noise_sigma);
}

// --- experiments --------------------------------------------------------------------------

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::kHandshake: return "handshake";
    case Experiment::kLinkability: return "linkability";
    case Experiment::kAlg1: return "alg1";
    case Experiment::kAgingCurve: return "aging_curve";
    case Experiment::kQuantumTable: return "quantum_table";
    case Experiment::kPkiCompare: return "pki_compare";
    case Experiment::kFlipCost: return "flip_cost";
  }
  return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
  for (auto e : {Experiment::kHandshake, Experiment::kLinkability, Experiment::kAlg1, Experiment::kAgingCurve,
                 Experiment::kQuantumTable, Experiment::kPkiCompare, Experiment::kFlipCost}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

proto::AbortReason documented_abort(std::size_t frame_index, std::size_t bit, const std::vector<Bytes>& frames,
                                    const proto::TowerDb& db) {
  using proto::AbortReason;
  const std::size_t byte = bit / 8;
  if (byte == 0) return AbortReason::kDecodeError;  // tag byte
  switch (frame_index) {
    case 0: {  // tag | tau(3) | N1(16)
      if (byte > 3) return AbortReason::kMacFailed;
      Bytes f = frames[0];
      f[byte] ^= static_cast<std::uint8_t>(1U << (7 - bit % 8));
      const Tau t = proto::M1::decode(f).tau;
      if (!db.contains(t)) return AbortReason::kUnknownAircraft;
      const auto& all = db.records();
      if (std::count_if(all.begin(), all.end(), [&](const auto& r) { return r.tau == t; }) > 1) {
        return AbortReason::kAmbiguousTau;
      }
      return AbortReason::kTowerAuthFailed;  // another aircraft's omega
    }
    case 1: {  // tag | omega(4) | N2(16) | len(2) | pk | mac(32)
      if (byte <= 4) return AbortReason::kTowerAuthFailed;
      if (byte <= 20) return AbortReason::kMacFailed;
      if (byte <= 22) return AbortReason::kDecodeError;
      return AbortReason::kMacFailed;
    }
    case 2:  // tag | len(2) | ct | mac(32)
      return byte <= 2 ? AbortReason::kDecodeError : AbortReason::kAircraftAuthFailed;
    default:  // tag | mac(32)
      return AbortReason::kConfirmationFailed;
  }
}

HandshakeStudy study_handshake(const ScenarioConfig& config, const Fleet& fleet) {
  check_fleet_identities(config, fleet);
  HandshakeStudy s;
  s.omega_checked = fleet.tower.size();

  std::vector<puf::PufDevice> devices;
  for (const auto& a : fleet.aircraft) {
    devices.push_back(config.handshake.noisy ? device_of(a) : puf::generate_device(a.device_seed, 0.0));
  }
  for (std::size_t r = 0; r < config.handshake.runs; ++r) {
    const std::size_t a = r % fleet.aircraft.size();
    const std::uint64_t seed = derive_seed(config.seed, kHandshakeBase + r);
    proto::PufReader reader(devices[a], config.aircraft.votes, derive_seed(seed, 1));
    const auto out =
        proto::run_handshake(fleet.aircraft[a].secrets, reader, fleet.tower, proto::HandshakeSeeds::derive(seed));
    ++s.runs;
    if (out.completed) {
      ++s.completed;
      if (out.aircraft_key == out.tower_key) ++s.keys_equal;
      s.bytes_on_air = out.bytes_on_air();
    }
  }

  if (config.handshake.tamper) {
    const std::uint64_t seed = derive_seed(config.seed, kHandshakeBase - 1);
    const auto& secrets = fleet.aircraft[0].secrets;
    const auto device = puf::generate_device(fleet.aircraft[0].device_seed, 0.0);
    proto::PufReader honest_reader(device, config.aircraft.votes, seed);
    const auto honest = proto::run_handshake(secrets, honest_reader, fleet.tower, proto::HandshakeSeeds::derive(seed));
    if (!honest.completed) throw InvariantViolation("honest reference handshake did not complete");
    for (std::size_t f = 0; f < honest.frames.size(); ++f) {
      for (std::size_t bit = 0; bit < 8 * honest.frames[f].size(); ++bit) {
        proto::PufReader reader(device, config.aircraft.votes, seed);
        const auto out = proto::run_handshake(secrets, reader, fleet.tower, proto::HandshakeSeeds::derive(seed),
                                              [&](std::size_t i, Bytes& frame) {
                                                if (i == f) frame[bit / 8] ^= static_cast<std::uint8_t>(1U << (7 - bit % 8));
                                              });
        ++s.tamper_cases;
        if (!out.completed && out.abort_reason == documented_abort(f, bit, honest.frames, fleet.tower)) {
          ++s.tamper_matched;
        }
      }
    }
  }
  return s;
}

LinkabilityStudy study_linkability(const ScenarioConfig& config) {
  const auto& lc = config.linkability;
  LinkabilityStudy s;
  s.scenarios = lc.scenarios;
  double confidence_sum = 0.0;
  std::size_t confidence_n = 0;

  for (std::size_t sc = 0; sc < lc.scenarios; ++sc) {
    const std::uint64_t seed = derive_seed(config.seed, kLinkBase + sc);
    Rng rng(seed);
    proto::TowerDb db;
    std::vector<proto::AircraftSecrets> secrets;
    std::vector<IcaoAddress> icaos;
    std::vector<puf::PufDevice> devices;
    for (std::size_t a = 0; a < lc.aircraft; ++a) {
      const IcaoAddress icao(config.aircraft.icao_base + static_cast<std::uint32_t>(a));
      devices.push_back(puf::generate_device(derive_seed(seed, 10 + a), 0.0));
      const auto rec =
          proto::register_aircraft(icao, devices.back(), reduced_challenge(rng, config.challenge_space_bits));
      db.enroll(rec.tower_side);
      secrets.push_back(rec.aircraft_side);
      icaos.push_back(icao);
    }

    for (const bool overlapping : {false, true}) {
      // (tick, aircraft) for every session, then a tap in time order.
      std::vector<std::pair<std::uint64_t, std::size_t>> sessions;
      std::vector<attack::ScheduleEntry> schedule;
      for (std::size_t a = 0; a < lc.aircraft; ++a) {
        for (std::size_t k = 0; k < lc.sessions_per_aircraft; ++k) {
          std::uint64_t start = 0, end = lc.window_ticks;
          if (!overlapping) {
            start = rng.below(lc.window_ticks - lc.flight_ticks + 1);
            end = start + lc.flight_ticks;
          }
          schedule.push_back({icaos[a], start, end});
          sessions.emplace_back(start + rng.below(end - start + 1), a);
        }
      }
      std::stable_sort(sessions.begin(), sessions.end(),
                       [](const auto& x, const auto& y) { return x.first < y.first; });
      std::vector<proto::TapFrame> tap;
      for (std::size_t n = 0; n < sessions.size(); ++n) {
        const auto [tick, a] = sessions[n];
        proto::PufReader reader(devices[a], 1, 0);
        const auto out = proto::run_handshake(secrets[a], reader, db,
                                              proto::HandshakeSeeds::derive(derive_seed(seed, 1000 + n)));
        for (const auto& f : out.frames) tap.push_back({tick, f});
      }

      const auto observed = attack::sessions_from_tap(tap);
      const auto table = attack::link_tau_to_icao(observed, schedule);
      bool all_linked = true;
      for (std::size_t a = 0; a < lc.aircraft; ++a) {
        const auto* e = table.find(secrets[a].tau);
        const double conf = e ? e->confidence : 0.0;
        if (e && conf == 1.0 && e->icao != icaos[a]) ++s.false_links;
        all_linked = all_linked && e && conf == 1.0 && e->icao == icaos[a];
        if (overlapping) {
          s.overlap_max_confidence = std::max(s.overlap_max_confidence, conf);
        } else {
          confidence_sum += conf;
          ++confidence_n;
        }
      }
      if (!overlapping && all_linked) ++s.sparse_all_linked;
    }
  }
  s.sparse_mean_confidence = confidence_n ? confidence_sum / static_cast<double>(confidence_n) : 0.0;
  return s;
}

double Alg1Study::success_rate() const {
  if (scenarios.empty()) return 0.0;
  const auto ok = std::count_if(scenarios.begin(), scenarios.end(),
                                [](const Alg1Scenario& s) { return s.exact && s.impersonated; });
  return static_cast<double>(ok) / static_cast<double>(scenarios.size());
}

double Alg1Study::total_seconds() const {
  double t = 0.0;
  for (const auto& s : scenarios) t += s.attack_seconds + s.train_seconds;
  return t;
}

Alg1Study study_alg1(const ScenarioConfig& config) {
  const auto& ac = config.attack;
  Alg1Study study;
  for (std::size_t sc = 0; sc < ac.scenarios; ++sc) {
    const auto t0 = std::chrono::steady_clock::now();
    Alg1Scenario s;
    s.seed = derive_seed(config.seed, kAlg1Base + sc);
    Rng rng(s.seed);

    // Ground truth: one registered aircraft and a sniffed honest session.
    const auto device = puf::generate_device(derive_seed(s.seed, 1), 0.0);
    const IcaoAddress icao(config.aircraft.icao_base + static_cast<std::uint32_t>(sc % 0x1000));
    s.registered = reduced_challenge(rng, config.challenge_space_bits);
    const auto rec = proto::register_aircraft(icao, device, s.registered);
    proto::TowerDb db;
    db.enroll(rec.tower_side);
    proto::PufReader reader(device, 1, 0);
    const auto sniffed =
        proto::run_handshake(rec.aircraft_side, reader, db, proto::HandshakeSeeds::derive(derive_seed(s.seed, 2)));
    s.target_tau = attack::extract_tau(sniffed.frames.at(0));
    const std::uint32_t omega = attack::extract_omega(sniffed.frames.at(1));

    const auto source = ac.crp_source == "target" ? device : puf::generate_device(derive_seed(s.seed, 3), 0.0);
    const attack::CrpOracle oracle = [&source](std::size_t n, std::uint64_t seed) {
      return puf::collect_crps(source, n, seed);
    };
    attack::Alg1Options options;
    options.challenge_space_bits = config.challenge_space_bits;
    options.flip_budget = ac.flip_budget;
    if (ac.use_omega) options.omega = omega;
    attack::CampaignOptions campaign;
    campaign.initial_crps = ac.training_crps;
    campaign.max_crps = ac.max_crps;
    campaign.heldout_crps = ac.heldout_crps;
    campaign.fit.budget = ac.cma_budget;
    campaign.fit.stall_generations = ac.stall_generations;

    const auto result = attack::run_algorithm1(oracle, s.target_tau, icao, options, campaign, derive_seed(s.seed, 4));
    s.recovered = result.attack.found;
    s.flips_used = result.attack.flips_used;
    s.rounds = result.rounds;
    s.training_crps = result.model.training_crps;
    s.heldout_accuracy = result.model.heldout_accuracy;
    s.candidates_tested = result.attack.candidates_tested;
    s.attack_seconds = result.attack.wall_time.count();
    if (s.recovered) {
      s.exact = result.attack.challenge == rec.tower_side.challenge && result.attack.response == rec.tower_side.response;
      const auto imp = attack::impersonate(puf::CrpRecord{result.attack.challenge, result.attack.response}, icao,
                                           s.target_tau, db, derive_seed(s.seed, 5));
      s.impersonated = imp.success;
    }
    const std::chrono::duration<double> total = std::chrono::steady_clock::now() - t0;
    s.train_seconds = total.count() - s.attack_seconds;
    study.scenarios.push_back(s);
  }
  return study;
}

double majority_failure(double p, int votes) {
  if (votes < 1 || votes % 2 == 0) throw ArgumentError("majority vote needs an odd number of reads");
  double fail = 0.0;
  for (int k = votes / 2 + 1; k <= votes; ++k) {
    fail += std::exp(std::lgamma(votes + 1.0) - std::lgamma(k + 1.0) - std::lgamma(votes - k + 1.0)) *
            std::pow(p, k) * std::pow(1.0 - p, votes - k);
  }
  return fail;
}

double session_failure_closed_form(const puf::PufDevice& device, Challenge c, int votes) {
  const double sigma = device.effective_sigma();
  if (sigma == 0.0) return 0.0;
  const Eigen::VectorXd d = device.delays(c);
  double ok = 1.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double p = std::isinf(sigma) ? 0.5 : normal_tail(std::abs(d[i]) / sigma);
    ok *= 1.0 - majority_failure(p, votes);
  }
  return 1.0 - ok;
}

double session_failure_iid(double ber, int votes) {
  return 1.0 - std::pow(1.0 - majority_failure(ber, votes), static_cast<double>(kResponseBits));
}

std::vector<AgingPoint> study_aging(const ScenarioConfig& config, const Fleet& fleet, std::size_t trials) {
  check_fleet_identities(config, fleet);
  const auto policy = config.aging.policy();
  const std::size_t n_fleet = fleet.aircraft.size();
  std::vector<puf::PufDevice> base;
  std::vector<Challenge> challenges;
  for (const auto& a : fleet.aircraft) {
    base.push_back(device_of(a));
    challenges.push_back(record_for(fleet, a.icao).challenge);
  }
  // Trials are dealt round-robin over the fleet.
  std::vector<double> share(n_fleet, 0.0);
  for (std::size_t j = 0; j < trials; ++j) share[j % n_fleet] += 1.0;
  for (auto& w : share) w /= static_cast<double>(trials);

  const auto steps = static_cast<std::size_t>(std::llround(config.aging.horizon_years / config.aging.step_years));
  std::vector<AgingPoint> points;
  for (std::size_t step = 0; step <= steps; ++step) {
    AgingPoint p;
    p.years = static_cast<double>(step) * config.aging.step_years;
    p.trials = trials;
    std::vector<puf::PufDevice> aged;
    for (std::size_t a = 0; a < n_fleet; ++a) {
      aged.push_back(puf::age_device(base[a], p.years, policy));
      p.effective_ber += share[a] * aged[a].effective_ber();
      p.ber_ratio += share[a] * (base[a].base_ber() > 0.0 ? aged[a].effective_ber() / base[a].base_ber() : 1.0);
      p.closed_form_failure += share[a] * session_failure_closed_form(aged[a], challenges[a], config.aircraft.votes);
      p.iid_failure += share[a] * session_failure_iid(aged[a].effective_ber(), config.aircraft.votes);
    }
    std::size_t failed = 0;
    for (std::size_t j = 0; j < trials; ++j) {
      const std::size_t a = j % n_fleet;
      // Same reader stream at every age: common random numbers.
      proto::PufReader reader(aged[a], config.aircraft.votes, derive_seed(config.seed, kAgingReadBase + j));
      const auto out = proto::run_handshake(fleet.aircraft[a].secrets, reader, fleet.tower,
                                            proto::HandshakeSeeds::derive(derive_seed(config.seed, kAgingSessionBase + j)));
      failed += out.completed ? 0 : 1;
    }
    p.mc_failure = static_cast<double>(failed) / static_cast<double>(trials);
    points.push_back(p);
  }
  return points;
}

PkiComparison study_pki(const ScenarioConfig& config, const Fleet& fleet) {
  PkiComparison c;
  const auto puf_curve = study_aging(config, fleet, config.pki.runs_per_age);

  const std::uint64_t seed = derive_seed(config.seed, kPkiBase);
  const auto ca = pki::make_ca("ldacs-ca", derive_seed(seed, 1));
  const pki::Validity validity{0, config.pki.validity_ticks};
  const auto aircraft = pki::enroll(ca, id24_to_hex(fleet.aircraft.at(0).icao.value()), validity, derive_seed(seed, 2));
  const auto tower = pki::enroll(ca, "tower", validity, derive_seed(seed, 3));

  for (const auto& point : puf_curve) {
    PkiAgePoint row;
    row.years = point.years;
    row.puf_success = 1.0 - point.mc_failure;
    std::size_t ok = 0;
    for (std::size_t j = 0; j < config.pki.runs_per_age; ++j) {
      const auto out = pki::pki_handshake(aircraft, tower, ca.keys.vk, j % (config.pki.validity_ticks + 1),
                                          pki::PkiSeeds::derive(derive_seed(seed, 100 + j)));
      if (out.completed && out.aircraft_key == out.tower_key) ++ok;
      c.pki_messages = out.metrics.messages;
      c.pki_bytes = out.metrics.bytes_on_air;
      c.pki_verifications = out.metrics.verifications;
    }
    row.pki_success = static_cast<double>(ok) / static_cast<double>(config.pki.runs_per_age);
    c.ages.push_back(row);
  }

  const auto device = puf::generate_device(fleet.aircraft[0].device_seed, 0.0);
  proto::PufReader reader(device, config.aircraft.votes, 0);
  const auto puf_run =
      proto::run_handshake(fleet.aircraft[0].secrets, reader, fleet.tower, proto::HandshakeSeeds::derive(seed));
  c.puf_messages = puf_run.frames.size();
  c.puf_bytes = puf_run.bytes_on_air();
  c.puf_aircraft_secrets = 1;  // theta
  c.puf_tower_secrets = fleet.tower.size();  // one (C, R) per aircraft
  c.pki_aircraft_secrets = 1;  // signing key
  c.pki_tower_secrets = 1;
  return c;
}

// --- reports per experiment ------------------------------------------------------------------

Report report_handshake(const ScenarioConfig& config, const HandshakeStudy& s) {
  auto r = new_report(config, Experiment::kHandshake,
                      {"runs", "completed", "keys_equal", "completion_rate", "tamper_cases", "tamper_matched",
                       "omega_identity_checked", "bytes_on_air"});
  r.add_row(s.runs, s.completed, s.keys_equal, static_cast<double>(s.completed) / static_cast<double>(s.runs),
            s.tamper_cases, s.tamper_matched, s.omega_checked, s.bytes_on_air);
  return r;
}

Report report_linkability(const ScenarioConfig& config, const LinkabilityStudy& s) {
  auto r = new_report(config, Experiment::kLinkability,
                      {"schedule", "scenarios", "all_linked_rate", "mean_confidence", "max_confidence", "false_links"});
  r.add_row("sparse", s.scenarios, static_cast<double>(s.sparse_all_linked) / static_cast<double>(s.scenarios),
            s.sparse_mean_confidence, 1.0, s.false_links);
  r.add_row("overlapping", s.scenarios, 0.0, 1.0 / static_cast<double>(config.linkability.aircraft),
            s.overlap_max_confidence, std::size_t{0});
  return r;
}

Report report_alg1(const ScenarioConfig& config, const Alg1Study& s) {
  auto r = new_report(config, Experiment::kAlg1,
                      {"scenario", "target_tau", "outcome", "exact", "impersonated", "flips_used", "rounds",
                       "training_crps", "heldout_accuracy", "candidates_tested", "attack_seconds", "train_seconds"});
  json trace = json::array();
  for (std::size_t i = 0; i < s.scenarios.size(); ++i) {
    const auto& x = s.scenarios[i];
    const std::string outcome = x.recovered ? (x.impersonated ? "impersonated" : "recovered") : "not-found";
    r.add_row(i, id24_to_hex(x.target_tau.value()), outcome, x.exact, x.impersonated, x.flips_used, x.rounds,
              x.training_crps, x.heldout_accuracy, x.candidates_tested, x.attack_seconds, x.train_seconds);
    trace.push_back({{"target_tau", id24_to_hex(x.target_tau.value())},
                     {"registered_challenge", x.registered.to_hex()},
                     {"candidates_tested", x.candidates_tested},
                     {"flips_used", x.flips_used},
                     {"wall_time", x.attack_seconds},
                     {"outcome", outcome},
                     {"rounds", x.rounds},
                     {"heldout_accuracy", x.heldout_accuracy}});
  }
  r.trace = {{"scenarios", trace}, {"success_rate", s.success_rate()}, {"total_seconds", s.total_seconds()}};
  return r;
}

Report report_aging(const ScenarioConfig& config, const std::vector<AgingPoint>& points) {
  auto r = new_report(config, Experiment::kAgingCurve,
                      {"years", "effective_ber", "ber_ratio", "mc_failure", "closed_form_failure", "iid_failure",
                       "trials"});
  for (const auto& p : points) {
    r.add_row(p.years, p.effective_ber, p.ber_ratio, p.mc_failure, p.closed_form_failure, p.iid_failure, p.trials);
  }
  return r;
}

Report report_quantum(const ScenarioConfig& config) {
  auto r = new_report(config, Experiment::kQuantumTable, {"n_bits", "grover_bits", "preimage_bits"});
  for (auto n : config.quantum.n_bits) {
    r.add_row(n, attack::quantum_cost_bits(n, attack::QuantumAttack::kGroverSearch),
              attack::quantum_cost_bits(n, attack::QuantumAttack::kPreimage));
  }
  return r;
}

Report report_flip_cost(const ScenarioConfig& config) {
  auto r = new_report(config, Experiment::kFlipCost,
                      {"n", "k", "permutations", "combinations", "candidates_bound"});
  for (const auto& [n, k] : {std::pair<std::uint64_t, std::uint64_t>{128, 1}, {128, 2}, {128, 3}, {192, 3}}) {
    const std::string bound =
        n == kResponseBits ? std::to_string(attack::algorithm1_cost_bound(config.challenge_space_bits, static_cast<int>(k)))
                           : "";
    r.add_row(n, k, attack::permutation_count(n, k), attack::combination_count(n, k), bound);
  }
  return r;
}

Report report_pki(const ScenarioConfig& config, const PkiComparison& c) {
  auto r = new_report(config, Experiment::kPkiCompare,
                      {"years", "puf_success", "pki_success", "puf_messages", "pki_messages", "puf_bytes", "pki_bytes",
                       "pki_verifications", "puf_aircraft_secrets", "pki_aircraft_secrets", "puf_tower_secrets",
                       "pki_tower_secrets"});
  for (const auto& a : c.ages) {
    r.add_row(a.years, a.puf_success, a.pki_success, c.puf_messages, c.pki_messages, c.puf_bytes, c.pki_bytes,
              c.pki_verifications, c.puf_aircraft_secrets, c.pki_aircraft_secrets, c.puf_tower_secrets,
              c.pki_tower_secrets);
  }
  return r;
}

Report run_experiment(const ScenarioConfig& config, Experiment experiment) {
  config.validate();
  const std::filesystem::path dir(config.output_dir);
  Report report;
  switch (experiment) {
    case Experiment::kHandshake: {
      const auto s = study_handshake(config, load_fleet(dir));
      if (!config.handshake.noisy && s.completed != s.runs) throw InvariantViolation("honest noiseless handshake failed");
      if (s.keys_equal != s.completed) throw InvariantViolation("session keys differ after completion");
      if (s.tamper_matched != s.tamper_cases) throw InvariantViolation("tampered frame aborted with the wrong class");
      report = report_handshake(config, s);
      break;
    }
    case Experiment::kLinkability: {
      const auto s = study_linkability(config);
      if (s.false_links != 0) throw InvariantViolation("linkability produced a confident wrong link");
      if (s.overlap_max_confidence > 1.0 / static_cast<double>(config.linkability.aircraft) + 1e-12) {
        throw InvariantViolation("overlapping schedules produced more than chance confidence");
      }
      report = report_linkability(config, s);
      break;
    }
    case Experiment::kAlg1:
      report = report_alg1(config, study_alg1(config));
      break;
    case Experiment::kAgingCurve: {
      const auto points = study_aging(config, load_fleet(dir), config.aging.trials_per_point);
      for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].mc_failure < points[i - 1].mc_failure) throw InvariantViolation("aging failure curve decreased");
      }
      report = report_aging(config, points);
      break;
    }
    case Experiment::kQuantumTable:
      report = report_quantum(config);
      break;
    case Experiment::kFlipCost:
      report = report_flip_cost(config);
      break;
    case Experiment::kPkiCompare: {
      const auto c = study_pki(config, load_fleet(dir));
      for (const auto& a : c.ages) {
        if (a.pki_success != 1.0) throw InvariantViolation("honest PKI handshake failed");
      }
      report = report_pki(config, c);
      break;
    }
  }

  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / (report.experiment + ".csv"));
  write_csv(csv, report);
  if (!report.trace.is_null()) {
    std::ofstream js(dir / (report.experiment + ".json"));
    js << to_json(report).dump(2) << '\n';
  }
  return report;
}

}  // namespace ldacs::lab
