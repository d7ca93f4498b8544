#pragma once

// Scripted sync-agent runs: one honest sync and five attacks. Each run reads
// the victim's digest before and after, and ends in a verdict against the
// caller's expectation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "crypto.hpp"
#include "http.hpp"
#include "tracker.hpp"

namespace trackersync {

enum class Expectation { Pass, Blocked };
enum class Outcome { Accepted, Blocked, Error };

const char* outcome_name(Outcome outcome);

inline constexpr const char* kScenarioNames[] = {"honest-sync", "impersonate", "fabricate",
                                                 "crc-oracle",  "hw-inject",   "hw-decrypt-flag"};

struct ScenarioParams {
  std::string name;
  TrackerId tracker;
  std::optional<std::string> user;  // defaults to the tracker id in hex
  std::string date = "2017-01-15";
  std::optional<std::uint32_t> steps;  // per-scenario default
  std::optional<std::uint32_t> distance_mm;
  std::uint16_t calories = 100;
  std::optional<DeviceKey> key;
  std::map<TrackerId, DeviceKey> keystore;
  std::optional<bool> encrypted;  // default: encrypted iff a key is known
  ProtectionLevel protection = ProtectionLevel::None;
  std::optional<TrackerId> attacker;  // impersonate
  std::uint64_t seed = 1;
  Expectation expect = Expectation::Pass;
  bool probe_lockout = false;  // crc-oracle

  std::string user_id() const { return user.value_or(tracker.to_string()); }

  // {"scenario":..., "tracker":"HEX12", "user", "date", "steps", "distance_mm",
  //  "calories", "key", "keystore":{HEX12:HEX32}, "keystore_file", "encrypted", "protection",
  //  "attacker", "seed", "expect":"pass"|"blocked", "probe_lockout"}
  // Throws InvalidArgument, Io.
  static ScenarioParams from_json(std::string_view text);
};

struct ScenarioReport {
  std::string scenario;
  Expectation expect = Expectation::Pass;
  Outcome outcome = Outcome::Error;
  bool met = false;
  int requests = 0;  // sync requests sent to the server
  std::optional<DigestReport> before;
  std::optional<DigestReport> after;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();

  // 0 expectation met, 1 not met, 2 scenario error.
  int exit_code() const { return outcome == Outcome::Error ? 2 : (met ? 0 : 1); }
  std::string to_json() const;
};

// Never throws; failures end up as Outcome::Error with details.error.
ScenarioReport run_scenario(const ScenarioParams& params, Transport& transport);

// Deterministic fabricated summary-only frame (plaintext, CRC valid).
Megadump fabricated_megadump(const TrackerId& victim, std::int64_t timestamp, std::uint32_t steps,
                             std::uint32_t distance_mm, std::uint16_t calories, std::uint32_t sequence);

}  // namespace trackersync
