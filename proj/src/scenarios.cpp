#include "scenarios.hpp"

#include <random>

#include "calendar.hpp"
#include "error.hpp"
#include "secure_frame.hpp"

namespace trackersync {

using nlohmann::ordered_json;

const char* outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::Accepted: return "ACCEPTED";
    case Outcome::Blocked: return "BLOCKED";
    case Outcome::Error: return "ERROR";
  }
  return "?";
}

namespace {

constexpr std::int64_t kSyncTimeOfDay = 11 * 3600;
constexpr std::uint32_t kHonestSteps = 300;
constexpr std::uint32_t kAttackerSteps = 5000;
constexpr std::uint32_t kFabricatedSteps = 10000;
constexpr std::uint32_t kFabricatedDistanceMm = 10'000'000;
constexpr std::uint32_t kInjectedSteps = 0x00FFFFFF;
constexpr int kLockoutProbeLimit = 20;

ordered_json digest_json(const std::optional<DigestReport>& d) {
  if (!d) return nullptr;
  return {{"date", d->date},
          {"steps", d->steps},
          {"distance_km", d->distance_km},
          {"calories", d->calories},
          {"active_minutes", d->active_minutes}};
}

DeviceKey random_key(std::mt19937_64& rng) {
  Bytes raw(DeviceKey::kSize);
  for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
  return DeviceKey::from_bytes(raw);
}

TrackerId random_id(std::mt19937_64& rng) {
  Bytes raw(TrackerId::kSize);
  for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
  return TrackerId::from_bytes(raw);
}

// What a scenario observed before the closing digest fetch.
struct Attempt {
  bool accepted = false;
  bool goal = true;  // scenario-specific success condition beyond acceptance
  std::optional<DigestReport> expected;
};

class Run {
 public:
  Run(const ScenarioParams& p, Transport& transport, ScenarioReport& report)
      : p_(p), transport_(transport), client_(transport), report_(report), rng_(p.seed),
        at_(parse_utc_date(p.date) + kSyncTimeOfDay) {}

  Attempt execute() {
    if (p_.name == "honest-sync") return honest_sync();
    if (p_.name == "impersonate") return impersonate();
    if (p_.name == "fabricate") return fabricate();
    if (p_.name == "crc-oracle") return crc_oracle();
    if (p_.name == "hw-inject") return hw_inject();
    if (p_.name == "hw-decrypt-flag") return hw_decrypt_flag();
    throw Error(Errc::InvalidArgument, "unknown scenario '" + p_.name + "'");
  }

  SyncClient& client() { return client_; }

 private:
  DeviceKey key_for(const TrackerId& id) {
    if (id == p_.tracker && p_.key) return *p_.key;
    if (auto it = p_.keystore.find(id); it != p_.keystore.end()) return it->second;
    return random_key(rng_);
  }

  bool key_known(const TrackerId& id) const {
    return (id == p_.tracker && p_.key) || p_.keystore.count(id) > 0;
  }

  Tracker victim_tracker(bool force_encrypted = false) {
    const bool encrypted = force_encrypted || p_.encrypted.value_or(key_known(p_.tracker));
    return Tracker(p_.tracker, key_for(p_.tracker), encrypted);
  }

  SyncResponse submit(const TrackerId& id, ByteView frame) {
    const SyncResponse r = client_.sync(SyncEnvelope::wrap(id, frame));
    if (!r.ok()) report_.details["server_error"] = r.error.value_or("");
    return r;
  }

  // Sync the tracker's next frame. Returns the overall summary it carried.
  Attempt sync_tracker(Tracker& t) {
    const Bytes frame = t.generate_megadump();
    const OverallSummary carried = t.activity().overall;
    const SyncResponse r = submit(t.serial(), frame);
    t.apply_server_response({r.ok(), r.ack_frame});
    report_.details["tracker_pending_after_sync"] = t.has_pending();
    return {r.ok(), true, DigestReport::from_overall(carried)};
  }

  Attempt blocked_on_tracker(const Error& e) {
    report_.details["error"] = errc_name(e.code());
    report_.details["error_message"] = e.what();
    return {false, false, std::nullopt};
  }

  Attempt honest_sync() {
    Tracker t = victim_tracker();
    t.record_steps(at_, p_.steps.value_or(kHonestSteps));
    t.set_protection_level(p_.protection);
    report_.details["encrypted"] = t.encryption_enabled();
    return sync_tracker(t);
  }

  Attempt impersonate() {
    TrackerId attacker = p_.attacker.value_or(random_id(rng_));
    while (attacker == p_.tracker) attacker = random_id(rng_);
    report_.details["attacker"] = attacker.to_string();

    // The attacker's own tracker runs old plaintext firmware.
    Tracker a(attacker, key_for(attacker), false);
    a.record_steps(at_, p_.steps.value_or(kAttackerSteps));
    Bytes frame;
    if (client_.validate(SyncEnvelope::wrap(attacker, a.generate_microdump()))) {
      MitmTransport mitm(transport_, identity_hook());
      SyncClient own(mitm);
      const SyncResponse r = own.sync(SyncEnvelope::wrap(attacker, a.generate_megadump()));
      report_.details["attacker_synced"] = r.ok();
      frame = mitm.captured().back().payload();
    } else {
      report_.details["attacker_synced"] = false;
      frame = a.generate_megadump();
    }
    const Megadump captured = decode_megadump(frame);
    const SyncResponse r = submit(p_.tracker, frame);
    return {r.ok(), true, DigestReport::from_overall(captured.overall)};
  }

  Megadump fabricated() {
    return fabricated_megadump(p_.tracker, at_, p_.steps.value_or(kFabricatedSteps),
                               p_.distance_mm.value_or(kFabricatedDistanceMm), p_.calories,
                               1 + static_cast<std::uint32_t>(rng_() % 1000));
  }

  Attempt fabricate() {
    const Megadump dump = fabricated();
    const SyncResponse r = submit(p_.tracker, encode_megadump(dump));
    return {r.ok(), true, DigestReport::from_overall(dump.overall)};
  }

  Attempt crc_oracle() {
    const Megadump dump = fabricated();
    Bytes frame = encode_megadump(dump);
    const std::size_t crc_at = frame.size() - kFooterSize;
    const std::uint16_t genuine = get_u16_le(frame, crc_at);
    const std::uint16_t guess = genuine == 0 ? 1 : 0;
    Bytes forged = frame;
    forged[crc_at] = static_cast<std::uint8_t>(guess);
    forged[crc_at + 1] = static_cast<std::uint8_t>(guess >> 8);

    Attempt attempt{false, false, DigestReport::from_overall(dump.overall)};
    const SyncResponse first = submit(p_.tracker, forged);
    report_.details["oracle_leaked"] = first.expected_crc.has_value();
    if (first.ok()) {
      attempt.accepted = true;
    } else if (first.expected_crc) {
      report_.details["expected_crc"] = hex16(*first.expected_crc);
      Bytes corrected = forged;
      corrected[crc_at] = static_cast<std::uint8_t>(*first.expected_crc);
      corrected[crc_at + 1] = static_cast<std::uint8_t>(*first.expected_crc >> 8);
      const SyncResponse second = submit(p_.tracker, corrected);
      attempt.accepted = second.ok();
      attempt.goal = client_.sync_requests() == 2;
    }
    if (p_.probe_lockout) probe_lockout(forged);
    return attempt;
  }

  void probe_lockout(ByteView bad_frame) {
    const int before = client_.sync_requests();
    int sent = 0;
    bool locked = false;
    while (sent < kLockoutProbeLimit && !locked) {
      client_.sync(SyncEnvelope::wrap(p_.tracker, bad_frame));
      ++sent;
      locked = client_.last_status() == 429;
    }
    report_.details["lockout_probe"] = {{"requests", sent}, {"locked_out", locked}};
    probe_requests_ = client_.sync_requests() - before;
  }

  Attempt hw_inject() {
    Tracker t = victim_tracker();
    t.record_steps(at_, kHonestSteps);
    t.set_protection_level(p_.protection);
    const std::uint32_t value = p_.steps.value_or(kInjectedSteps);
    try {
      Bytes le;
      put_u32_le(le, value);
      t.debug_write(eeprom_map::kOverallSteps, le);
    } catch (const Error& e) {
      return blocked_on_tracker(e);
    }
    report_.details["injected_steps"] = value;
    return sync_tracker(t);
  }

  Attempt hw_decrypt_flag() {
    Tracker t = victim_tracker(true);
    t.record_steps(at_, p_.steps.value_or(kHonestSteps));
    t.set_protection_level(p_.protection);
    try {
      const Bytes key = t.debug_read(eeprom_map::kDeviceKey, DeviceKey::kSize);
      report_.details["key_extracted"] = to_hex(key);
      t.debug_write(eeprom_map::kEncryptionFlag, Bytes{0x00});
    } catch (const Error& e) {
      return blocked_on_tracker(e);
    }
    const Bytes frame = t.generate_megadump();
    bool plaintext = false;
    try {
      decode_megadump(frame);
      plaintext = true;
    } catch (const Error&) {
    }
    report_.details["plaintext_observed"] = plaintext;
    const OverallSummary carried = t.activity().overall;
    const SyncResponse r = submit(p_.tracker, frame);
    t.apply_server_response({r.ok(), r.ack_frame});
    return {r.ok(), plaintext, DigestReport::from_overall(carried)};
  }

  const ScenarioParams& p_;
  Transport& transport_;
  SyncClient client_;
  ScenarioReport& report_;
  std::mt19937_64 rng_;
  std::int64_t at_;

 public:
  int probe_requests_ = 0;
};

template <typename T>
std::optional<T> opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

Megadump fabricated_megadump(const TrackerId& victim, std::int64_t timestamp, std::uint32_t steps,
                             std::uint32_t distance_mm, std::uint16_t calories, std::uint32_t sequence) {
  Megadump dump;
  dump.header.device_id = victim;
  dump.header.firmware_version = TrackerProfile{}.firmware_version;
  dump.header.sequence = sequence;
  dump.per_minute.base_time = 0;
  dump.overall.timestamp = static_cast<std::uint32_t>(timestamp);
  dump.overall.calories = calories;
  dump.overall.steps = steps;
  dump.overall.distance_mm = distance_mm;
  return dump;
}

ScenarioParams ScenarioParams::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ScenarioParams p;
    p.name = j.at("scenario").get<std::string>();
    p.tracker = TrackerId::parse(j.at("tracker").get<std::string>());
    p.user = opt<std::string>(j, "user");
    if (auto d = opt<std::string>(j, "date")) p.date = *d;
    parse_utc_date(p.date);
    p.steps = opt<std::uint32_t>(j, "steps");
    p.distance_mm = opt<std::uint32_t>(j, "distance_mm");
    if (auto c = opt<std::uint16_t>(j, "calories")) p.calories = *c;
    if (auto k = opt<std::string>(j, "key")) p.key = DeviceKey::from_hex(*k);
    if (j.contains("keystore") && j.at("keystore").is_object()) {
      for (const auto& [id, key] : j.at("keystore").items()) {
        p.keystore.emplace(TrackerId::parse(id), DeviceKey::from_hex(key.get<std::string>()));
      }
    }
    if (auto path = opt<std::string>(j, "keystore_file")) {
      for (const auto& [id, key] : load_keystore(*path)) p.keystore.emplace(id, key);
    }
    p.encrypted = opt<bool>(j, "encrypted");
    if (auto level = opt<int>(j, "protection")) {
      if (*level < 0 || *level > 2) throw Error(Errc::InvalidArgument, "protection level must be 0, 1 or 2");
      p.protection = static_cast<ProtectionLevel>(*level);
    }
    if (auto a = opt<std::string>(j, "attacker")) p.attacker = TrackerId::parse(*a);
    if (auto s = opt<std::uint64_t>(j, "seed")) p.seed = *s;
    const std::string expect = opt<std::string>(j, "expect").value_or("pass");
    if (expect == "pass") {
      p.expect = Expectation::Pass;
    } else if (expect == "blocked") {
      p.expect = Expectation::Blocked;
    } else {
      throw Error(Errc::InvalidArgument, "expect must be pass or blocked");
    }
    p.probe_lockout = opt<bool>(j, "probe_lockout").value_or(false);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad scenario request: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidArgument || e.code() == Errc::Io) throw;
    throw Error(Errc::InvalidArgument, std::string("bad scenario request: ") + e.what());
  }
}

std::string ScenarioReport::to_json() const {
  ordered_json j;
  j["scenario"] = scenario;
  j["expectation"] = expect == Expectation::Pass ? "pass" : "blocked";
  j["outcome"] = outcome_name(outcome);
  j["verdict"] = met ? "PASS" : "FAIL";
  j["requests"] = requests;
  j["before"] = digest_json(before);
  j["after"] = digest_json(after);
  j["details"] = details;
  return j.dump();
}

ScenarioReport run_scenario(const ScenarioParams& params, Transport& transport) {
  ScenarioReport report;
  report.scenario = params.name;
  report.expect = params.expect;
  try {
    Run run(params, transport, report);
    const std::string user = params.user_id();
    report.before = run.client().digest(user, params.date);
    const Attempt attempt = run.execute();
    report.requests = run.client().sync_requests() - run.probe_requests_;
    report.after = run.client().digest(user, params.date);

    const bool digest_matches = attempt.expected && report.after == attempt.expected;
    const bool unchanged = report.before == report.after;
    report.details["digest_matches"] = digest_matches;
    report.details["state_unchanged"] = unchanged;
    report.outcome = attempt.accepted ? Outcome::Accepted : Outcome::Blocked;
    report.met = params.expect == Expectation::Pass ? attempt.accepted && attempt.goal && digest_matches
                                                    : !attempt.accepted && unchanged;
  } catch (const Error& e) {
    report.outcome = Outcome::Error;
    report.met = false;
    report.details["error"] = errc_name(e.code());
    report.details["error_message"] = e.what();
  } catch (const std::exception& e) {
    report.outcome = Outcome::Error;
    report.met = false;
    report.details["error"] = "Internal";
    report.details["error_message"] = e.what();
  }
  return report;
}

}  // namespace trackersync
