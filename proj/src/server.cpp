#include "server.hpp"

#include <chrono>
#include <cstdio>

#include <json.hpp>

#include "calendar.hpp"
#include "error.hpp"
#include "secure_frame.hpp"

namespace trackersync {

const char* mode_name(ServerMode mode) {
  return mode == ServerMode::Hardened ? "hardened" : "vulnerable";
}

ServerMode parse_mode(std::string_view name) {
  if (name == "vulnerable") return ServerMode::Vulnerable;
  if (name == "hardened") return ServerMode::Hardened;
  throw Error(Errc::InvalidArgument, "mode must be vulnerable or hardened: " + std::string(name));
}

void ServerConfig::validate() const {
  if (error_threshold == 0 || lockout_seconds <= 0 || fraud.max_daily_steps == 0 ||
      fraud.max_steps_per_minute == 0 || !(fraud.min_stride_m > 0) ||
      !(fraud.max_stride_m > fraud.min_stride_m)) {
    throw Error(Errc::InvalidArgument, "server thresholds must be strictly positive");
  }
}

std::string format_distance_km(std::uint64_t distance_mm) {
  const std::uint64_t centi_km = (distance_mm + 5000) / 10000;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu.%02llu", static_cast<unsigned long long>(centi_km / 100),
                static_cast<unsigned long long>(centi_km % 100));
  return buf;
}

DigestReport DigestReport::from_totals(const std::string& date, const DayTotals& t) {
  DigestReport r;
  r.date = date;
  r.steps = t.steps;
  r.distance_km = format_distance_km(t.distance_mm);
  r.calories = t.calories;
  r.active_minutes = t.active_minutes;
  return r;
}

namespace {

DayTotals totals_of(const OverallSummary& o) {
  return {o.steps, o.distance_mm, o.calories, o.floors, o.active_minutes};
}

}  // namespace

DigestReport DigestReport::from_overall(const OverallSummary& overall) {
  return from_totals(utc_date(overall.timestamp), totals_of(overall));
}

std::string DigestReport::to_json() const {
  nlohmann::ordered_json j;
  j["steps"] = steps;
  j["distance_km"] = distance_km;
  j["calories"] = calories;
  j["active_minutes"] = active_minutes;
  return j.dump();
}

DigestReport DigestReport::from_json(const std::string& date, std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    DigestReport r;
    r.date = date;
    r.steps = j.at("steps").get<std::uint32_t>();
    r.distance_km = j.at("distance_km").get<std::string>();
    r.calories = j.at("calories").get<std::uint32_t>();
    r.active_minutes = j.at("active_minutes").get<std::uint32_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ServerError, std::string("bad digest document: ") + e.what());
  }
}

const char* sync_status_name(SyncStatus status) {
  switch (status) {
    case SyncStatus::Accepted: return "accepted";
    case SyncStatus::CrcMismatch: return "crc-mismatch";
    case SyncStatus::Invalid: return "invalid";
    case SyncStatus::GenericInvalid: return "generic-invalid";
    case SyncStatus::LockedOut: return "locked-out";
    case SyncStatus::UnknownTracker: return "unknown-tracker";
  }
  return "?";
}

SyncResponse SyncResult::to_response(const TrackerId& id) const {
  if (status == SyncStatus::CrcMismatch && crc) {
    return crc_oracle_response(crc->expected, crc->found);
  }
  SyncResponse r;
  if (status == SyncStatus::Accepted) {
    r.status = "ok";
    r.tracker_id = id;
    r.ack_frame = ack_frame;
  } else {
    r.status = "error";
    r.error = message;
  }
  return r;
}

SyncResponse crc_oracle_response(std::uint16_t expected, std::uint16_t found) {
  SyncResponse r;
  r.status = "error";
  r.error = "CRC mismatch: frame declares " + hex16(found) + ", expected " + hex16(expected);
  r.expected_crc = expected;
  return r;
}

Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

SyncService::SyncService(ServerConfig config, Clock clock, std::optional<std::string> store_path)
    : config_(config), clock_(std::move(clock)), store_path_(std::move(store_path)) {
  config_.validate();
  if (store_path_) accounts_ = load_store(*store_path_);
}

void SyncService::add_account(Account account) {
  std::lock_guard lock(mutex_);
  if (accounts_.count(account.tracker_id)) {
    throw Error(Errc::InvalidArgument, "tracker " + account.tracker_id.to_string() + " already bound");
  }
  for (const auto& [id, a] : accounts_) {
    if (a.user_id == account.user_id) throw Error(Errc::InvalidArgument, "user " + a.user_id + " exists");
  }
  accounts_.emplace(account.tracker_id, std::move(account));
  persist_locked();
}

void SyncService::set_device_key(const TrackerId& tracker, const DeviceKey& key) {
  std::lock_guard lock(mutex_);
  auto it = accounts_.find(tracker);
  if (it == accounts_.end()) throw Error(Errc::UnknownTracker, "unknown tracker " + tracker.to_string());
  it->second.device_key = key;
  persist_locked();
}

bool SyncService::handle_validate(const SyncEnvelope& envelope, std::optional<TrackerId> bt_address) {
  try {
    decode_microdump(envelope.payload());
  } catch (const Error& e) {
    throw Error(Errc::MalformedEnvelope, std::string("validate payload is not a microdump: ") + e.what());
  }
  std::lock_guard lock(mutex_);
  return accounts_.count(bt_address.value_or(envelope.tracker_id)) > 0;
}

SyncResult SyncService::handle_sync(const SyncEnvelope& envelope) {
  std::lock_guard lock(mutex_);
  auto it = accounts_.find(envelope.tracker_id);
  if (it == accounts_.end()) {
    return {SyncStatus::UnknownTracker, "unknown tracker " + envelope.tracker_id.to_string(), {}, {}, {}};
  }
  Account& account = it->second;
  const std::int64_t now = clock_();
  if (account.locked_until) {
    if (now < *account.locked_until) {
      return {SyncStatus::LockedOut, "too many errors, try again later", {}, {}, {}};
    }
    account.locked_until.reset();
    account.error_count = 0;
  }
  SyncResult result = process(account, envelope, now);
  persist_locked();
  return result;
}

SyncResult SyncService::reject(Account& account, std::int64_t now, SyncResult result) {
  if (config_.mode == ServerMode::Hardened) {
    result.status = SyncStatus::GenericInvalid;
    result.message = "invalid message";
    result.crc.reset();
  }
  if (++account.error_count >= config_.error_threshold) {
    account.locked_until = now + config_.lockout_seconds;
  }
  return result;
}

SyncResult SyncService::process(Account& account, const SyncEnvelope& envelope, std::int64_t now) {
  const bool hardened = config_.mode == ServerMode::Hardened;
  auto invalid = [&](const std::string& why) {
    return reject(account, now, {SyncStatus::Invalid, why, {}, {}, {}});
  };

  RawFrame raw;
  try {
    raw = split_frame(envelope.payload());
  } catch (const Error& e) {
    if (e.code() == Errc::BadCrc && e.crc()) {
      return reject(account, now, {SyncStatus::CrcMismatch, e.what(), e.crc(), {}, {}});
    }
    return invalid(e.what());
  }

  if (hardened) {
    if (raw.header.device_id != envelope.tracker_id) return invalid("header/envelope tracker mismatch");
    if (account.device_key) {
      if (!raw.header.encrypted) return invalid("plaintext from an encryption-capable tracker");
      if (!verify_frame_tag(envelope.payload(), *account.device_key)) return invalid("bad tag");
    }
  }
  if (raw.header.encrypted && !account.device_key) return invalid("encrypted frame but no key on file");

  Megadump dump;
  dump.header = raw.header;
  dump.footer = raw.footer;
  try {
    decode_megadump_body(account.device_key ? open_body(raw, *account.device_key) : raw.body, dump);
  } catch (const Error& e) {
    return invalid(e.what());
  }

  std::optional<FraudVerdict> verdict;
  if (hardened) {
    const FraudResult fraud = fraud_check(config_.fraud, dump);
    verdict = fraud.verdict;
    if (fraud.verdict != FraudVerdict::Accept) account.fraud_flag = true;
    if (fraud.verdict == FraudVerdict::Reject) {
      SyncResult r = invalid(fraud.reason);
      r.fraud = verdict;
      return r;
    }
  }

  account.daily_log[utc_date(dump.overall.timestamp)] = totals_of(dump.overall);
  account.error_count = 0;

  Microdump ack;
  ack.header.device_id = envelope.tracker_id;
  ack.header.firmware_version = raw.header.firmware_version;
  ack.header.sequence = raw.header.sequence;
  return {SyncStatus::Accepted, "ok", {}, verdict, encode_microdump(ack)};
}

DigestReport SyncService::get_digest(const std::string& user_id, const std::string& date) const {
  std::lock_guard lock(mutex_);
  for (const auto& [id, a] : accounts_) {
    if (a.user_id != user_id) continue;
    auto day = a.daily_log.find(date);
    if (day == a.daily_log.end()) throw Error(Errc::NoData, "no data for " + date);
    return DigestReport::from_totals(date, day->second);
  }
  throw Error(Errc::UnknownUser, "unknown user " + user_id);
}

std::optional<Account> SyncService::account_for_tracker(const TrackerId& tracker) const {
  std::lock_guard lock(mutex_);
  auto it = accounts_.find(tracker);
  if (it == accounts_.end()) return std::nullopt;
  return it->second;
}

std::optional<Account> SyncService::account_for_user(const std::string& user_id) const {
  std::lock_guard lock(mutex_);
  for (const auto& [id, a] : accounts_) {
    if (a.user_id == user_id) return a;
  }
  return std::nullopt;
}

std::vector<Account> SyncService::accounts() const {
  std::lock_guard lock(mutex_);
  std::vector<Account> out;
  for (const auto& [id, a] : accounts_) out.push_back(a);
  return out;
}

void SyncService::persist() const {
  std::lock_guard lock(mutex_);
  persist_locked();
}

void SyncService::persist_locked() const {
  if (store_path_) save_store(*store_path_, accounts_);
}

}  // namespace trackersync
