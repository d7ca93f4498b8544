#pragma once

// Sync server logic, independent of the HTTP front end.
//
// Vulnerable mode keeps the behaviour observed on the production service:
// plaintext accepted from any tracker, detailed errors including the
// expected CRC, activity keyed by the envelope's tracker id. Hardened mode
// enforces encryption for key-holding trackers, answers every bad frame with
// the same generic error, requires a valid tag under the SIGN0001 subkey
// and screens activity through fraud_check before merging.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crypto.hpp"
#include "envelope.hpp"
#include "error.hpp"
#include "frame_codec.hpp"

namespace trackersync {

enum class ServerMode { Vulnerable, Hardened };

const char* mode_name(ServerMode mode);
ServerMode parse_mode(std::string_view name);  // throws InvalidArgument

struct FraudRules {
  std::uint32_t max_daily_steps = 100000;
  std::uint32_t max_steps_per_minute = 300;
  double min_stride_m = 0.2;
  double max_stride_m = 2.5;
};

struct ServerConfig {
  ServerMode mode = ServerMode::Vulnerable;
  std::uint32_t error_threshold = 5;
  std::int64_t lockout_seconds = 3600;
  FraudRules fraud;

  // Throws InvalidArgument unless every threshold is strictly positive.
  void validate() const;
};

struct DayTotals {
  std::uint32_t steps = 0;
  std::uint32_t distance_mm = 0;
  std::uint32_t calories = 0;
  std::uint32_t floors = 0;
  std::uint32_t active_minutes = 0;

  bool operator==(const DayTotals&) const = default;
};

struct Account {
  std::string user_id;
  TrackerId tracker_id;
  std::optional<DeviceKey> device_key;
  std::map<std::string, DayTotals> daily_log;  // YYYY-MM-DD (UTC) -> totals
  bool fraud_flag = false;
  std::uint32_t error_count = 0;
  std::optional<std::int64_t> locked_until;

  bool operator==(const Account&) const = default;
};

// "12.34" from millimetres, rounded half up.
std::string format_distance_km(std::uint64_t distance_mm);

struct DigestReport {
  std::string date;
  std::uint32_t steps = 0;
  std::string distance_km = "0.00";
  std::uint32_t calories = 0;
  std::uint32_t active_minutes = 0;

  static DigestReport from_totals(const std::string& date, const DayTotals& totals);
  static DigestReport from_overall(const OverallSummary& overall);
  // {"steps":int,"distance_km":"D.DD","calories":int,"active_minutes":int}
  std::string to_json() const;
  static DigestReport from_json(const std::string& date, std::string_view json);

  bool operator==(const DigestReport&) const = default;
};

enum class FraudVerdict { Accept, Flag, Reject };
const char* verdict_name(FraudVerdict verdict);

struct FraudResult {
  FraudVerdict verdict = FraudVerdict::Accept;
  std::string reason;
};

// Screens one incoming frame. Reject on impossible volumes, flag on an
// implausible stride.
FraudResult fraud_check(const FraudRules& rules, const Megadump& dump);

enum class SyncStatus {
  Accepted,
  CrcMismatch,     // vulnerable: carries the expected CRC
  Invalid,         // vulnerable: detailed reason
  GenericInvalid,  // hardened: no detail
  LockedOut,
  UnknownTracker,
};

const char* sync_status_name(SyncStatus status);

struct SyncResult {
  SyncStatus status = SyncStatus::Invalid;
  std::string message;
  std::optional<CrcMismatchInfo> crc;  // CrcMismatch only
  std::optional<FraudVerdict> fraud;
  Bytes ack_frame;

  SyncResponse to_response(const TrackerId& id) const;
};

// Vulnerable-mode CRC oracle reply.
SyncResponse crc_oracle_response(std::uint16_t expected, std::uint16_t found);

using Clock = std::function<std::int64_t()>;

Clock system_clock();

// Test clock; copies share state.
class ManualClock {
 public:
  explicit ManualClock(std::int64_t start) : now_(std::make_shared<std::atomic<std::int64_t>>(start)) {}
  std::int64_t operator()() const { return now_->load(); }
  void set(std::int64_t t) { now_->store(t); }
  void advance(std::int64_t seconds) { now_->fetch_add(seconds); }

 private:
  std::shared_ptr<std::atomic<std::int64_t>> now_;
};

class SyncService {
 public:
  // With a store path, accounts are loaded at construction and written after
  // every state change (temp file + rename).
  SyncService(ServerConfig config, Clock clock, std::optional<std::string> store_path = {});

  const ServerConfig& config() const noexcept { return config_; }

  // Throws InvalidArgument when the tracker or user is already bound.
  void add_account(Account account);
  // Attaches a key to an existing account. Throws UnknownTracker.
  void set_device_key(const TrackerId& tracker, const DeviceKey& key);

  // Known and bound to an account. Throws MalformedEnvelope when the payload
  // is not a microdump.
  bool handle_validate(const SyncEnvelope& envelope, std::optional<TrackerId> bt_address = {});
  SyncResult handle_sync(const SyncEnvelope& envelope);

  // Throws UnknownUser, NoData.
  DigestReport get_digest(const std::string& user_id, const std::string& date) const;

  std::optional<Account> account_for_tracker(const TrackerId& tracker) const;
  std::optional<Account> account_for_user(const std::string& user_id) const;
  std::vector<Account> accounts() const;

  void persist() const;

 private:
  SyncResult process(Account& account, const SyncEnvelope& envelope, std::int64_t now);
  SyncResult reject(Account& account, std::int64_t now, SyncResult result);
  void persist_locked() const;

  ServerConfig config_;
  Clock clock_;
  std::optional<std::string> store_path_;
  mutable std::mutex mutex_;
  std::map<TrackerId, Account> accounts_;
};

// Store file (JSON). A missing file is an empty store; anything unreadable
// throws CorruptStore.
std::map<TrackerId, Account> load_store(const std::string& path);
void save_store(const std::string& path, const std::map<TrackerId, Account>& accounts);

}  // namespace trackersync
