#pragma once

// Simulated tracker: EEPROM image, activity accumulation, frame generation
// and a debug port that honours readout protection.
//
// EEPROM memory map (8 KiB):
//
//   offset  length  field
//   0x0020       6  serial id
//   0x0030      16  device key
//   0x0040       2  firmware version (LE)
//   0x0046       1  encryption flag (0x01 encrypted, anything else plaintext)
//   0x0048       4  message sequence (LE)
//   0x0100      20  overall summary record
//   0x0118       2  daily record count (LE)
//   0x011A   14*n   daily records, n <= 126
//   0x0800       2  per-minute content length (LE)
//   0x0802     ...  per-minute content (section format), up to 0x1E00
//   0x1E00       1  alarm count
//   0x1E01    5*n   alarm entries, n <= 51
//
// Activity (0x0100..0x1F00) is kept unescaped in section-content format.

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "crypto.hpp"
#include "frame_codec.hpp"

namespace trackersync {

namespace eeprom_map {
constexpr std::size_t kSize = 8192;
constexpr std::size_t kSerialId = 0x0020;
constexpr std::size_t kDeviceKey = 0x0030;
constexpr std::size_t kFirmwareVersion = 0x0040;
constexpr std::size_t kEncryptionFlag = 0x0046;
constexpr std::size_t kSequence = 0x0048;
constexpr std::size_t kActivityBegin = 0x0100;
constexpr std::size_t kActivityEnd = 0x1F00;
constexpr std::size_t kOverall = 0x0100;
constexpr std::size_t kOverallSteps = kOverall + overall_offset::kSteps;
constexpr std::size_t kDailyCount = 0x0118;
constexpr std::size_t kDailyRecords = 0x011A;
constexpr std::size_t kDailyCapacity = (0x0800 - kDailyRecords) / kDailyRecordSize;
constexpr std::size_t kPerMinuteLength = 0x0800;
constexpr std::size_t kPerMinuteContent = 0x0802;
constexpr std::size_t kPerMinuteCapacity = 0x1E00 - kPerMinuteContent;
constexpr std::size_t kAlarmCount = 0x1E00;
constexpr std::size_t kAlarmEntries = 0x1E01;
constexpr std::size_t kAlarmCapacity = (kActivityEnd - kAlarmEntries) / kAlarmEntrySize;

constexpr std::uint8_t kEncryptedValue = 0x01;

struct Entry {
  std::size_t offset;
  std::size_t length;
  const char* name;
};

// Published memory map, in address order.
inline constexpr std::array<Entry, 12> kTable{{
    {kSerialId, 6, "serial_id"},
    {kDeviceKey, 16, "device_key"},
    {kFirmwareVersion, 2, "firmware_version"},
    {kEncryptionFlag, 1, "encryption_flag"},
    {kSequence, 4, "sequence"},
    {kOverall, kOverallSummarySize, "overall_summary"},
    {kDailyCount, 2, "daily_count"},
    {kDailyRecords, kDailyCapacity * kDailyRecordSize, "daily_records"},
    {kPerMinuteLength, 2, "per_minute_length"},
    {kPerMinuteContent, kPerMinuteCapacity, "per_minute_content"},
    {kAlarmCount, 1, "alarm_count"},
    {kAlarmEntries, kAlarmCapacity * kAlarmEntrySize, "alarm_entries"},
}};
}  // namespace eeprom_map

// Readout protection as on the tracker's microcontroller.
enum class ProtectionLevel : std::uint8_t {
  None = 0,        // debug port reads and writes everything
  MemoryRead = 1,  // key and activity unreadable, no writes
  Chip = 2,        // debug port disabled
};

class EepromImage {
 public:
  using Storage = std::array<std::uint8_t, eeprom_map::kSize>;

  EepromImage() { bytes_.fill(0x00); }

  const Storage& bytes() const noexcept { return bytes_; }
  ByteView view(std::size_t offset, std::size_t length) const;
  void write(std::size_t offset, ByteView data);  // throws OutOfRange

  ProtectionLevel protection() const noexcept { return protection_; }
  void set_protection(ProtectionLevel level) noexcept { protection_ = level; }

  // Raw 8192-byte files. Protection is not part of the file.
  static EepromImage load(const std::string& path);
  void save(const std::string& path) const;
  static EepromImage from_bytes(ByteView raw);

 private:
  Storage bytes_{};
  ProtectionLevel protection_ = ProtectionLevel::None;
};

// Activity as decoded from the EEPROM.
struct Activity {
  std::vector<DailyRecord> daily;
  PerMinuteSummary per_minute;
  OverallSummary overall;
  AlarmSection alarms;
};

// Server reply as seen by the tracker.
struct SyncAck {
  bool accepted = false;
  Bytes ack_frame;  // microdump addressed to the tracker; empty on error
};

struct TrackerProfile {
  std::uint32_t stride_mm = 762;
  std::uint32_t calories_per_1000_steps = 40;
  std::uint16_t firmware_version = 781;
};

class Tracker {
 public:
  // EEPROM initialised per the memory map with protection level 0.
  Tracker(const TrackerId& serial, const DeviceKey& key, bool encrypted,
          TrackerProfile profile = {});
  explicit Tracker(EepromImage image, TrackerProfile profile = {});

  const EepromImage& eeprom() const noexcept { return eeprom_; }
  TrackerId serial() const;
  bool encryption_enabled() const;
  std::uint32_t sequence() const;
  std::int64_t clock() const noexcept { return clock_; }

  // Decodes the activity region. Throws UnknownSectionLayout when the image
  // was corrupted through the debug port.
  Activity activity() const;
  bool has_pending() const;
  void set_alarms(const AlarmSection& alarms);

  // Throws ClockRegression, CapacityExceeded.
  void record_steps(std::int64_t at, std::uint32_t steps);

  // Next sync frame built from the EEPROM records; encrypted iff the flag
  // byte is 0x01. Advances the sequence. Throws NonceReuse when an encrypted
  // frame would reuse a sequence number already sent.
  Bytes generate_megadump();
  Bytes generate_microdump(std::uint8_t status_code = 0, std::uint8_t battery_pct = 100) const;

  // Throws DebugDisabled, ReadProtected, OutOfRange.
  Bytes debug_read(std::size_t addr, std::size_t len) const;
  void debug_write(std::size_t addr, ByteView bytes);

  // Levels only go up. Throws InvalidArgument on an attempt to lower.
  void set_protection_level(ProtectionLevel level);

  // Clears pending activity on an accepted ack. Throws ResponseMismatch when
  // the ack is for another device.
  void apply_server_response(const SyncAck& response);

 private:
  void store_activity(const Activity& activity);
  Bytes activity_body() const;

  EepromImage eeprom_;
  TrackerProfile profile_;
  std::int64_t clock_ = 0;
  std::optional<std::uint32_t> last_encrypted_sequence_;
};

}  // namespace trackersync
