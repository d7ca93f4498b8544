#pragma once

// Wire codec for tracker frames.
//
// Frame layout (all multi-byte integers little-endian unless noted):
//
//   header   16 bytes  device_id(6) fw_version(2) flags(1) sequence(4) reserved(3)
//   body     N bytes   megadump: four sections, each C0 CD DB DC <escaped> C0
//                      microdump: status(1) battery(1)
//   footer    6 bytes  crc(2) payload_len(4), both computed over the body bytes
//   tag       8 bytes  only when flags bit1 is set (MAC over header||body||footer)
//
// flags: bit0 = body encrypted, bit1 = authentication tag appended.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bytes.hpp"

namespace trackersync {

class TrackerId {
 public:
  static constexpr std::size_t kSize = 6;

  TrackerId() = default;
  explicit TrackerId(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

  // Throws Error(InvalidArgument) unless exactly 6 bytes.
  static TrackerId from_bytes(ByteView bytes);
  // Exactly 12 hex digits, either case.
  static TrackerId parse(std::string_view hex);

  const std::array<std::uint8_t, kSize>& bytes() const noexcept { return bytes_; }
  std::string to_string() const { return to_hex(bytes_); }

  auto operator<=>(const TrackerId&) const = default;

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

constexpr std::uint8_t kFlagEncrypted = 0x01;
constexpr std::uint8_t kFlagAuthenticated = 0x02;

constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kFooterSize = 6;
constexpr std::size_t kTagSize = 8;
constexpr std::size_t kMaxBodySize = 65535;

struct FrameHeader {
  TrackerId device_id;
  std::uint16_t firmware_version = 0;  // major * 100 + minor
  bool encrypted = false;
  bool authenticated = false;
  std::uint32_t sequence = 0;

  bool operator==(const FrameHeader&) const = default;
};

struct FrameFooter {
  std::uint16_t crc = 0;
  std::uint32_t payload_len = 0;

  bool operator==(const FrameFooter&) const = default;
};

constexpr std::size_t kDailyRecordSize = 14;

struct DailyRecord {
  std::uint32_t timestamp = 0;
  std::uint32_t steps = 0;
  std::uint32_t distance_mm = 0;
  std::uint16_t calories = 0;

  bool operator==(const DailyRecord&) const = default;
};

constexpr std::uint8_t kDefaultPeriodMinutes = 2;

struct PerMinuteSummary {
  std::uint32_t base_time = 0;
  std::uint8_t period_code = kDefaultPeriodMinutes;  // slot length in minutes
  std::vector<std::uint8_t> slots;                   // steps per slot

  std::uint32_t slot_start(std::size_t index) const {
    return base_time + static_cast<std::uint32_t>(index) * period_code * 60u;
  }
  bool operator==(const PerMinuteSummary&) const = default;
};

constexpr std::size_t kOverallSummarySize = 20;

struct OverallSummary {
  std::uint32_t timestamp = 0;
  std::uint16_t calories = 0;
  std::uint32_t steps = 0;
  std::uint32_t distance_mm = 0;
  std::uint16_t elevation = 0;
  std::uint16_t floors = 0;
  std::uint16_t active_minutes = 0;

  bool operator==(const OverallSummary&) const = default;
};

// Byte offsets of fields inside the overall summary record.
namespace overall_offset {
constexpr std::size_t kTimestamp = 0x00;
constexpr std::size_t kCalories = 0x04;
constexpr std::size_t kSteps = 0x06;
constexpr std::size_t kDistance = 0x0A;
constexpr std::size_t kElevation = 0x0E;
constexpr std::size_t kFloors = 0x10;
constexpr std::size_t kActiveMinutes = 0x12;
}  // namespace overall_offset

constexpr std::size_t kAlarmEntrySize = 5;

struct AlarmEntry {
  std::uint32_t timestamp = 0;
  std::uint8_t repeat_mask = 0;

  bool operator==(const AlarmEntry&) const = default;
};

struct AlarmSection {
  std::vector<AlarmEntry> entries;

  bool operator==(const AlarmSection&) const = default;
};

struct Megadump {
  FrameHeader header;
  std::vector<DailyRecord> daily;
  PerMinuteSummary per_minute;
  OverallSummary overall;
  AlarmSection alarms;
  FrameFooter footer;  // filled by decode; ignored by encode

  // Equality over everything the encoder consumes (footer excluded).
  bool same_content(const Megadump& other) const {
    return header == other.header && daily == other.daily && per_minute == other.per_minute &&
           overall == other.overall && alarms == other.alarms;
  }
};

struct Microdump {
  FrameHeader header;
  std::uint8_t status_code = 0;
  std::uint8_t battery_pct = 0;
  FrameFooter footer;
};

// A frame split into its parts. The body is exactly what lies on the wire
// between header and footer (ciphertext when header.encrypted).
struct RawFrame {
  FrameHeader header;
  Bytes body;
  FrameFooter footer;
  std::optional<std::array<std::uint8_t, kTagSize>> tag;
};

constexpr std::array<std::uint8_t, 4> kSectionStart{0xC0, 0xCD, 0xDB, 0xDC};
constexpr std::uint8_t kSlipEnd = 0xC0;
constexpr std::uint8_t kSlipEsc = 0xDB;
constexpr std::uint8_t kSlipEscEnd = 0xDC;
constexpr std::uint8_t kSlipEscEsc = 0xDD;

Bytes escape_section(ByteView raw);
// Throws Error(MalformedEscape).
Bytes unescape_section(ByteView escaped);

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc_ccitt(ByteView data);

Bytes encode_header(const FrameHeader& header);
FrameHeader decode_header(ByteView wire);  // needs >= kHeaderSize bytes

// Section contents (unescaped, delimiters excluded). The tracker's EEPROM
// keeps activity in this same format.
Bytes encode_daily_content(const std::vector<DailyRecord>& records);
std::vector<DailyRecord> decode_daily_content(ByteView content);
Bytes encode_per_minute_content(const PerMinuteSummary& summary);
PerMinuteSummary decode_per_minute_content(ByteView content);
Bytes encode_overall_content(const OverallSummary& summary);
OverallSummary decode_overall_content(ByteView content);
Bytes encode_alarm_content(const AlarmSection& alarms);
AlarmSection decode_alarm_content(ByteView content);

// The four delimited sections of a megadump, in canonical order.
Bytes encode_megadump_body(const Megadump& dump);
// Fills daily/per_minute/overall/alarms of `out`.
void decode_megadump_body(ByteView body, Megadump& out);

// header || body || footer. The footer is computed; header flags are written
// as given, so the caller appends the tag when header.authenticated is set.
Bytes assemble_frame(const FrameHeader& header, ByteView body);
// Validates length and CRC. Throws TruncatedFrame or BadCrc.
RawFrame split_frame(ByteView wire);

// Plaintext megadump. Throws SectionOrderViolation, OversizePayload.
Bytes encode_megadump(const Megadump& dump);
// Throws BadCrc, TruncatedFrame, UnknownSectionLayout, MalformedEscape,
// EncryptedFrame (body needs a key, see secure_frame.hpp).
Megadump decode_megadump(ByteView wire);

Bytes encode_microdump(const Microdump& dump);
Microdump decode_microdump(ByteView wire);

// One line per field: offset, raw hex, field name and decoded value. Bytes
// that cannot be attributed are dumped with the label UNKNOWN. Never throws.
std::string render_dissection(ByteView wire);

// Parses "offset: bytes" or bare hex dump text. Offsets (a leading token
// ending in ':' or longer than 2 hex digits) are skipped.
Bytes parse_hex_dump(std::string_view text);

}  // namespace trackersync
