#include "tracker.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "calendar.hpp"
#include "error.hpp"
#include "secure_frame.hpp"

namespace trackersync {

namespace map = eeprom_map;

ByteView EepromImage::view(std::size_t offset, std::size_t length) const {
  if (offset > map::kSize || length > map::kSize - offset) {
    throw Error(Errc::OutOfRange, "EEPROM access beyond 8192 bytes");
  }
  return ByteView(bytes_).subspan(offset, length);
}

void EepromImage::write(std::size_t offset, ByteView data) {
  if (offset > map::kSize || data.size() > map::kSize - offset) {
    throw Error(Errc::OutOfRange, "EEPROM access beyond 8192 bytes");
  }
  std::copy(data.begin(), data.end(), bytes_.begin() + static_cast<long>(offset));
}

EepromImage EepromImage::from_bytes(ByteView raw) {
  if (raw.size() != map::kSize) {
    throw Error(Errc::InvalidArgument,
                "EEPROM image must be 8192 bytes, got " + std::to_string(raw.size()));
  }
  EepromImage image;
  image.write(0, raw);
  return image;
}

EepromImage EepromImage::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open EEPROM image " + path);
  const Bytes raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(raw);
}

void EepromImage::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
  if (!out) throw Error(Errc::Io, "cannot write EEPROM image " + path);
}

namespace {

void write_u16(EepromImage& e, std::size_t at, std::uint16_t v) {
  Bytes b;
  put_u16_le(b, v);
  e.write(at, b);
}

void write_u32(EepromImage& e, std::size_t at, std::uint32_t v) {
  Bytes b;
  put_u32_le(b, v);
  e.write(at, b);
}

bool overlaps(std::size_t addr, std::size_t len, std::size_t begin, std::size_t end) {
  return len > 0 && addr < end && begin < addr + len;
}

// Raw content views clamped to their region capacity.
ByteView daily_raw(const EepromImage& e) {
  const std::size_t count = std::min<std::size_t>(get_u16_le(e.bytes(), map::kDailyCount), map::kDailyCapacity);
  return e.view(map::kDailyRecords, count * kDailyRecordSize);
}

ByteView per_minute_raw(const EepromImage& e) {
  const std::size_t len =
      std::min<std::size_t>(get_u16_le(e.bytes(), map::kPerMinuteLength), map::kPerMinuteCapacity);
  return e.view(map::kPerMinuteContent, len);
}

ByteView alarm_raw(const EepromImage& e) {
  const std::size_t count = std::min<std::size_t>(e.bytes()[map::kAlarmCount], map::kAlarmCapacity);
  return e.view(map::kAlarmEntries, count * kAlarmEntrySize);
}

void append_section(Bytes& out, ByteView content) {
  out.insert(out.end(), kSectionStart.begin(), kSectionStart.end());
  const Bytes escaped = escape_section(content);
  out.insert(out.end(), escaped.begin(), escaped.end());
  out.push_back(kSlipEnd);
}

}  // namespace

Tracker::Tracker(const TrackerId& serial, const DeviceKey& key, bool encrypted,
                 TrackerProfile profile)
    : profile_(profile) {
  eeprom_.write(map::kSerialId, serial.bytes());
  eeprom_.write(map::kDeviceKey, key.bytes());
  write_u16(eeprom_, map::kFirmwareVersion, profile.firmware_version);
  const std::uint8_t flag = encrypted ? map::kEncryptedValue : 0x00;
  eeprom_.write(map::kEncryptionFlag, ByteView(&flag, 1));
  write_u32(eeprom_, map::kSequence, 1);
  store_activity(Activity{});
}

Tracker::Tracker(EepromImage image, TrackerProfile profile)
    : eeprom_(std::move(image)), profile_(profile) {}

TrackerId Tracker::serial() const {
  return TrackerId::from_bytes(eeprom_.view(map::kSerialId, TrackerId::kSize));
}

bool Tracker::encryption_enabled() const {
  return eeprom_.bytes()[map::kEncryptionFlag] == map::kEncryptedValue;
}

std::uint32_t Tracker::sequence() const { return get_u32_le(eeprom_.bytes(), map::kSequence); }

Activity Tracker::activity() const {
  Activity a;
  a.daily = decode_daily_content(daily_raw(eeprom_));
  a.per_minute = decode_per_minute_content(per_minute_raw(eeprom_));
  a.overall = decode_overall_content(eeprom_.view(map::kOverall, kOverallSummarySize));
  a.alarms = decode_alarm_content(alarm_raw(eeprom_));
  return a;
}

bool Tracker::has_pending() const {
  const Activity a = activity();
  return !a.daily.empty() || !a.per_minute.slots.empty() || a.overall != OverallSummary{};
}

void Tracker::set_alarms(const AlarmSection& alarms) {
  Activity a = activity();
  a.alarms = alarms;
  store_activity(a);
}

void Tracker::store_activity(const Activity& a) {
  const Bytes daily = encode_daily_content(a.daily);
  const Bytes per_minute = encode_per_minute_content(a.per_minute);
  const Bytes alarms = encode_alarm_content(a.alarms);
  if (a.daily.size() > map::kDailyCapacity || per_minute.size() > map::kPerMinuteCapacity ||
      a.alarms.entries.size() > map::kAlarmCapacity) {
    throw Error(Errc::CapacityExceeded, "activity region full");
  }
  eeprom_.write(map::kOverall, encode_overall_content(a.overall));
  write_u16(eeprom_, map::kDailyCount, static_cast<std::uint16_t>(a.daily.size()));
  eeprom_.write(map::kDailyRecords, daily);
  write_u16(eeprom_, map::kPerMinuteLength, static_cast<std::uint16_t>(per_minute.size()));
  eeprom_.write(map::kPerMinuteContent, per_minute);
  const std::uint8_t alarm_count = static_cast<std::uint8_t>(a.alarms.entries.size());
  eeprom_.write(map::kAlarmCount, ByteView(&alarm_count, 1));
  eeprom_.write(map::kAlarmEntries, alarms);
}

void Tracker::record_steps(std::int64_t at, std::uint32_t steps) {
  if (at < clock_) {
    throw Error(Errc::ClockRegression, "recording at " + std::to_string(at) +
                                           " is before tracker clock " + std::to_string(clock_));
  }
  if (at < 0 || at > 0xFFFFFFFFLL) throw Error(Errc::InvalidArgument, "timestamp out of range");
  Activity a = activity();
  clock_ = at;
  if (steps == 0) return;

  auto& pm = a.per_minute;
  const std::uint32_t now = static_cast<std::uint32_t>(at);
  const std::uint32_t period_s = pm.period_code * 60u;
  const bool fresh = pm.slots.empty() && pm.base_time == 0;
  if (!fresh && utc_day_start(now) != utc_day_start(pm.base_time)) {
    // A new day: fold the finished day's slots into a daily record.
    DailyRecord day;
    day.timestamp = pm.base_time;
    for (auto s : pm.slots) day.steps += s;
    day.distance_mm = day.steps * profile_.stride_mm;
    day.calories = static_cast<std::uint16_t>(day.steps * profile_.calories_per_1000_steps / 1000);
    if (day.steps > 0 && (a.daily.empty() || a.daily.back().timestamp < day.timestamp)) {
      a.daily.push_back(day);
    }
    pm.slots.clear();
    pm.base_time = 0;
  }
  if (pm.slots.empty() && pm.base_time == 0) pm.base_time = now - now % period_s;

  std::size_t index = (now - pm.base_time) / period_s;
  std::uint32_t remaining = steps;
  std::uint16_t newly_active = 0;
  while (remaining > 0) {
    if (pm.slots.size() <= index) pm.slots.resize(index + 1, 0);
    const std::uint32_t room = 255u - pm.slots[index];
    const std::uint32_t add = std::min(room, remaining);
    if (add > 0 && pm.slots[index] == 0) newly_active = static_cast<std::uint16_t>(newly_active + pm.period_code);
    pm.slots[index] = static_cast<std::uint8_t>(pm.slots[index] + add);
    remaining -= add;
    ++index;
  }

  auto& o = a.overall;
  if (o.timestamp == 0) o.timestamp = pm.base_time;
  o.steps += steps;
  o.distance_mm += steps * profile_.stride_mm;
  o.calories = static_cast<std::uint16_t>(
      o.calories + (steps * profile_.calories_per_1000_steps + 500) / 1000);
  o.active_minutes = static_cast<std::uint16_t>(o.active_minutes + newly_active);
  store_activity(a);
}

Bytes Tracker::activity_body() const {
  Bytes body;
  append_section(body, daily_raw(eeprom_));
  append_section(body, per_minute_raw(eeprom_));
  append_section(body, eeprom_.view(map::kOverall, kOverallSummarySize));
  append_section(body, alarm_raw(eeprom_));
  return body;
}

Bytes Tracker::generate_megadump() {
  FrameHeader header;
  header.device_id = serial();
  header.firmware_version = get_u16_le(eeprom_.bytes(), map::kFirmwareVersion);
  header.sequence = sequence();
  const Bytes body = activity_body();

  Bytes frame;
  if (encryption_enabled()) {
    if (last_encrypted_sequence_ && header.sequence <= *last_encrypted_sequence_) {
      throw Error(Errc::NonceReuse,
                  "sequence " + std::to_string(header.sequence) + " already used with this key");
    }
    const DeviceKey key = DeviceKey::from_bytes(eeprom_.view(map::kDeviceKey, DeviceKey::kSize));
    frame = seal_frame(header, body, key);
    last_encrypted_sequence_ = header.sequence;
  } else {
    frame = assemble_frame(header, body);
  }
  write_u32(eeprom_, map::kSequence, header.sequence + 1);
  return frame;
}

Bytes Tracker::generate_microdump(std::uint8_t status_code, std::uint8_t battery_pct) const {
  Microdump m;
  m.header.device_id = serial();
  m.header.firmware_version = get_u16_le(eeprom_.bytes(), map::kFirmwareVersion);
  m.header.sequence = sequence();
  m.status_code = status_code;
  m.battery_pct = battery_pct;
  return encode_microdump(m);
}

Bytes Tracker::debug_read(std::size_t addr, std::size_t len) const {
  const auto level = eeprom_.protection();
  if (level == ProtectionLevel::Chip) throw Error(Errc::DebugDisabled, "debug port disabled");
  const ByteView data = eeprom_.view(addr, len);
  if (level == ProtectionLevel::MemoryRead &&
      (overlaps(addr, len, map::kDeviceKey, map::kDeviceKey + DeviceKey::kSize) ||
       overlaps(addr, len, map::kActivityBegin, map::kActivityEnd))) {
    throw Error(Errc::ReadProtected, "region is read protected");
  }
  return Bytes(data.begin(), data.end());
}

void Tracker::debug_write(std::size_t addr, ByteView bytes) {
  if (eeprom_.protection() != ProtectionLevel::None) {
    throw Error(Errc::DebugDisabled, "debug writes require protection level 0");
  }
  eeprom_.write(addr, bytes);
}

void Tracker::set_protection_level(ProtectionLevel level) {
  if (level < eeprom_.protection()) {
    throw Error(Errc::InvalidArgument, "readout protection cannot be lowered");
  }
  eeprom_.set_protection(level);
}

void Tracker::apply_server_response(const SyncAck& response) {
  if (!response.accepted) return;
  const Microdump ack = decode_microdump(response.ack_frame);
  if (ack.header.device_id != serial()) {
    throw Error(Errc::ResponseMismatch,
                "ack addressed to " + ack.header.device_id.to_string() + ", tracker is " +
                    serial().to_string());
  }
  if (ack.status_code != 0) return;
  Activity cleared;
  cleared.alarms = decode_alarm_content(alarm_raw(eeprom_));
  store_activity(cleared);
}

}  // namespace trackersync
