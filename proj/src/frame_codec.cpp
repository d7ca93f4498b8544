#include "frame_codec.hpp"

#include <algorithm>
#include <cctype>

#include "error.hpp"

namespace trackersync {

TrackerId TrackerId::from_bytes(ByteView bytes) {
  if (bytes.size() != kSize) {
    throw Error(Errc::InvalidArgument,
                "tracker id must be 6 bytes, got " + std::to_string(bytes.size()));
  }
  std::array<std::uint8_t, kSize> raw{};
  std::copy(bytes.begin(), bytes.end(), raw.begin());
  return TrackerId(raw);
}

TrackerId TrackerId::parse(std::string_view hex) {
  if (hex.size() != 2 * kSize) {
    throw Error(Errc::InvalidArgument, "tracker id must be 12 hex digits: " + std::string(hex));
  }
  return from_bytes(from_hex(hex));
}

Bytes escape_section(ByteView raw) {
  Bytes out;
  out.reserve(raw.size() + raw.size() / 8);
  for (auto b : raw) {
    if (b == kSlipEnd) {
      out.push_back(kSlipEsc);
      out.push_back(kSlipEscEnd);
    } else if (b == kSlipEsc) {
      out.push_back(kSlipEsc);
      out.push_back(kSlipEscEsc);
    } else {
      out.push_back(b);
    }
  }
  return out;
}

Bytes unescape_section(ByteView escaped) {
  Bytes out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    const auto b = escaped[i];
    if (b != kSlipEsc) {
      out.push_back(b);
      continue;
    }
    if (i + 1 == escaped.size()) throw Error(Errc::MalformedEscape, "input ends mid-escape");
    const auto next = escaped[++i];
    if (next == kSlipEscEnd) {
      out.push_back(kSlipEnd);
    } else if (next == kSlipEscEsc) {
      out.push_back(kSlipEsc);
    } else {
      throw Error(Errc::MalformedEscape, "escape byte followed by " + to_hex(ByteView(&next, 1)));
    }
  }
  return out;
}

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> table{};
  for (unsigned i = 0; i < 256; ++i) {
    std::uint16_t crc = static_cast<std::uint16_t>(i << 8);
    for (int bit = 0; bit < 8; ++bit) {
      crc = static_cast<std::uint16_t>((crc & 0x8000) ? (crc << 1) ^ 0x1021 : crc << 1);
    }
    table[i] = crc;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

}  // namespace

std::uint16_t crc_ccitt(ByteView data) {
  std::uint16_t crc = 0xFFFF;
  for (auto b : data) {
    crc = static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ b) & 0xFF]);
  }
  return crc;
}

Bytes encode_header(const FrameHeader& header) {
  Bytes out;
  out.reserve(kHeaderSize);
  out.insert(out.end(), header.device_id.bytes().begin(), header.device_id.bytes().end());
  put_u16_le(out, header.firmware_version);
  std::uint8_t flags = 0;
  if (header.encrypted) flags |= kFlagEncrypted;
  if (header.authenticated) flags |= kFlagAuthenticated;
  out.push_back(flags);
  put_u32_le(out, header.sequence);
  out.insert(out.end(), 3, 0x00);
  return out;
}

FrameHeader decode_header(ByteView wire) {
  if (wire.size() < kHeaderSize) throw Error(Errc::TruncatedFrame, "frame shorter than header");
  FrameHeader h;
  h.device_id = TrackerId::from_bytes(wire.first(TrackerId::kSize));
  h.firmware_version = get_u16_le(wire, 6);
  h.encrypted = (wire[8] & kFlagEncrypted) != 0;
  h.authenticated = (wire[8] & kFlagAuthenticated) != 0;
  h.sequence = get_u32_le(wire, 9);
  return h;
}

Bytes encode_daily_content(const std::vector<DailyRecord>& records) {
  Bytes out;
  out.reserve(records.size() * kDailyRecordSize);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0 && r.timestamp <= records[i - 1].timestamp) {
      throw Error(Errc::SectionOrderViolation,
                  "daily record timestamps must be strictly increasing (record " +
                      std::to_string(i) + ")");
    }
    put_u32_le(out, r.timestamp);
    put_u32_le(out, r.steps);
    put_u32_le(out, r.distance_mm);
    put_u16_le(out, r.calories);
  }
  return out;
}

std::vector<DailyRecord> decode_daily_content(ByteView content) {
  if (content.size() % kDailyRecordSize != 0) {
    throw Error(Errc::UnknownSectionLayout,
                "daily section length " + std::to_string(content.size()) +
                    " is not a multiple of 14");
  }
  std::vector<DailyRecord> out;
  for (std::size_t at = 0; at < content.size(); at += kDailyRecordSize) {
    DailyRecord r;
    r.timestamp = get_u32_le(content, at);
    r.steps = get_u32_le(content, at + 4);
    r.distance_mm = get_u32_le(content, at + 8);
    r.calories = get_u16_le(content, at + 12);
    if (!out.empty() && r.timestamp <= out.back().timestamp) {
      throw Error(Errc::UnknownSectionLayout, "daily record timestamps not increasing");
    }
    out.push_back(r);
  }
  return out;
}

Bytes encode_per_minute_content(const PerMinuteSummary& summary) {
  if (summary.period_code == 0) throw Error(Errc::InvalidArgument, "per-minute period must be > 0");
  Bytes out;
  if (summary.slots.empty() && summary.base_time == 0 &&
      summary.period_code == kDefaultPeriodMinutes) {
    return out;
  }
  put_u32_be(out, summary.base_time);
  out.push_back(summary.period_code);
  for (std::size_t i = 0; i < summary.slots.size(); ++i) {
    out.push_back(0x00);
    out.push_back(summary.slots[i]);
    out.push_back(0x00);
    // The last record's fourth byte is the section terminator itself.
    if (i + 1 < summary.slots.size()) out.push_back(0xFF);
  }
  return out;
}

PerMinuteSummary decode_per_minute_content(ByteView content) {
  PerMinuteSummary out;
  if (content.empty()) return out;
  if (content.size() < 5) throw Error(Errc::UnknownSectionLayout, "per-minute section too short");
  out.base_time = get_u32_be(content, 0);
  out.period_code = content[4];
  if (out.period_code == 0) throw Error(Errc::UnknownSectionLayout, "per-minute period is zero");
  const auto records = content.subspan(5);
  if (records.empty()) return out;
  if ((records.size() + 1) % 4 != 0) {
    throw Error(Errc::UnknownSectionLayout, "per-minute records are not 4-byte aligned");
  }
  const std::size_t count = (records.size() + 1) / 4;
  out.slots.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = 4 * i;
    if (i + 1 < count && records[at + 3] != 0xFF) {
      throw Error(Errc::UnknownSectionLayout, "per-minute record continuation byte is not FF");
    }
    out.slots.push_back(records[at + 1]);
  }
  return out;
}

Bytes encode_overall_content(const OverallSummary& s) {
  Bytes out;
  out.reserve(kOverallSummarySize);
  put_u32_le(out, s.timestamp);
  put_u16_le(out, s.calories);
  put_u32_le(out, s.steps);
  put_u32_le(out, s.distance_mm);
  put_u16_le(out, s.elevation);
  put_u16_le(out, s.floors);
  put_u16_le(out, s.active_minutes);
  return out;
}

OverallSummary decode_overall_content(ByteView content) {
  if (content.size() != kOverallSummarySize) {
    throw Error(Errc::UnknownSectionLayout,
                "overall summary must be 20 bytes, got " + std::to_string(content.size()));
  }
  OverallSummary s;
  s.timestamp = get_u32_le(content, overall_offset::kTimestamp);
  s.calories = get_u16_le(content, overall_offset::kCalories);
  s.steps = get_u32_le(content, overall_offset::kSteps);
  s.distance_mm = get_u32_le(content, overall_offset::kDistance);
  s.elevation = get_u16_le(content, overall_offset::kElevation);
  s.floors = get_u16_le(content, overall_offset::kFloors);
  s.active_minutes = get_u16_le(content, overall_offset::kActiveMinutes);
  return s;
}

Bytes encode_alarm_content(const AlarmSection& alarms) {
  Bytes out;
  for (const auto& e : alarms.entries) {
    put_u32_le(out, e.timestamp);
    out.push_back(e.repeat_mask);
  }
  return out;
}

AlarmSection decode_alarm_content(ByteView content) {
  if (content.size() % kAlarmEntrySize != 0) {
    throw Error(Errc::UnknownSectionLayout, "alarm section length is not a multiple of 5");
  }
  AlarmSection out;
  for (std::size_t at = 0; at < content.size(); at += kAlarmEntrySize) {
    out.entries.push_back({get_u32_le(content, at), content[at + 4]});
  }
  return out;
}

namespace {

void append_section(Bytes& out, ByteView content) {
  out.insert(out.end(), kSectionStart.begin(), kSectionStart.end());
  const Bytes escaped = escape_section(content);
  out.insert(out.end(), escaped.begin(), escaped.end());
  out.push_back(kSlipEnd);
}

// Returns the unescaped content of the section starting at `pos` and moves
// `pos` past its terminator.
Bytes take_section(ByteView body, std::size_t& pos, int index) {
  if (body.size() - pos < kSectionStart.size() ||
      !std::equal(kSectionStart.begin(), kSectionStart.end(), body.begin() + pos)) {
    if (pos == body.size()) {
      throw Error(Errc::UnknownSectionLayout,
                  "expected 4 data sections, found " + std::to_string(index));
    }
    throw Error(Errc::UnknownSectionLayout,
                "missing section start at body offset " + std::to_string(pos));
  }
  const std::size_t content_begin = pos + kSectionStart.size();
  const auto end = std::find(body.begin() + content_begin, body.end(), kSlipEnd);
  if (end == body.end()) throw Error(Errc::TruncatedFrame, "section without terminator");
  const std::size_t content_end = static_cast<std::size_t>(end - body.begin());
  pos = content_end + 1;
  return unescape_section(body.subspan(content_begin, content_end - content_begin));
}

}  // namespace

Bytes encode_megadump_body(const Megadump& dump) {
  Bytes body;
  append_section(body, encode_daily_content(dump.daily));
  append_section(body, encode_per_minute_content(dump.per_minute));
  append_section(body, encode_overall_content(dump.overall));
  append_section(body, encode_alarm_content(dump.alarms));
  return body;
}

void decode_megadump_body(ByteView body, Megadump& out) {
  std::size_t pos = 0;
  out.daily = decode_daily_content(take_section(body, pos, 0));
  out.per_minute = decode_per_minute_content(take_section(body, pos, 1));
  out.overall = decode_overall_content(take_section(body, pos, 2));
  out.alarms = decode_alarm_content(take_section(body, pos, 3));
  if (pos != body.size()) {
    throw Error(Errc::UnknownSectionLayout, "unexpected data after the alarm section");
  }
}

Bytes assemble_frame(const FrameHeader& header, ByteView body) {
  if (body.size() > kMaxBodySize) {
    throw Error(Errc::OversizePayload,
                "body of " + std::to_string(body.size()) + " bytes exceeds 65535");
  }
  Bytes out = encode_header(header);
  out.insert(out.end(), body.begin(), body.end());
  put_u16_le(out, crc_ccitt(body));
  put_u32_le(out, static_cast<std::uint32_t>(body.size()));
  return out;
}

RawFrame split_frame(ByteView wire) {
  RawFrame frame;
  frame.header = decode_header(wire);
  const std::size_t trailer = kFooterSize + (frame.header.authenticated ? kTagSize : 0);
  if (wire.size() < kHeaderSize + trailer) {
    throw Error(Errc::TruncatedFrame, "frame shorter than header and footer");
  }
  const std::size_t footer_at = wire.size() - trailer;
  frame.footer.crc = get_u16_le(wire, footer_at);
  frame.footer.payload_len = get_u32_le(wire, footer_at + 2);
  const std::size_t body_len = footer_at - kHeaderSize;
  if (frame.footer.payload_len != body_len) {
    throw Error(Errc::TruncatedFrame, "footer declares " + std::to_string(frame.footer.payload_len) +
                                          " body bytes, frame carries " + std::to_string(body_len));
  }
  frame.body.assign(wire.begin() + kHeaderSize, wire.begin() + static_cast<long>(footer_at));
  const std::uint16_t computed = crc_ccitt(frame.body);
  if (computed != frame.footer.crc) {
    throw Error(Errc::BadCrc,
                "CRC mismatch: expected " + hex16(computed) + " found " + hex16(frame.footer.crc),
                CrcMismatchInfo{computed, frame.footer.crc});
  }
  if (frame.header.authenticated) {
    std::array<std::uint8_t, kTagSize> tag{};
    std::copy(wire.end() - kTagSize, wire.end(), tag.begin());
    frame.tag = tag;
  }
  return frame;
}

Bytes encode_megadump(const Megadump& dump) {
  if (dump.header.encrypted || dump.header.authenticated) {
    throw Error(Errc::InvalidArgument, "encode_megadump writes plaintext frames only");
  }
  return assemble_frame(dump.header, encode_megadump_body(dump));
}

Megadump decode_megadump(ByteView wire) {
  RawFrame raw = split_frame(wire);
  if (raw.header.encrypted) {
    throw Error(Errc::EncryptedFrame, "megadump body is encrypted");
  }
  Megadump out;
  out.header = raw.header;
  out.footer = raw.footer;
  decode_megadump_body(raw.body, out);
  return out;
}

Bytes encode_microdump(const Microdump& dump) {
  const Bytes body{dump.status_code, dump.battery_pct};
  FrameHeader header = dump.header;
  header.encrypted = false;
  header.authenticated = false;
  return assemble_frame(header, body);
}

Microdump decode_microdump(ByteView wire) {
  const RawFrame raw = split_frame(wire);
  if (raw.body.size() < 2) throw Error(Errc::TruncatedFrame, "microdump body too short");
  if (raw.body.size() > 2) throw Error(Errc::UnknownSectionLayout, "microdump body too long");
  Microdump out;
  out.header = raw.header;
  out.status_code = raw.body[0];
  out.battery_pct = raw.body[1];
  out.footer = raw.footer;
  return out;
}

Bytes parse_hex_dump(std::string_view text) {
  Bytes out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    bool first = true;
    std::size_t at = 0;
    while (at < line.size()) {
      while (at < line.size() && std::isspace(static_cast<unsigned char>(line[at]))) ++at;
      std::size_t end = at;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      if (end == at) break;
      std::string_view token = line.substr(at, end - at);
      at = end;
      const bool is_offset = first && (token.back() == ':' || token.size() > 2);
      first = false;
      if (is_offset) continue;
      const Bytes b = from_hex(token);
      if (b.size() != 1) throw Error(Errc::BadHex, "hex dump token is not one byte: " + std::string(token));
      out.push_back(b[0]);
    }
  }
  return out;
}

}  // namespace trackersync
