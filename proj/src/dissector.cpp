#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>

#include "calendar.hpp"
#include "error.hpp"
#include "frame_codec.hpp"

namespace trackersync {

namespace {

class Printer {
 public:
  explicit Printer(ByteView wire) : wire_(wire) {}

  void field(std::size_t offset, std::size_t len, const std::string& name,
             const std::string& value) {
    line(offset, wire_.subspan(offset, len), name + ": " + value);
  }

  void unknown(std::size_t offset, std::size_t len) {
    for (std::size_t at = offset; at < offset + len; at += 16) {
      line(at, wire_.subspan(at, std::min<std::size_t>(16, offset + len - at)), "UNKNOWN");
    }
  }

  std::string str() const { return out_.str(); }

 private:
  void line(std::size_t offset, ByteView raw, const std::string& label) {
    char off[16];
    std::snprintf(off, sizeof off, "%04zX", offset);
    std::string hex = to_hex_spaced(raw);
    if (hex.size() < 47) hex.resize(47, ' ');
    out_ << off << "  " << hex << "  " << label << '\n';
  }

  ByteView wire_;
  std::ostringstream out_;
};

std::string timestamp_value(std::uint32_t ts) {
  return std::to_string(ts) + " (" + utc_date_time(ts) + " UTC)";
}

// Unescaped section content with the wire position and width of every byte.
struct MappedContent {
  Bytes bytes;
  std::vector<std::size_t> wire_at;
  std::vector<std::size_t> wire_len;

  std::size_t offset(std::size_t i) const { return wire_at[i]; }
  std::size_t span(std::size_t i, std::size_t n) const {
    return wire_at[i + n - 1] + wire_len[i + n - 1] - wire_at[i];
  }
};

// Returns false when the escaped region is malformed.
bool map_content(ByteView wire, std::size_t begin, std::size_t end, MappedContent& out) {
  for (std::size_t i = begin; i < end; ++i) {
    if (wire[i] != kSlipEsc) {
      out.bytes.push_back(wire[i]);
      out.wire_at.push_back(i);
      out.wire_len.push_back(1);
      continue;
    }
    if (i + 1 >= end) return false;
    const auto next = wire[i + 1];
    if (next != kSlipEscEnd && next != kSlipEscEsc) return false;
    out.bytes.push_back(next == kSlipEscEnd ? kSlipEnd : kSlipEsc);
    out.wire_at.push_back(i);
    out.wire_len.push_back(2);
    ++i;
  }
  return true;
}

using SectionPrinter = std::function<void(Printer&, const MappedContent&)>;

void print_daily(Printer& p, const MappedContent& c) {
  const auto records = decode_daily_content(c.bytes);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const std::size_t at = r * kDailyRecordSize;
    const std::string prefix = "daily[" + std::to_string(r) + "].";
    p.field(c.offset(at), c.span(at, 4), prefix + "timestamp", timestamp_value(records[r].timestamp));
    p.field(c.offset(at + 4), c.span(at + 4, 4), prefix + "steps", std::to_string(records[r].steps));
    p.field(c.offset(at + 8), c.span(at + 8, 4), prefix + "distance_mm",
            std::to_string(records[r].distance_mm));
    p.field(c.offset(at + 12), c.span(at + 12, 2), prefix + "calories",
            std::to_string(records[r].calories));
  }
}

void print_per_minute(Printer& p, const MappedContent& c) {
  const auto summary = decode_per_minute_content(c.bytes);
  if (c.bytes.empty()) return;
  p.field(c.offset(0), c.span(0, 4), "per_minute.base_time",
          timestamp_value(summary.base_time) + " big-endian");
  p.field(c.offset(4), 1, "per_minute.period", std::to_string(summary.period_code) + " min");
  for (std::size_t i = 0; i < summary.slots.size(); ++i) {
    const std::size_t at = 5 + 4 * i;
    const std::size_t n = std::min<std::size_t>(4, c.bytes.size() - at);
    p.field(c.offset(at), c.span(at, n), "per_minute.slot[" + std::to_string(i) + "].steps",
            std::to_string(summary.slots[i]) + " at " + utc_date_time(summary.slot_start(i)));
  }
}

void print_overall(Printer& p, const MappedContent& c) {
  const auto s = decode_overall_content(c.bytes);
  namespace o = overall_offset;
  p.field(c.offset(o::kTimestamp), c.span(o::kTimestamp, 4), "overall.timestamp",
          timestamp_value(s.timestamp));
  p.field(c.offset(o::kCalories), c.span(o::kCalories, 2), "overall.calories",
          std::to_string(s.calories));
  p.field(c.offset(o::kSteps), c.span(o::kSteps, 4), "overall.steps", std::to_string(s.steps));
  char km[32];
  std::snprintf(km, sizeof km, " (%u.%02u km)", (s.distance_mm + 5000) / 10000 / 100,
                (s.distance_mm + 5000) / 10000 % 100);
  p.field(c.offset(o::kDistance), c.span(o::kDistance, 4), "overall.distance_mm",
          std::to_string(s.distance_mm) + km);
  p.field(c.offset(o::kElevation), c.span(o::kElevation, 2), "overall.elevation",
          std::to_string(s.elevation));
  p.field(c.offset(o::kFloors), c.span(o::kFloors, 2), "overall.floors", std::to_string(s.floors));
  p.field(c.offset(o::kActiveMinutes), c.span(o::kActiveMinutes, 2), "overall.active_minutes",
          std::to_string(s.active_minutes));
}

void print_alarms(Printer& p, const MappedContent& c) {
  const auto alarms = decode_alarm_content(c.bytes);
  for (std::size_t i = 0; i < alarms.entries.size(); ++i) {
    const std::size_t at = i * kAlarmEntrySize;
    const std::string prefix = "alarm[" + std::to_string(i) + "].";
    p.field(c.offset(at), c.span(at, 4), prefix + "timestamp",
            timestamp_value(alarms.entries[i].timestamp));
    char mask[8];
    std::snprintf(mask, sizeof mask, "0x%02X", alarms.entries[i].repeat_mask);
    p.field(c.offset(at + 4), 1, prefix + "repeat_mask", mask);
  }
}

void print_sections(Printer& p, ByteView wire, std::size_t begin, std::size_t end) {
  static const char* const kNames[] = {"daily", "per_minute", "overall", "alarms"};
  static const SectionPrinter kPrinters[] = {print_daily, print_per_minute, print_overall,
                                             print_alarms};
  std::size_t pos = begin;
  for (int s = 0; s < 4; ++s) {
    if (end - pos < kSectionStart.size() ||
        !std::equal(kSectionStart.begin(), kSectionStart.end(), wire.begin() + pos)) {
      break;
    }
    std::size_t term = pos + kSectionStart.size();
    while (term < end && wire[term] != kSlipEnd) ++term;
    if (term == end) break;

    p.field(pos, kSectionStart.size(), std::string(kNames[s]) + ".start", "section start");
    MappedContent content;
    const std::size_t content_begin = pos + kSectionStart.size();
    bool printed = false;
    if (map_content(wire, content_begin, term, content)) {
      try {
        kPrinters[s](p, content);
        printed = true;
      } catch (const Error&) {
      }
    }
    // Each printer decodes before emitting anything.
    if (!printed) p.unknown(content_begin, term - content_begin);
    p.field(term, 1, std::string(kNames[s]) + ".end", "section terminator");
    pos = term + 1;
  }
  if (pos < end) p.unknown(pos, end - pos);
}

std::string dissect_frame(ByteView wire) {
  const FrameHeader h = decode_header(wire);
  const std::size_t trailer = kFooterSize + (h.authenticated ? kTagSize : 0);
  if (wire.size() < kHeaderSize + trailer) throw Error(Errc::TruncatedFrame, "short");
  const std::size_t footer_at = wire.size() - trailer;
  const std::uint32_t payload_len = get_u32_le(wire, footer_at + 2);
  if (payload_len != footer_at - kHeaderSize) throw Error(Errc::TruncatedFrame, "length");

  Printer p(wire);
  p.field(0, 6, "header.device_id", h.device_id.to_string());
  p.field(6, 2, "header.firmware_version",
          std::to_string(h.firmware_version / 100) + "." +
              (h.firmware_version % 100 < 10 ? "0" : "") + std::to_string(h.firmware_version % 100));
  std::string flags = h.encrypted ? "encrypted" : "plaintext";
  if (h.authenticated) flags += ",authenticated";
  p.field(8, 1, "header.flags", flags);
  p.field(9, 4, "header.sequence", std::to_string(h.sequence));
  p.field(13, 3, "header.reserved", "-");

  const ByteView body = wire.subspan(kHeaderSize, payload_len);
  if (h.encrypted) {
    p.unknown(kHeaderSize, payload_len);
  } else if (payload_len == 2 && (body[0] != kSectionStart[0])) {
    p.field(kHeaderSize, 1, "microdump.status", std::to_string(body[0]));
    p.field(kHeaderSize + 1, 1, "microdump.battery_pct", std::to_string(body[1]));
  } else {
    print_sections(p, wire, kHeaderSize, footer_at);
  }

  const std::uint16_t crc = get_u16_le(wire, footer_at);
  const std::uint16_t computed = crc_ccitt(body);
  p.field(footer_at, 2, "footer.crc",
          hex16(crc) + (crc == computed ? " (ok)" : " (mismatch, computed " + hex16(computed) + ")"));
  p.field(footer_at + 2, 4, "footer.payload_len", std::to_string(payload_len));
  if (h.authenticated) p.field(footer_at + kFooterSize, kTagSize, "tag", "authentication tag");
  return p.str();
}

}  // namespace

std::string render_dissection(ByteView wire) {
  try {
    return dissect_frame(wire);
  } catch (const Error&) {
    Printer p(wire);
    p.unknown(0, wire.size());
    return p.str();
  }
}

}  // namespace trackersync
