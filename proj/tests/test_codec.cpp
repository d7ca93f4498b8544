#include <doctest.h>

#include <fstream>
#include <iterator>

#include "calendar.hpp"
#include "error.hpp"
#include "frame_codec.hpp"
#include "oracles.hpp"

using namespace trackersync;

namespace {

Bytes read_fixture(const std::string& name) {
  std::ifstream in(std::string(TS_FIXTURE_DIR) + "/" + name, std::ios::binary);
  REQUIRE(in.good());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string read_text(const std::string& name) {
  const Bytes b = read_fixture(name);
  return std::string(b.begin(), b.end());
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Ok;
}

const TrackerId kTracker = TrackerId::parse("0A0B0C0D0E0F");

Megadump table_summary_dump() {
  Megadump m;
  m.header.device_id = kTracker;
  m.header.firmware_version = 781;
  m.header.sequence = 1;
  m.overall.timestamp = 1484478000;
  m.overall.calories = 100;
  m.overall.steps = 10000;
  m.overall.distance_mm = 10'000'000;
  return m;
}

}  // namespace

TEST_CASE("escape maps the two reserved bytes") {
  CHECK(escape_section(Bytes{0x01, 0x02, 0x03}) == Bytes{0x01, 0x02, 0x03});
  CHECK(escape_section(Bytes{0xC0}) == Bytes{0xDB, 0xDC});
  CHECK(escape_section(Bytes{0xDB, 0xC0, 0xDB}) == Bytes{0xDB, 0xDD, 0xDB, 0xDC, 0xDB, 0xDD});
  CHECK(escape_section(Bytes{}).empty());
}

TEST_CASE("unescape inverts and rejects stray escapes") {
  CHECK(unescape_section(Bytes{0xDB, 0xDC}) == Bytes{0xC0});
  CHECK(unescape_section(Bytes{0x01, 0x02}) == Bytes{0x01, 0x02});
  CHECK(unescape_section(Bytes{0xDB, 0xDD}) == Bytes{0xDB});
  CHECK(code_of([] { unescape_section(Bytes{0xDB, 0x00}); }) == Errc::MalformedEscape);
  CHECK(code_of([] { unescape_section(Bytes{0x01, 0xDB}); }) == Errc::MalformedEscape);
}

TEST_CASE("crc_ccitt known values") {
  const std::string check = "123456789";
  const Bytes digits(check.begin(), check.end());
  CHECK(crc_ccitt(Bytes{}) == 0xFFFF);
  CHECK(crc_ccitt(digits) == 0x29B1);
  CHECK(oracle::crc16_bitwise(digits) == 0x29B1);
  CHECK(crc_ccitt(Bytes{0x00}) == oracle::crc16_bitwise({0x00}));
  CHECK(crc_ccitt(Bytes{0x00}) == 0xE1F0);
}

TEST_CASE("tracker id renders as uppercase hex") {
  CHECK(kTracker.to_string() == "0A0B0C0D0E0F");
  CHECK(TrackerId::parse("0a0b0c0d0e0f") == kTracker);
  CHECK(code_of([] { TrackerId::parse("0A0B0C"); }) == Errc::InvalidArgument);
  CHECK(code_of([] { TrackerId::parse("0A0B0C0D0E0G"); }) == Errc::BadHex);
}

TEST_CASE("header layout") {
  FrameHeader h;
  h.device_id = kTracker;
  h.firmware_version = 781;
  h.encrypted = true;
  h.sequence = 0x01020304;
  const Bytes wire = encode_header(h);
  CHECK(wire == from_hex("0A0B0C0D0E0F" "0D03" "01" "04030201" "000000"));
  CHECK(decode_header(wire) == h);
}

TEST_CASE("overall summary bytes match the published fabrication table") {
  const Bytes content = encode_overall_content(table_summary_dump().overall);
  REQUIRE(content.size() == kOverallSummarySize);
  const Bytes span(content.begin(), content.begin() + 16);
  CHECK(span == from_hex("30567B58640010270000809698000000"));
  CHECK(utc_date(get_u32_le(content, 0)) == "2017-01-15");
}

TEST_CASE("summary-only frame matches the hex fixture") {
  const Bytes fixture = parse_hex_dump(read_text("summary_only.hex"));
  CHECK(encode_megadump(table_summary_dump()) == fixture);
  const Megadump m = decode_megadump(fixture);
  CHECK(m.daily.empty());
  CHECK(m.per_minute.slots.empty());
  CHECK(m.alarms.entries.empty());
  CHECK(m.overall.steps == 10000);
  CHECK(m.footer.crc == 0x2B3B);
  CHECK(m.footer.payload_len == 40);
}

TEST_CASE("empty sections encode as bare delimiters") {
  const Bytes body = encode_megadump_body(table_summary_dump());
  const Bytes empty = from_hex("C0CDDBDCC0");
  CHECK(Bytes(body.begin(), body.begin() + 5) == empty);
  CHECK(Bytes(body.end() - 5, body.end()) == empty);
}

TEST_CASE("per-minute base time is big-endian") {
  PerMinuteSummary pm;
  pm.base_time = 1484478000;
  pm.slots = {3, 4};
  const Bytes c = encode_per_minute_content(pm);
  CHECK(Bytes(c.begin(), c.begin() + 4) == from_hex("587B5630"));
  // non-final record ends in FF, the final one borrows the terminator
  CHECK(c == from_hex("587B5630" "02" "000300FF" "000400"));
  CHECK(decode_per_minute_content(c) == pm);
  CHECK(pm.slot_start(1) == 1484478000u + 120u);
}

TEST_CASE("activity fixture decodes field by field") {
  const Bytes wire = read_fixture("activity.bin");
  const Megadump m = decode_megadump(wire);
  CHECK(m.header.sequence == 7);
  REQUIRE(m.daily.size() == 2);
  CHECK(m.daily[0] == DailyRecord{1484352000, 0xC0, 146304, 7});
  CHECK(m.daily[1] == DailyRecord{1484438400, 5083, 0xDB00C0, 203});
  CHECK(m.per_minute.base_time == 1484474400);
  CHECK(m.per_minute.slots == std::vector<std::uint8_t>{10, 0xC0, 0xDB, 5});
  CHECK(m.overall.distance_mm == 522720);
  CHECK(m.overall.elevation == 3);
  CHECK(m.overall.floors == 1);
  CHECK(m.overall.active_minutes == 8);
  REQUIRE(m.alarms.entries.size() == 1);
  CHECK(m.alarms.entries[0] == AlarmEntry{1484550000, 0x7F});
  CHECK(encode_megadump(m) == wire);
}

TEST_CASE("distance bytes E0 F9 07 00 decode to 522720 mm") {
  Megadump m = table_summary_dump();
  m.overall.distance_mm = 522720;
  const Bytes wire = encode_megadump(m);
  const Bytes content = encode_overall_content(m.overall);
  CHECK(Bytes(content.begin() + 10, content.begin() + 14) == from_hex("E0F90700"));
  CHECK(decode_megadump(wire).overall.distance_mm == 522720);
}

TEST_CASE("zeroed footer crc reports the correct value") {
  Bytes wire = encode_megadump(table_summary_dump());
  const std::size_t at = wire.size() - kFooterSize;
  const Bytes body(wire.begin() + kHeaderSize, wire.begin() + static_cast<long>(at));
  wire[at] = wire[at + 1] = 0;
  try {
    decode_megadump(wire);
    FAIL("expected BadCrc");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadCrc);
    REQUIRE(e.crc().has_value());
    CHECK(e.crc()->expected == oracle::crc16_bitwise(body));
    CHECK(e.crc()->found == 0);
  }
}

TEST_CASE("decoder fails closed on layout problems") {
  Megadump m = table_summary_dump();
  FrameHeader h = m.header;

  SUBCASE("three sections") {
    Bytes body = encode_megadump_body(m);
    body.resize(body.size() - 5);
    CHECK(code_of([&] { decode_megadump(assemble_frame(h, body)); }) == Errc::UnknownSectionLayout);
  }
  SUBCASE("five sections") {
    Bytes body = encode_megadump_body(m);
    const Bytes extra = from_hex("C0CDDBDCC0");
    body.insert(body.end(), extra.begin(), extra.end());
    CHECK(code_of([&] { decode_megadump(assemble_frame(h, body)); }) == Errc::UnknownSectionLayout);
  }
  SUBCASE("bad escape inside a section") {
    Bytes body = from_hex("C0CDDBDCDB00C0");
    CHECK(code_of([&] { decode_megadump(assemble_frame(h, body)); }) == Errc::MalformedEscape);
  }
  SUBCASE("payload length disagrees") {
    Bytes wire = encode_megadump(m);
    wire.pop_back();
    CHECK(code_of([&] { decode_megadump(wire); }) == Errc::TruncatedFrame);
  }
  SUBCASE("header only") {
    const Bytes wire = encode_header(h);
    CHECK(code_of([&] { decode_megadump(wire); }) == Errc::TruncatedFrame);
  }
  SUBCASE("encrypted flag needs a key") {
    FrameHeader enc = h;
    enc.encrypted = true;
    const Bytes wire = assemble_frame(enc, encode_megadump_body(m));
    CHECK(code_of([&] { decode_megadump(wire); }) == Errc::EncryptedFrame);
    CHECK(decode_header(wire).device_id == kTracker);
  }
}

TEST_CASE("encoder rejects out-of-order daily records and oversize bodies") {
  Megadump m = table_summary_dump();
  m.daily = {{200, 1, 1, 1}, {100, 1, 1, 1}};
  CHECK(code_of([&] { encode_megadump(m); }) == Errc::SectionOrderViolation);
  m.daily.clear();
  m.per_minute.base_time = 1;
  m.per_minute.slots.assign(20000, 1);
  CHECK(code_of([&] { encode_megadump(m); }) == Errc::OversizePayload);
}

TEST_CASE("microdump round trip and errors") {
  const Bytes fixture = read_fixture("microdump.bin");
  const Microdump md = decode_microdump(fixture);
  CHECK(md.header.device_id.to_string() == "0A0B0C0D0E0F");
  CHECK(md.header.sequence == 3);
  CHECK(md.battery_pct == 87);
  CHECK(encode_microdump(md) == fixture);

  const Bytes header_only(fixture.begin(), fixture.begin() + kHeaderSize);
  CHECK(code_of([&] { decode_microdump(header_only); }) == Errc::TruncatedFrame);
  Bytes bad = fixture;
  bad[kHeaderSize + 1] ^= 0xFF;
  CHECK(code_of([&] { decode_microdump(bad); }) == Errc::BadCrc);
}

TEST_CASE("dissection of the fabrication table") {
  const std::string text = render_dissection(encode_megadump(table_summary_dump()));
  CHECK(text.find("overall.steps: 10000") != std::string::npos);
  CHECK(text.find("2017-01-15") != std::string::npos);
  CHECK(text.find("overall.distance_mm: 10000000 (10.00 km)") != std::string::npos);
  CHECK(text.find("footer.crc: 2B3B (ok)") != std::string::npos);
  CHECK(text.find("UNKNOWN") == std::string::npos);
}

TEST_CASE("dissection degrades to a hex dump") {
  const Bytes garbage = from_hex("DEADBEEF0102030405060708090A0B0C0D0E0F1011");
  const std::string text = render_dissection(garbage);
  CHECK(text.find("UNKNOWN") != std::string::npos);
  CHECK(text.find("header.") == std::string::npos);
  CHECK(text.find("overall.") == std::string::npos);
  CHECK(render_dissection(Bytes{}).empty());
}

TEST_CASE("dissection flags a bad crc but still annotates fields") {
  Bytes wire = encode_megadump(table_summary_dump());
  wire[wire.size() - kFooterSize] ^= 0x01;
  const std::string text = render_dissection(wire);
  CHECK(text.find("mismatch, computed 2B3B") != std::string::npos);
  CHECK(text.find("overall.steps: 10000") != std::string::npos);
}

TEST_CASE("hex dump parsing") {
  CHECK(parse_hex_dump("0000: 0A 0B\n0002: 0C # note\n") == Bytes{0x0A, 0x0B, 0x0C});
  CHECK(parse_hex_dump("c0 cd db dc") == from_hex("C0CDDBDC"));
  CHECK(code_of([] { parse_hex_dump("0A ZZ"); }) == Errc::BadHex);
}
