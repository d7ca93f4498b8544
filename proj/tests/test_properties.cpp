#include <doctest.h>

#include <random>

#include "calendar.hpp"
#include "crypto.hpp"
#include "error.hpp"
#include "oracles.hpp"
#include "secure_frame.hpp"
#include "tracker.hpp"

using namespace trackersync;

namespace {

// Biased towards the framing bytes so escaping gets exercised.
std::uint8_t spicy_byte(std::mt19937_64& rng) {
  static constexpr std::uint8_t special[] = {0xC0, 0xDB, 0xDC, 0xDD, 0x00, 0xFF};
  return rng() % 3 == 0 ? special[rng() % 6] : static_cast<std::uint8_t>(rng());
}

std::uint32_t spicy_u32(std::mt19937_64& rng) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | spicy_byte(rng);
  return v;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len) {
  Bytes b(rng() % (max_len + 1));
  for (auto& x : b) x = spicy_byte(rng);
  return b;
}

Megadump random_megadump(std::mt19937_64& rng) {
  Megadump m;
  Bytes id(6);
  for (auto& b : id) b = spicy_byte(rng);
  m.header.device_id = TrackerId::from_bytes(id);
  m.header.firmware_version = static_cast<std::uint16_t>(spicy_u32(rng));
  m.header.sequence = spicy_u32(rng);
  // Daily timestamps must strictly increase.
  std::uint32_t day = spicy_u32(rng) % 0x80000000u;
  for (std::size_t i = rng() % 5; i > 0; --i) {
    day += 1 + spicy_u32(rng) % 0x01000000u;
    m.daily.push_back({day, spicy_u32(rng), spicy_u32(rng), static_cast<std::uint16_t>(spicy_u32(rng))});
  }
  if (rng() % 4 != 0) {
    m.per_minute.base_time = spicy_u32(rng);
    m.per_minute.period_code = static_cast<std::uint8_t>(1 + rng() % 15);
    for (std::size_t i = rng() % 40; i > 0; --i) m.per_minute.slots.push_back(spicy_byte(rng));
  }
  auto& o = m.overall;
  o.timestamp = spicy_u32(rng);
  o.calories = static_cast<std::uint16_t>(spicy_u32(rng));
  o.steps = spicy_u32(rng);
  o.distance_mm = spicy_u32(rng);
  o.elevation = static_cast<std::uint16_t>(spicy_u32(rng));
  o.floors = static_cast<std::uint16_t>(spicy_u32(rng));
  o.active_minutes = static_cast<std::uint16_t>(spicy_u32(rng));
  for (std::size_t i = rng() % 4; i > 0; --i) m.alarms.entries.push_back({spicy_u32(rng), spicy_byte(rng)});
  return m;
}

DeviceKey random_key(std::mt19937_64& rng) {
  Bytes k(16);
  for (auto& b : k) b = static_cast<std::uint8_t>(rng());
  return DeviceKey::from_bytes(k);
}

Block random_block(std::mt19937_64& rng) {
  Block b{};
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

}  // namespace

TEST_CASE("megadump round trip on 1000 random frames") {
  std::mt19937_64 rng(1001);
  int with_special = 0;
  for (int i = 0; i < 1000; ++i) {
    const Megadump m = random_megadump(rng);
    const Bytes wire = encode_megadump(m);
    const Bytes body(wire.begin() + kHeaderSize, wire.end() - kFooterSize);
    const Bytes raw_body = encode_megadump_body(m);
    if (std::count(raw_body.begin(), raw_body.end(), std::uint8_t{0xDB}) > 4) ++with_special;
    const Megadump back = decode_megadump(wire);
    REQUIRE(back.same_content(m));
    CHECK(back.footer.crc == oracle::crc16_bitwise(body));
    CHECK(back.footer.payload_len == body.size());
  }
  // Most frames carried escaped bytes in their content.
  CHECK(with_special > 500);
}

TEST_CASE("escape and unescape are inverse on 10000 random strings") {
  std::mt19937_64 rng(10000);
  for (int i = 0; i < 10000; ++i) {
    const Bytes raw = random_bytes(rng, 64);
    const Bytes esc = escape_section(raw);
    REQUIRE(std::find(esc.begin(), esc.end(), kSlipEnd) == esc.end());
    REQUIRE(unescape_section(esc) == raw);
  }
}

TEST_CASE("crc agrees with the bitwise oracle") {
  const std::string check = "123456789";
  CHECK(crc_ccitt(Bytes(check.begin(), check.end())) == 0x29B1);
  CHECK(oracle::crc16_bitwise(Bytes(check.begin(), check.end())) == 0x29B1);
  std::mt19937_64 rng(1000);
  for (int i = 0; i < 1000; ++i) {
    const Bytes data = random_bytes(rng, 300);
    REQUIRE(crc_ccitt(data) == oracle::crc16_bitwise(data));
  }
}

TEST_CASE("xtea decrypt inverts encrypt on 1000 random blocks") {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 1000; ++i) {
    const DeviceKey k = random_key(rng);
    const Block p = random_block(rng);
    REQUIRE(xtea_decrypt_block(k, xtea_encrypt_block(k, p)) == p);
  }
}

TEST_CASE("xtea matches the reference routine on 100 random pairs") {
  std::mt19937_64 rng(100);
  for (int i = 0; i < 100; ++i) {
    const DeviceKey k = random_key(rng);
    const Block p = random_block(rng);
    const Block c = xtea_encrypt_block(k, p);
    REQUIRE(Bytes(c.begin(), c.end()) ==
            oracle::xtea_block(Bytes(k.bytes().begin(), k.bytes().end()), Bytes(p.begin(), p.end())));
  }
}

TEST_CASE("ctr is its own inverse") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    const DeviceKey k = random_key(rng);
    const Nonce n = nonce_for_sequence(static_cast<std::uint32_t>(rng()));
    const Bytes p = random_bytes(rng, 100);
    REQUIRE(xtea_ctr(k, n, xtea_ctr(k, n, p)) == p);
  }
}

TEST_CASE("random tags and tampered frames never verify") {
  std::mt19937_64 rng(31337);
  const DeviceKey key = random_key(rng);
  Megadump m = random_megadump(rng);
  const Bytes wire = seal_frame(m.header, encode_megadump_body(m), key);
  REQUIRE(verify_frame_tag(wire, key));
  for (int i = 0; i < 1000; ++i) {
    Bytes forged = wire;
    if (i % 2 == 0) {
      for (std::size_t j = forged.size() - kTagSize; j < forged.size(); ++j) forged[j] = static_cast<std::uint8_t>(rng());
    } else {
      forged[rng() % (forged.size() - kTagSize)] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    }
    REQUIRE_FALSE(verify_frame_tag(forged, key));
  }
}

TEST_CASE("protection level only rises") {
  const TrackerId id = TrackerId::parse("0A0B0C0D0E0F");
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    Tracker t(id, DeviceKey{}, false);
    int level = 0;
    for (int step = 0; step < 6; ++step) {
      const int want = static_cast<int>(rng() % 3);
      try {
        t.set_protection_level(static_cast<ProtectionLevel>(want));
        REQUIRE(want >= level);
        level = want;
      } catch (const Error& e) {
        REQUIRE(e.code() == Errc::InvalidArgument);
        REQUIRE(want < level);
      }
      REQUIRE(static_cast<int>(t.eeprom().protection()) == level);
    }
  }
}

TEST_CASE("overall record in EEPROM is what goes on the wire") {
  std::mt19937_64 rng(55);
  for (int i = 0; i < 200; ++i) {
    Tracker t(TrackerId::parse("0A0B0C0D0E0F"), random_key(rng), rng() % 2 == 0);
    Bytes record(kOverallSummarySize);
    for (auto& b : record) b = spicy_byte(rng);
    t.debug_write(eeprom_map::kOverall, record);
    const Bytes wire = t.generate_megadump();
    const DeviceKey key = DeviceKey::from_bytes(t.debug_read(eeprom_map::kDeviceKey, 16));
    const Megadump m = t.encryption_enabled() ? decode_megadump_with_key(wire, key) : decode_megadump(wire);
    REQUIRE(encode_overall_content(m.overall) == record);
  }
}

TEST_CASE("calendar agrees with the day-counting oracle") {
  CHECK(oracle::unix_time(2017, 1, 15, 11) == 1484478000);
  CHECK(utc_date(1484478000) == "2017-01-15");
  CHECK(utc_date_time(1484478000) == "2017-01-15 11:00:00");
  CHECK(parse_utc_date("2017-01-15") == oracle::unix_time(2017, 1, 15));
  std::mt19937_64 rng(2017);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t t = static_cast<std::int64_t>(rng() % 0x100000000ull);
    REQUIRE(utc_date(t) == oracle::date_of(t));
    REQUIRE(utc_day_start(t) == parse_utc_date(oracle::date_of(t)));
  }
  for (int y : {1970, 2000, 2016, 2017, 2100}) {
    for (int m = 1; m <= 12; ++m) {
      for (int d : {1, oracle::days_in_month(y, m)}) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
        REQUIRE(parse_utc_date(buf) == oracle::unix_time(y, m, d));
      }
    }
  }
  CHECK_THROWS_AS(parse_utc_date("2017-02-29"), Error);
  CHECK_NOTHROW(parse_utc_date("2016-02-29"));
}
