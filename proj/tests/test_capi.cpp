// Exercises the shared library through its C header only.

#include <doctest.h>

#include <cstring>
#include <string>

#include <json.hpp>

#include "trackersync/trackersync.h"

namespace {

constexpr const char* kVictim = "0A0B0C0D0E0F";
constexpr const char* kKey = "00112233445566778899AABBCCDDEEFF";

std::string take(char* s) {
  std::string out = s ? s : "";
  ts_string_free(s);
  return out;
}

struct Server {
  explicit Server(const nlohmann::json& cfg) {
    REQUIRE(ts_server_start(cfg.dump().c_str(), &handle) == TS_OK);
  }
  ~Server() { ts_server_free(handle); }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(ts_server_port(handle)); }
  ts_server* handle = nullptr;
};

nlohmann::json config(const char* mode) {
  return {{"mode", mode},
          {"port", 0},
          {"clock", "fixed:1484478000"},
          {"accounts", {{{"user", "victim"}, {"tracker", kVictim}, {"key", kKey}}}}};
}

nlohmann::json scenario(const char* name, const char* expect) {
  return {{"scenario", name}, {"tracker", kVictim}, {"user", "victim"}, {"key", kKey}, {"expect", expect}};
}

int run(const std::string& url, const nlohmann::json& req, nlohmann::json* report = nullptr) {
  char* text = nullptr;
  int code = -1;
  REQUIRE(ts_scenario_run(url.c_str(), req.dump().c_str(), &text, &code) == TS_OK);
  const std::string body = take(text);
  if (report) *report = nlohmann::json::parse(body);
  return code;
}

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::strcmp(ts_status_string(TS_OK), "Ok") == 0);
  CHECK(std::strcmp(ts_status_string(TS_DEBUG_DISABLED), "DebugDisabled") == 0);
  CHECK(std::string(ts_version()).size() > 0);
}

TEST_CASE("codec functions") {
  const uint8_t raw[] = {0x01, 0xC0, 0xDB, 0x02};
  ts_buffer esc{nullptr, 0};
  REQUIRE(ts_escape(raw, sizeof raw, &esc) == TS_OK);
  CHECK(esc.len == 6);
  ts_buffer back{nullptr, 0};
  REQUIRE(ts_unescape(esc.data, esc.len, &back) == TS_OK);
  CHECK(back.len == sizeof raw);
  CHECK(std::memcmp(back.data, raw, sizeof raw) == 0);
  ts_buffer_free(&esc);
  ts_buffer_free(&back);
  CHECK(esc.data == nullptr);

  const uint8_t dangling[] = {0xDB};
  ts_buffer out{nullptr, 0};
  CHECK(ts_unescape(dangling, 1, &out) == TS_MALFORMED_ESCAPE);
  CHECK(std::strlen(ts_last_error_message()) > 0);

  const char* check = "123456789";
  CHECK(ts_crc_ccitt(reinterpret_cast<const uint8_t*>(check), 9) == 0x29B1);
  CHECK(ts_escape(nullptr, 3, &out) == TS_INVALID_ARGUMENT);
}

TEST_CASE("crypto functions") {
  uint8_t key[16] = {};
  uint8_t block[8] = {};
  uint8_t out[8];
  REQUIRE(ts_xtea_encrypt_block(key, block, out) == TS_OK);
  const uint8_t expected[8] = {0xDE, 0xE9, 0xD4, 0xD8, 0xF7, 0x13, 0x1E, 0xD9};
  CHECK(std::memcmp(out, expected, 8) == 0);
  uint8_t plain[8];
  REQUIRE(ts_xtea_decrypt_block(key, out, plain) == TS_OK);
  CHECK(std::memcmp(plain, block, 8) == 0);

  uint8_t sub[16];
  CHECK(ts_derive_subkey(key, "SIGN0001", sub) == TS_OK);
  CHECK(ts_derive_subkey(key, "NOPE0001", sub) == TS_BAD_LABEL);
  uint8_t tag[8];
  CHECK(ts_mac(sub, nullptr, 0, tag) == TS_OK);
}

TEST_CASE("tracker handle") {
  ts_tracker* t = nullptr;
  CHECK(ts_tracker_new("XYZ", kKey, 0, &t) == TS_INVALID_ARGUMENT);
  CHECK(ts_tracker_new("0A0B0C0D0E0G", kKey, 0, &t) == TS_BAD_HEX);
  REQUIRE(ts_tracker_new(kVictim, kKey, 0, &t) == TS_OK);
  CHECK(ts_tracker_record_steps(t, 1484478000, 410) == TS_OK);
  CHECK(ts_tracker_record_steps(t, 1484477999, 1) == TS_CLOCK_REGRESSION);

  const uint8_t injected[4] = {0xFF, 0xFF, 0xFF, 0x00};
  CHECK(ts_tracker_debug_write(t, 0x0106, injected, 4) == TS_OK);
  ts_buffer frame{nullptr, 0};
  REQUIRE(ts_tracker_generate_megadump(t, &frame) == TS_OK);
  char* text = nullptr;
  REQUIRE(ts_dissect(frame.data, frame.len, &text) == TS_OK);
  CHECK(take(text).find("16777215") != std::string::npos);
  ts_buffer_free(&frame);

  ts_buffer key{nullptr, 0};
  REQUIRE(ts_tracker_debug_read(t, 0x0030, 16, &key) == TS_OK);
  CHECK(key.len == 16);
  ts_buffer_free(&key);

  CHECK(ts_tracker_set_protection(t, 2) == TS_OK);
  CHECK(ts_tracker_debug_read(t, 0x0030, 16, &key) == TS_DEBUG_DISABLED);
  CHECK(ts_tracker_debug_write(t, 0x0106, injected, 4) == TS_DEBUG_DISABLED);
  CHECK(ts_tracker_set_protection(t, 0) == TS_INVALID_ARGUMENT);
  CHECK(ts_tracker_set_protection(t, 7) == TS_INVALID_ARGUMENT);
  ts_tracker_free(t);
  ts_tracker_free(nullptr);
}

TEST_CASE("eeprom files through the api") {
  ts_tracker* t = nullptr;
  REQUIRE(ts_tracker_new(kVictim, kKey, 1, &t) == TS_OK);
  const std::string path = "ts_capi_eeprom.bin";
  REQUIRE(ts_tracker_save(t, path.c_str()) == TS_OK);
  ts_tracker_free(t);
  ts_tracker* loaded = nullptr;
  REQUIRE(ts_tracker_load(path.c_str(), &loaded) == TS_OK);
  ts_buffer flag{nullptr, 0};
  REQUIRE(ts_tracker_debug_read(loaded, 0x0046, 1, &flag) == TS_OK);
  CHECK(flag.data[0] == 0x01);
  ts_buffer_free(&flag);
  ts_tracker_free(loaded);
  std::remove(path.c_str());
  CHECK(ts_tracker_load("/no/such/file", &loaded) == TS_IO);
}

TEST_CASE("server config errors") {
  ts_server* s = nullptr;
  CHECK(ts_server_start("{", &s) == TS_INVALID_ARGUMENT);
  CHECK(ts_server_start(R"({"mode":"sideways"})", &s) == TS_INVALID_ARGUMENT);
  CHECK(ts_server_start(R"({"error_threshold":0})", &s) == TS_INVALID_ARGUMENT);
  CHECK(ts_server_start(R"({"clock":"sundial"})", &s) == TS_INVALID_ARGUMENT);
  CHECK(s == nullptr);
}

TEST_CASE("scenarios against a served instance") {
  Server vulnerable(config("vulnerable"));
  nlohmann::json report;
  CHECK(run(vulnerable.url(), scenario("fabricate", "pass"), &report) == 0);
  CHECK(report["after"]["distance_km"] == "10.00");

  Server hardened(config("hardened"));
  CHECK(run(hardened.url(), scenario("fabricate", "blocked"), &report) == 0);
  CHECK(report["outcome"] == "BLOCKED");
  CHECK(run(hardened.url(), scenario("fabricate", "pass")) == 1);
  CHECK(run("http://127.0.0.1:1", scenario("fabricate", "pass")) == 2);

  char* text = nullptr;
  int code = 0;
  CHECK(ts_scenario_run(vulnerable.url().c_str(), "{}", &text, &code) == TS_INVALID_ARGUMENT);
}

TEST_CASE("fixed clock drives lockout expiry") {
  Server s(config("vulnerable"));
  nlohmann::json req = scenario("crc-oracle", "pass");
  req["probe_lockout"] = true;
  nlohmann::json report;
  CHECK(run(s.url(), req, &report) == 0);
  CHECK(report["details"]["lockout_probe"]["locked_out"] == true);
  CHECK(run(s.url(), scenario("honest-sync", "pass")) == 1);
  CHECK(ts_server_advance_clock(s.handle, 3600) == TS_OK);
  CHECK(run(s.url(), scenario("honest-sync", "pass")) == 0);
}

TEST_CASE("proxy forwards and rewrites") {
  nlohmann::json cfg = config("vulnerable");
  cfg["accounts"][0].erase("key");
  Server upstream(cfg);
  ts_server* proxy = nullptr;
  CHECK(ts_proxy_start(upstream.url().c_str(), 0, "bogus", &proxy) == TS_INVALID_ARGUMENT);
  REQUIRE(ts_proxy_start(upstream.url().c_str(), 0, "double-steps", &proxy) == TS_OK);
  const std::string via = "http://127.0.0.1:" + std::to_string(ts_server_port(proxy));

  nlohmann::json req = scenario("honest-sync", "pass");
  req.erase("key");
  nlohmann::json report;
  // The rewritten digest no longer matches what the tracker sent.
  CHECK(run(via, req, &report) == 1);
  CHECK(report["after"]["steps"] == 600);
  CHECK(ts_server_advance_clock(proxy, 1) == TS_INVALID_ARGUMENT);
  ts_server_free(proxy);
}
