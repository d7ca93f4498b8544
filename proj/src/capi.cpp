#include "trackersync/trackersync.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "error.hpp"
#include "http.hpp"
#include "scenarios.hpp"
#include "secure_frame.hpp"
#include "server.hpp"
#include "tracker.hpp"

using namespace trackersync;

struct ts_tracker {
  Tracker tracker;
};

struct ts_server {
  std::optional<ManualClock> clock;
  std::unique_ptr<SyncService> service;
  std::unique_ptr<HttpTransport> upstream;
  std::unique_ptr<MitmTransport> mitm;
  std::unique_ptr<HttpServer> http;
};

namespace {

thread_local std::string g_last_error;

ts_status fail(ts_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
ts_status guard(F&& body) {
  try {
    g_last_error.clear();
    body();
    return TS_OK;
  } catch (const Error& e) {
    return fail(static_cast<ts_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TS_INTERNAL, e.what());
  }
}

void require(bool condition, const char* what) {
  if (!condition) throw Error(Errc::InvalidArgument, what);
}

void fill(ts_buffer* out, ByteView bytes) {
  out->data = nullptr;
  out->len = 0;
  if (bytes.empty()) return;
  out->data = static_cast<uint8_t*>(std::malloc(bytes.size()));
  if (!out->data) throw std::bad_alloc();
  std::memcpy(out->data, bytes.data(), bytes.size());
  out->len = bytes.size();
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

ByteView view(const uint8_t* data, size_t len) {
  if (len == 0) return {};
  require(data != nullptr, "null data pointer");
  return {data, len};
}

DeviceKey key_of(const uint8_t key[16]) {
  require(key != nullptr, "null key");
  return DeviceKey::from_bytes(ByteView(key, 16));
}

Block block_of(const uint8_t in[8]) {
  require(in != nullptr, "null block");
  Block b{};
  std::memcpy(b.data(), in, b.size());
  return b;
}

ServerConfig config_from_json(const nlohmann::json& j) {
  ServerConfig c;
  c.mode = parse_mode(j.value("mode", "vulnerable"));
  c.error_threshold = j.value("error_threshold", c.error_threshold);
  c.lockout_seconds = j.value("lockout_seconds", c.lockout_seconds);
  c.fraud.max_daily_steps = j.value("max_daily_steps", c.fraud.max_daily_steps);
  c.fraud.max_steps_per_minute = j.value("max_steps_per_minute", c.fraud.max_steps_per_minute);
  c.fraud.min_stride_m = j.value("min_stride_m", c.fraud.min_stride_m);
  c.fraud.max_stride_m = j.value("max_stride_m", c.fraud.max_stride_m);
  return c;
}

}  // namespace

extern "C" {

const char* ts_status_string(ts_status status) {
  if (status == TS_INTERNAL) return "Internal";
  return errc_name(static_cast<Errc>(status));
}

const char* ts_last_error_message(void) { return g_last_error.c_str(); }

const char* ts_version(void) { return "1.0.0"; }

void ts_buffer_free(ts_buffer* buffer) {
  if (!buffer) return;
  std::free(buffer->data);
  buffer->data = nullptr;
  buffer->len = 0;
}

void ts_string_free(char* str) { std::free(str); }

ts_status ts_escape(const uint8_t* data, size_t len, ts_buffer* out) {
  return guard([&] {
    require(out != nullptr, "null output");
    fill(out, escape_section(view(data, len)));
  });
}

ts_status ts_unescape(const uint8_t* data, size_t len, ts_buffer* out) {
  return guard([&] {
    require(out != nullptr, "null output");
    fill(out, unescape_section(view(data, len)));
  });
}

uint16_t ts_crc_ccitt(const uint8_t* data, size_t len) {
  if (len != 0 && data == nullptr) return 0;
  return crc_ccitt(len == 0 ? ByteView{} : ByteView(data, len));
}

ts_status ts_dissect(const uint8_t* frame, size_t len, char** out) {
  return guard([&] {
    require(out != nullptr, "null output");
    *out = dup_string(render_dissection(view(frame, len)));
  });
}

ts_status ts_parse_hex_dump(const char* text, ts_buffer* out) {
  return guard([&] {
    require(text != nullptr && out != nullptr, "null argument");
    fill(out, parse_hex_dump(text));
  });
}

ts_status ts_xtea_encrypt_block(const uint8_t key[16], const uint8_t in[8], uint8_t out[8]) {
  return guard([&] {
    require(out != nullptr, "null output");
    const Block b = xtea_encrypt_block(key_of(key), block_of(in));
    std::memcpy(out, b.data(), b.size());
  });
}

ts_status ts_xtea_decrypt_block(const uint8_t key[16], const uint8_t in[8], uint8_t out[8]) {
  return guard([&] {
    require(out != nullptr, "null output");
    const Block b = xtea_decrypt_block(key_of(key), block_of(in));
    std::memcpy(out, b.data(), b.size());
  });
}

ts_status ts_derive_subkey(const uint8_t key[16], const char* label, uint8_t out[16]) {
  return guard([&] {
    require(label != nullptr && out != nullptr, "null argument");
    const DeviceKey sub = derive_subkey(key_of(key), label);
    std::memcpy(out, sub.bytes().data(), DeviceKey::kSize);
  });
}

ts_status ts_mac(const uint8_t subkey[16], const uint8_t* message, size_t len, uint8_t tag[8]) {
  return guard([&] {
    require(tag != nullptr, "null output");
    const Tag t = mac(key_of(subkey), view(message, len));
    std::memcpy(tag, t.data(), t.size());
  });
}

ts_status ts_tracker_new(const char* serial_hex, const char* key_hex, int encrypted, ts_tracker** out) {
  return guard([&] {
    require(serial_hex != nullptr && key_hex != nullptr && out != nullptr, "null argument");
    *out = new ts_tracker{Tracker(TrackerId::parse(serial_hex), DeviceKey::from_hex(key_hex), encrypted != 0)};
  });
}

ts_status ts_tracker_load(const char* eeprom_path, ts_tracker** out) {
  return guard([&] {
    require(eeprom_path != nullptr && out != nullptr, "null argument");
    *out = new ts_tracker{Tracker(EepromImage::load(eeprom_path))};
  });
}

ts_status ts_tracker_save(const ts_tracker* tracker, const char* eeprom_path) {
  return guard([&] {
    require(tracker != nullptr && eeprom_path != nullptr, "null argument");
    tracker->tracker.eeprom().save(eeprom_path);
  });
}

void ts_tracker_free(ts_tracker* tracker) { delete tracker; }

ts_status ts_tracker_record_steps(ts_tracker* tracker, int64_t at, uint32_t steps) {
  return guard([&] {
    require(tracker != nullptr, "null tracker");
    tracker->tracker.record_steps(at, steps);
  });
}

ts_status ts_tracker_generate_megadump(ts_tracker* tracker, ts_buffer* out) {
  return guard([&] {
    require(tracker != nullptr && out != nullptr, "null argument");
    fill(out, tracker->tracker.generate_megadump());
  });
}

ts_status ts_tracker_debug_read(const ts_tracker* tracker, size_t addr, size_t len, ts_buffer* out) {
  return guard([&] {
    require(tracker != nullptr && out != nullptr, "null argument");
    fill(out, tracker->tracker.debug_read(addr, len));
  });
}

ts_status ts_tracker_debug_write(ts_tracker* tracker, size_t addr, const uint8_t* data, size_t len) {
  return guard([&] {
    require(tracker != nullptr, "null tracker");
    tracker->tracker.debug_write(addr, view(data, len));
  });
}

ts_status ts_tracker_set_protection(ts_tracker* tracker, int level) {
  return guard([&] {
    require(tracker != nullptr, "null tracker");
    require(level >= 0 && level <= 2, "protection level must be 0, 1 or 2");
    tracker->tracker.set_protection_level(static_cast<ProtectionLevel>(level));
  });
}

ts_status ts_server_start(const char* config_json, ts_server** out) {
  return guard([&] {
    require(out != nullptr, "null output");
    nlohmann::json j = nlohmann::json::object();
    try {
      if (config_json && *config_json) j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::InvalidArgument, std::string("bad server config: ") + e.what());
    }
    auto s = std::make_unique<ts_server>();
    try {
      const ServerConfig config = config_from_json(j);
      const std::string clock = j.value("clock", "system");
      Clock source = system_clock();
      if (clock.rfind("fixed:", 0) == 0) {
        s->clock.emplace(std::stoll(clock.substr(6)));
        source = *s->clock;
      } else if (clock != "system") {
        throw Error(Errc::InvalidArgument, "clock must be system or fixed:<seconds>");
      }
      std::optional<std::string> store;
      if (j.contains("store") && j.at("store").is_string()) store = j.at("store").get<std::string>();
      s->service = std::make_unique<SyncService>(config, source, store);

      for (const auto& a : j.value("accounts", nlohmann::json::array())) {
        const TrackerId id = TrackerId::parse(a.at("tracker").get<std::string>());
        if (!s->service->account_for_tracker(id)) {
          Account account;
          account.user_id = a.value("user", id.to_string());
          account.tracker_id = id;
          s->service->add_account(account);
        }
        if (a.contains("key") && a.at("key").is_string()) {
          s->service->set_device_key(id, DeviceKey::from_hex(a.at("key").get<std::string>()));
        }
      }
      if (j.contains("keystore") && j.at("keystore").is_string()) {
        for (const auto& [id, key] : load_keystore(j.at("keystore").get<std::string>())) {
          if (s->service->account_for_tracker(id)) s->service->set_device_key(id, key);
        }
      }
      SyncService& service = *s->service;
      s->http = std::make_unique<HttpServer>([&service](const HttpRequest& r) { return route(service, r); },
                                             j.value("port", 0));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::InvalidArgument, std::string("bad server config: ") + e.what());
    } catch (const std::invalid_argument&) {
      throw Error(Errc::InvalidArgument, "bad fixed clock value");
    }
    *out = s.release();
  });
}

ts_status ts_proxy_start(const char* upstream_url, int port, const char* hook, ts_server** out) {
  return guard([&] {
    require(upstream_url != nullptr && out != nullptr, "null argument");
    auto s = std::make_unique<ts_server>();
    s->upstream = std::make_unique<HttpTransport>(upstream_url);
    s->mitm = std::make_unique<MitmTransport>(*s->upstream, hook_by_name(hook ? hook : "identity"));
    MitmTransport& mitm = *s->mitm;
    s->http = std::make_unique<HttpServer>([&mitm](const HttpRequest& r) {
      try {
        return mitm.send(r);
      } catch (const std::exception& e) {
        return HttpReply{502, "text/plain", e.what()};
      }
    }, port);
    *out = s.release();
  });
}

int ts_server_port(const ts_server* server) { return server && server->http ? server->http->port() : -1; }

ts_status ts_server_advance_clock(ts_server* server, int64_t seconds) {
  return guard([&] {
    require(server != nullptr, "null server");
    require(server->clock.has_value(), "server clock is not fixed");
    server->clock->advance(seconds);
  });
}

void ts_server_wait(ts_server* server) {
  if (server && server->http) server->http->wait();
}

void ts_server_stop(ts_server* server) {
  if (server && server->http) server->http->stop();
}

void ts_server_free(ts_server* server) {
  if (!server) return;
  ts_server_stop(server);
  delete server;
}

ts_status ts_scenario_run(const char* server_url, const char* request_json, char** report_json, int* exit_code) {
  return guard([&] {
    require(server_url != nullptr && request_json != nullptr && report_json != nullptr, "null argument");
    const ScenarioParams params = ScenarioParams::from_json(request_json);
    HttpTransport transport(server_url);
    const ScenarioReport report = run_scenario(params, transport);
    *report_json = dup_string(report.to_json());
    if (exit_code) *exit_code = report.exit_code();
  });
}

}  // extern "C"
