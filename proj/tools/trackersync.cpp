// trackersync command-line driver. Talks to the library only through the C API.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trackersync/trackersync.h"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int report_failure(ts_status status) {
  std::fprintf(stderr, "trackersync: %s: %s\n", ts_status_string(status), ts_last_error_message());
  return 2;
}

struct ScenarioOptions {
  std::string server;
  std::string tracker;
  std::optional<std::string> user;
  std::optional<std::string> date;
  std::optional<std::uint32_t> steps;
  std::optional<std::uint32_t> distance_mm;
  std::optional<int> calories;
  std::optional<std::string> key;
  std::optional<std::string> keys;
  std::optional<std::string> attacker;
  bool encrypted = false;
  bool plaintext = false;
  int protection = 0;
  std::uint64_t seed = 1;
  std::string expect = "pass";
  bool probe_lockout = false;
};

void add_scenario(CLI::App& app, const std::string& name, const std::string& description, ScenarioOptions& o,
                  std::string& chosen) {
  CLI::App* sub = app.add_subcommand(name, description);
  sub->add_option("--server", o.server, "Server base URL, e.g. http://127.0.0.1:8080")->required();
  sub->add_option("--tracker", o.tracker, "Target tracker id (12 hex digits)")->required();
  sub->add_option("--user", o.user, "User id for the digest (default: tracker id)");
  sub->add_option("--date", o.date, "Activity date YYYY-MM-DD (default 2017-01-15)");
  sub->add_option("--steps", o.steps, "Step count (recorded, fabricated or injected)");
  sub->add_option("--distance-mm", o.distance_mm, "Fabricated distance in millimetres");
  sub->add_option("--calories", o.calories, "Fabricated calories")->check(CLI::Range(0, 65535));
  sub->add_option("--key", o.key, "Device key of the target tracker (32 hex digits)");
  sub->add_option("--keys", o.keys, "Keystore file: '<HEX12> <HEX32>' per line")->check(CLI::ExistingFile);
  sub->add_option("--attacker", o.attacker, "Attacker tracker id for impersonate");
  auto* enc = sub->add_flag("--encrypted", o.encrypted, "Tracker encrypts its frames");
  sub->add_flag("--plaintext", o.plaintext, "Tracker sends plaintext frames")->excludes(enc);
  sub->add_option("--protection", o.protection, "Readout protection level")->check(CLI::Range(0, 2));
  sub->add_option("--seed", o.seed, "Seed for generated ids, keys and sequence numbers");
  sub->add_option("--expect", o.expect, "Expected result")->check(CLI::IsMember({"pass", "blocked"}))->required();
  if (name == "crc-oracle") {
    sub->add_flag("--probe-lockout", o.probe_lockout, "Keep sending bad CRCs until the server locks out");
  }
  sub->callback([&chosen, name] { chosen = name; });
}

int run_scenario(const std::string& name, const ScenarioOptions& o) {
  nlohmann::json req;
  req["scenario"] = name;
  req["tracker"] = o.tracker;
  if (o.user) req["user"] = *o.user;
  if (o.date) req["date"] = *o.date;
  if (o.steps) req["steps"] = *o.steps;
  if (o.distance_mm) req["distance_mm"] = *o.distance_mm;
  if (o.calories) req["calories"] = *o.calories;
  if (o.key) req["key"] = *o.key;
  if (o.keys) req["keystore_file"] = *o.keys;
  if (o.attacker) req["attacker"] = *o.attacker;
  if (o.encrypted) req["encrypted"] = true;
  if (o.plaintext) req["encrypted"] = false;
  req["protection"] = o.protection;
  req["seed"] = o.seed;
  req["expect"] = o.expect;
  req["probe_lockout"] = o.probe_lockout;

  char* report = nullptr;
  int exit_code = 2;
  const ts_status st = ts_scenario_run(o.server.c_str(), req.dump().c_str(), &report, &exit_code);
  if (st != TS_OK) return report_failure(st);
  std::cout << report << std::endl;
  ts_string_free(report);
  return exit_code;
}

struct ServeOptions {
  std::string mode = "vulnerable";
  int port = 8080;
  std::optional<std::string> store;
  std::uint32_t error_threshold = 5;
  std::int64_t lockout_seconds = 3600;
  std::uint32_t max_daily_steps = 100000;
  std::uint32_t max_steps_per_minute = 300;
  double min_stride = 0.2;
  double max_stride = 2.5;
  std::string clock = "system";
  std::vector<std::string> accounts;
  std::optional<std::string> keys;
};

// USER=HEX12[:HEX32]
nlohmann::json parse_account(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--account", "expected USER=HEX12[:KEY32]");
  nlohmann::json a;
  a["user"] = spec.substr(0, eq);
  const std::string rest = spec.substr(eq + 1);
  const auto colon = rest.find(':');
  a["tracker"] = rest.substr(0, colon);
  if (colon != std::string::npos) a["key"] = rest.substr(colon + 1);
  return a;
}

void wait_for_signal(ts_server* server) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  ts_server_stop(server);
}

int run_serve(const ServeOptions& o) {
  nlohmann::json cfg;
  cfg["mode"] = o.mode;
  cfg["port"] = o.port;
  if (o.store) cfg["store"] = *o.store;
  cfg["error_threshold"] = o.error_threshold;
  cfg["lockout_seconds"] = o.lockout_seconds;
  cfg["max_daily_steps"] = o.max_daily_steps;
  cfg["max_steps_per_minute"] = o.max_steps_per_minute;
  cfg["min_stride_m"] = o.min_stride;
  cfg["max_stride_m"] = o.max_stride;
  cfg["clock"] = o.clock;
  cfg["accounts"] = nlohmann::json::array();
  for (const auto& a : o.accounts) cfg["accounts"].push_back(parse_account(a));
  if (o.keys) cfg["keystore"] = *o.keys;

  ts_server* server = nullptr;
  const ts_status st = ts_server_start(cfg.dump().c_str(), &server);
  if (st != TS_OK) return report_failure(st);
  std::printf("listening on http://127.0.0.1:%d (%s mode)\n", ts_server_port(server), o.mode.c_str());
  std::fflush(stdout);
  wait_for_signal(server);
  ts_server_free(server);
  return 0;
}

int run_proxy(int port, const std::string& upstream, const std::string& hook) {
  ts_server* proxy = nullptr;
  const ts_status st = ts_proxy_start(upstream.c_str(), port, hook.c_str(), &proxy);
  if (st != TS_OK) return report_failure(st);
  std::printf("forwarding http://127.0.0.1:%d -> %s (hook %s)\n", ts_server_port(proxy), upstream.c_str(),
              hook.c_str());
  std::fflush(stdout);
  wait_for_signal(proxy);
  ts_server_free(proxy);
  return 0;
}

int run_dissect(const std::string& path, bool hex) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "trackersync: cannot open %s\n", path.c_str());
    return 2;
  }
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ts_buffer frame{nullptr, 0};
  if (hex) {
    const ts_status st = ts_parse_hex_dump(content.c_str(), &frame);
    if (st != TS_OK) return report_failure(st);
  }
  const auto* data = hex ? frame.data : reinterpret_cast<const uint8_t*>(content.data());
  const size_t len = hex ? frame.len : content.size();
  char* text = nullptr;
  const ts_status st = ts_dissect(data, len, &text);
  ts_buffer_free(&frame);
  if (st != TS_OK) return report_failure(st);
  std::fputs(text, stdout);
  ts_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fitness tracker sync protocol toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ts_version());

  ScenarioOptions scenario;
  std::string chosen;
  add_scenario(app, "honest-sync", "Record steps on a simulated tracker and sync them", scenario, chosen);
  add_scenario(app, "impersonate", "Replay another tracker's frame under the target id", scenario, chosen);
  add_scenario(app, "fabricate", "Submit a summary-only frame with chosen totals", scenario, chosen);
  add_scenario(app, "crc-oracle", "Learn the correct CRC from the server's error reply", scenario, chosen);
  add_scenario(app, "hw-inject", "Overwrite the step counter in EEPROM, then sync", scenario, chosen);
  add_scenario(app, "hw-decrypt-flag", "Read the key and clear the encryption flag, then sync", scenario, chosen);

  ServeOptions serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Run the sync server");
  serve_cmd->add_option("--mode", serve.mode)->check(CLI::IsMember({"vulnerable", "hardened"}))->envname("TRACKERSYNC_MODE");
  serve_cmd->add_option("--port", serve.port)->check(CLI::Range(0, 65535))->envname("TRACKERSYNC_PORT");
  serve_cmd->add_option("--store", serve.store, "Account store (JSON)")->envname("TRACKERSYNC_STORE");
  serve_cmd->add_option("--error-threshold", serve.error_threshold)->envname("TRACKERSYNC_ERROR_THRESHOLD");
  serve_cmd->add_option("--lockout-seconds", serve.lockout_seconds)->envname("TRACKERSYNC_LOCKOUT_SECONDS");
  serve_cmd->add_option("--max-daily-steps", serve.max_daily_steps);
  serve_cmd->add_option("--max-steps-per-minute", serve.max_steps_per_minute);
  serve_cmd->add_option("--min-stride", serve.min_stride, "Metres per step");
  serve_cmd->add_option("--max-stride", serve.max_stride, "Metres per step");
  serve_cmd->add_option("--clock", serve.clock, "system or fixed:<unix seconds>")->envname("TRACKERSYNC_CLOCK");
  serve_cmd->add_option("--account", serve.accounts, "USER=HEX12[:KEY32], repeatable");
  serve_cmd->add_option("--keys", serve.keys, "Keystore file")->check(CLI::ExistingFile);

  int proxy_port = 8081;
  std::string upstream;
  std::string hook = "identity";
  CLI::App* proxy_cmd = app.add_subcommand("proxy", "Forward sync traffic through a rewrite hook");
  proxy_cmd->add_option("--port", proxy_port)->check(CLI::Range(0, 65535));
  proxy_cmd->add_option("--upstream", upstream, "Server base URL")->required();
  proxy_cmd->add_option("--hook", hook)->check(CLI::IsMember({"identity", "double-steps", "double-steps-refresh-crc"}));

  std::string dissect_path;
  bool dissect_hex = false;
  CLI::App* dissect_cmd = app.add_subcommand("dissect", "Annotate the fields of a captured frame");
  dissect_cmd->add_option("file", dissect_path, "Binary frame, or hex dump with --hex")->required();
  dissect_cmd->add_flag("--hex", dissect_hex, "Input is a hex dump");

  CLI11_PARSE(app, argc, argv);

  if (!chosen.empty()) return run_scenario(chosen, scenario);
  if (serve_cmd->parsed()) return run_serve(serve);
  if (proxy_cmd->parsed()) return run_proxy(proxy_port, upstream, hook);
  if (dissect_cmd->parsed()) return run_dissect(dissect_path, dissect_hex);
  return 2;
}
