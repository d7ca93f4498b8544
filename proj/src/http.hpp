#pragma once

// HTTP front end for SyncService, client-side transports and the in-process
// MITM forwarder.
//
//   POST /1/devices/client/validate.json?btAddress=<12hex>  envelope -> <valid>
//   POST /1/devices/client/sync                              envelope -> <galileo-server>
//   GET  /1/user/<id>/activities/date/<YYYY-MM-DD>.json      digest JSON

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "envelope.hpp"
#include "server.hpp"

namespace trackersync {

inline constexpr const char* kValidatePath = "/1/devices/client/validate.json";
inline constexpr const char* kSyncPath = "/1/devices/client/sync";

struct HttpRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/xml";
  std::string body;
};

using HttpHandler = std::function<HttpReply(const HttpRequest&)>;

// Maps a request onto the service. Never throws.
HttpReply route(SyncService& service, const HttpRequest& request);

// Serves a handler on 127.0.0.1. Port 0 picks a free port.
class HttpServer {
 public:
  HttpServer(HttpHandler handler, int port = 0, std::string host = "127.0.0.1");
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  int port() const noexcept { return port_; }
  std::string url() const;
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::thread thread_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws ServerError when the server cannot be reached.
  virtual HttpReply send(const HttpRequest& request) = 0;
};

// "http://host:port"
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::string base_url);
  HttpReply send(const HttpRequest& request) override;

 private:
  std::string base_url_;
};

class LoopbackTransport : public Transport {
 public:
  explicit LoopbackTransport(SyncService& service) : service_(service) {}
  HttpReply send(const HttpRequest& request) override { return route(service_, request); }

 private:
  SyncService& service_;
};

// Rewrites an envelope in place; leaving it untouched forwards the original
// request bytes.
using EnvelopeHook = std::function<void(SyncEnvelope&)>;

EnvelopeHook identity_hook();
// Plaintext megadump: overall steps doubled and the frame re-encoded (CRC
// refreshed). Encrypted frame: one ciphertext byte flipped, CRC left stale
// unless `refresh_crc`.
EnvelopeHook double_steps_hook(bool refresh_crc = false);
// "identity", "double-steps", "double-steps-refresh-crc". Throws InvalidArgument.
EnvelopeHook hook_by_name(std::string_view name);

// Forwards to `upstream`, passing sync envelopes through `hook`.
class MitmTransport : public Transport {
 public:
  MitmTransport(Transport& upstream, EnvelopeHook hook);
  HttpReply send(const HttpRequest& request) override;

  // Envelopes as received from the client, before the hook ran.
  std::vector<SyncEnvelope> captured() const;

 private:
  Transport& upstream_;
  EnvelopeHook hook_;
  mutable std::mutex mutex_;
  std::vector<SyncEnvelope> captured_;
};

// Typed client over a transport.
class SyncClient {
 public:
  explicit SyncClient(Transport& transport) : transport_(transport) {}

  bool validate(const SyncEnvelope& envelope, std::optional<TrackerId> bt_address = {});
  // Error responses are returned, except 404 (throws UnknownTracker) and 5xx
  // (throws ServerError).
  SyncResponse sync(const SyncEnvelope& envelope);
  // nullopt on NoData. Throws UnknownUser, ServerError.
  std::optional<DigestReport> digest(const std::string& user_id, const std::string& date);

  int sync_requests() const noexcept { return sync_requests_; }
  int last_status() const noexcept { return last_status_; }

 private:
  Transport& transport_;
  int sync_requests_ = 0;
  int last_status_ = 0;
};

}  // namespace trackersync
