#include "http.hpp"

#include <chrono>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "calendar.hpp"
#include "error.hpp"

namespace trackersync {

namespace {

HttpReply xml_reply(int status, std::string body) { return {status, "application/xml", std::move(body)}; }

HttpReply json_error(int status, Errc code, const std::string& message) {
  const nlohmann::ordered_json j = {{"error", message}, {"code", errc_name(code)}};
  return {status, "application/json", j.dump()};
}

HttpReply error_xml(int status, const std::string& message) {
  SyncResponse r;
  r.status = "error";
  r.error = message;
  return xml_reply(status, sync_response_to_xml(r));
}

int sync_http_status(SyncStatus status) {
  switch (status) {
    case SyncStatus::Accepted: return 200;
    case SyncStatus::UnknownTracker: return 404;
    case SyncStatus::LockedOut: return 429;
    default: return 400;
  }
}

const std::regex kDigestRoute(R"(^/1/user/([^/]+)/activities/date/(\d{4}-\d{2}-\d{2})\.json$)");

HttpReply handle_digest(SyncService& service, const std::string& user, const std::string& date) {
  try {
    parse_utc_date(date);
    return {200, "application/json", service.get_digest(user, date).to_json()};
  } catch (const Error& e) {
    const int status = e.code() == Errc::InvalidArgument ? 400 : 404;
    return json_error(status, e.code(), e.what());
  }
}

}  // namespace

HttpReply route(SyncService& service, const HttpRequest& request) {
  try {
    if (request.method == "POST" && request.path == kValidatePath) {
      std::optional<TrackerId> bt;
      if (auto it = request.query.find("btAddress"); it != request.query.end() && !it->second.empty()) {
        bt = TrackerId::parse(it->second);
      }
      try {
        return xml_reply(200, validate_response_to_xml(service.handle_validate(parse_envelope(request.body), bt)));
      } catch (const Error& e) {
        if (e.code() == Errc::MalformedEnvelope) return error_xml(400, e.what());
        throw;
      }
    }
    if (request.method == "POST" && request.path == kSyncPath) {
      SyncEnvelope envelope;
      try {
        envelope = parse_envelope(request.body);
      } catch (const Error& e) {
        if (service.config().mode == ServerMode::Hardened) return error_xml(400, "invalid message");
        return error_xml(400, e.what());
      }
      const SyncResult result = service.handle_sync(envelope);
      return xml_reply(sync_http_status(result.status), sync_response_to_xml(result.to_response(envelope.tracker_id)));
    }
    std::smatch m;
    if (request.method == "GET" && std::regex_match(request.path, m, kDigestRoute)) {
      return handle_digest(service, m[1].str(), m[2].str());
    }
    return json_error(404, Errc::InvalidArgument, "no route for " + request.method + " " + request.path);
  } catch (const Error& e) {
    return error_xml(e.code() == Errc::InvalidArgument || e.code() == Errc::BadHex ? 400 : 500, e.what());
  } catch (const std::exception& e) {
    return error_xml(500, e.what());
  }
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(HttpHandler handler, int port, std::string host) : impl_(std::make_unique<Impl>()) {
  auto adapt = [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
    HttpRequest request;
    request.method = req.method;
    request.path = req.path;
    for (const auto& [k, v] : req.params) request.query.emplace(k, v);
    request.body = req.body;
    const HttpReply reply = handler(request);
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  };
  impl_->server.Get(".*", adapt);
  impl_->server.Post(".*", adapt);

  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    if (port_ < 0) throw Error(Errc::Io, "cannot bind " + host);
  } else {
    if (!impl_->server.bind_to_port(host, port)) throw Error(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

HttpServer::~HttpServer() { stop(); }

std::string HttpServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

void HttpServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

void HttpServer::wait() {
  while (impl_->server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

HttpTransport::HttpTransport(std::string base_url) : base_url_(std::move(base_url)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.rfind("http://", 0) != 0) {
    throw Error(Errc::InvalidArgument, "server URL must start with http://: " + base_url_);
  }
}

HttpReply HttpTransport::send(const HttpRequest& request) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(5);
  client.set_read_timeout(10);
  httplib::Params params(request.query.begin(), request.query.end());
  const std::string path = httplib::append_query_params(request.path, params);
  const auto result = request.method == "POST" ? client.Post(path, request.body, "application/xml") : client.Get(path);
  if (!result) {
    throw Error(Errc::ServerError, "cannot reach " + base_url_ + ": " + httplib::to_string(result.error()));
  }
  HttpReply reply;
  reply.status = result->status;
  reply.content_type = result->get_header_value("Content-Type");
  reply.body = result->body;
  return reply;
}

EnvelopeHook identity_hook() {
  return [](SyncEnvelope&) {};
}

EnvelopeHook double_steps_hook(bool refresh_crc) {
  return [refresh_crc](SyncEnvelope& envelope) {
    Bytes wire = envelope.payload();
    const FrameHeader header = decode_header(wire);
    if (!header.encrypted) {
      Megadump dump = decode_megadump(wire);
      dump.overall.steps *= 2;
      envelope.payload_b64 = base64_encode(encode_megadump(dump));
      return;
    }
    // No key: the best a forwarder can do is flip ciphertext.
    RawFrame raw = split_frame(wire);
    if (raw.body.empty()) return;
    raw.body[0] ^= 0x01;
    Bytes forged;
    if (refresh_crc) {
      forged = assemble_frame(raw.header, raw.body);
    } else {
      forged = Bytes(wire.begin(), wire.begin() + kHeaderSize);
      forged.insert(forged.end(), raw.body.begin(), raw.body.end());
      forged.insert(forged.end(), wire.begin() + static_cast<long>(kHeaderSize + raw.body.size()),
                    wire.begin() + static_cast<long>(kHeaderSize + raw.body.size() + kFooterSize));
    }
    if (raw.tag) forged.insert(forged.end(), raw.tag->begin(), raw.tag->end());
    envelope.payload_b64 = base64_encode(forged);
  };
}

EnvelopeHook hook_by_name(std::string_view name) {
  if (name == "identity") return identity_hook();
  if (name == "double-steps") return double_steps_hook(false);
  if (name == "double-steps-refresh-crc") return double_steps_hook(true);
  throw Error(Errc::InvalidArgument, "unknown hook '" + std::string(name) + "'");
}

MitmTransport::MitmTransport(Transport& upstream, EnvelopeHook hook) : upstream_(upstream), hook_(std::move(hook)) {}

HttpReply MitmTransport::send(const HttpRequest& request) {
  if (request.method != "POST" || request.path != kSyncPath) return upstream_.send(request);
  SyncEnvelope original;
  try {
    original = parse_envelope(request.body);
  } catch (const Error&) {
    return upstream_.send(request);
  }
  {
    std::lock_guard lock(mutex_);
    captured_.push_back(original);
  }
  SyncEnvelope modified = original;
  hook_(modified);
  if (modified.tracker_id == original.tracker_id && modified.payload_b64 == original.payload_b64 &&
      modified.client_version == original.client_version) {
    return upstream_.send(request);
  }
  HttpRequest forwarded = request;
  forwarded.body = envelope_to_xml(modified);
  return upstream_.send(forwarded);
}

std::vector<SyncEnvelope> MitmTransport::captured() const {
  std::lock_guard lock(mutex_);
  return captured_;
}

bool SyncClient::validate(const SyncEnvelope& envelope, std::optional<TrackerId> bt_address) {
  HttpRequest req{"POST", kValidatePath, {}, envelope_to_xml(envelope)};
  if (bt_address) req.query["btAddress"] = bt_address->to_string();
  const HttpReply reply = transport_.send(req);
  if (reply.status == 400) throw Error(Errc::MalformedEnvelope, "server rejected validate payload");
  if (reply.status != 200) throw Error(Errc::ServerError, "validate: HTTP " + std::to_string(reply.status));
  return parse_validate_response(reply.body);
}

SyncResponse SyncClient::sync(const SyncEnvelope& envelope) {
  ++sync_requests_;
  const HttpReply reply = transport_.send({"POST", kSyncPath, {}, envelope_to_xml(envelope)});
  last_status_ = reply.status;
  if (reply.status == 404) {
    throw Error(Errc::UnknownTracker, "server does not know tracker " + envelope.tracker_id.to_string());
  }
  if (reply.status >= 500) throw Error(Errc::ServerError, "sync: HTTP " + std::to_string(reply.status));
  try {
    return parse_sync_response(reply.body);
  } catch (const Error& e) {
    throw Error(Errc::ServerError, std::string("sync: unreadable response: ") + e.what());
  }
}

std::optional<DigestReport> SyncClient::digest(const std::string& user_id, const std::string& date) {
  const HttpReply reply =
      transport_.send({"GET", "/1/user/" + user_id + "/activities/date/" + date + ".json", {}, {}});
  if (reply.status == 200) return DigestReport::from_json(date, reply.body);
  std::string code;
  std::string message = "digest: HTTP " + std::to_string(reply.status);
  try {
    const auto j = nlohmann::json::parse(reply.body);
    code = j.value("code", "");
    message = j.value("error", message);
  } catch (const nlohmann::json::exception&) {
  }
  if (code == errc_name(Errc::NoData)) return std::nullopt;
  if (code == errc_name(Errc::UnknownUser)) throw Error(Errc::UnknownUser, message);
  throw Error(Errc::ServerError, message);
}

}  // namespace trackersync
