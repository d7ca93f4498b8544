#include "envelope.hpp"

#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "error.hpp"

namespace trackersync {

namespace pt = boost::property_tree;

namespace {

std::string write_xml(const pt::ptree& tree) {
  std::ostringstream out;
  pt::write_xml(out, tree, pt::xml_writer_settings<std::string>());
  return out.str();
}

pt::ptree read_xml(std::string_view xml, Errc on_error) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error(on_error, std::string("malformed XML: ") + e.what());
  }
  return tree;
}

}  // namespace

SyncEnvelope SyncEnvelope::wrap(const TrackerId& id, ByteView frame) {
  SyncEnvelope env;
  env.tracker_id = id;
  env.payload_b64 = base64_encode(frame);
  return env;
}

Bytes SyncEnvelope::payload() const {
  Bytes raw = base64_decode(payload_b64);
  if (raw.size() < kHeaderSize + kFooterSize) {
    throw Error(Errc::MalformedEnvelope, "payload shorter than header and footer");
  }
  return raw;
}

std::string envelope_to_xml(const SyncEnvelope& envelope) {
  pt::ptree tree;
  tree.put("galileo-client.<xmlattr>.version", "2.0");
  tree.put("galileo-client.client-info.client-version", envelope.client_version);
  tree.put("galileo-client.tracker-id", envelope.tracker_id.to_string());
  tree.put("galileo-client.data", envelope.payload_b64);
  return write_xml(tree);
}

SyncEnvelope parse_envelope(std::string_view xml) {
  const pt::ptree tree = read_xml(xml, Errc::MalformedEnvelope);
  const auto root = tree.get_child_optional("galileo-client");
  if (!root) throw Error(Errc::MalformedEnvelope, "missing <galileo-client> root");
  const auto id = root->get_optional<std::string>("tracker-id");
  const auto data = root->get_optional<std::string>("data");
  if (!id || !data) throw Error(Errc::MalformedEnvelope, "envelope needs <tracker-id> and <data>");
  SyncEnvelope env;
  try {
    env.tracker_id = TrackerId::parse(*id);
  } catch (const Error& e) {
    throw Error(Errc::MalformedEnvelope, e.what());
  }
  env.payload_b64 = *data;
  env.client_version = root->get("client-info.client-version", std::string());
  return env;
}

std::string sync_response_to_xml(const SyncResponse& r) {
  pt::ptree tree;
  tree.put("galileo-server.<xmlattr>.version", "2.0");
  tree.put("galileo-server.status", r.status);
  if (r.tracker_id) tree.put("galileo-server.tracker-id", r.tracker_id->to_string());
  if (r.error) tree.put("galileo-server.error", *r.error);
  if (r.expected_crc) tree.put("galileo-server.expected-crc", hex16(*r.expected_crc));
  if (!r.ack_frame.empty()) tree.put("galileo-server.data", base64_encode(r.ack_frame));
  return write_xml(tree);
}

SyncResponse parse_sync_response(std::string_view xml) {
  const pt::ptree tree = read_xml(xml, Errc::ServerError);
  const auto root = tree.get_child_optional("galileo-server");
  if (!root) throw Error(Errc::ServerError, "missing <galileo-server> root");
  SyncResponse r;
  r.status = root->get("status", std::string());
  if (auto e = root->get_optional<std::string>("error")) r.error = *e;
  if (auto crc = root->get_optional<std::string>("expected-crc")) {
    const Bytes b = from_hex(*crc);
    if (b.size() != 2) throw Error(Errc::ServerError, "expected-crc is not 4 hex digits");
    r.expected_crc = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  if (auto id = root->get_optional<std::string>("tracker-id")) r.tracker_id = TrackerId::parse(*id);
  if (auto data = root->get_optional<std::string>("data")) r.ack_frame = base64_decode(*data);
  return r;
}

std::string validate_response_to_xml(bool valid) {
  pt::ptree tree;
  tree.put("galileo-server.<xmlattr>.version", "2.0");
  tree.put("galileo-server.valid", valid ? "true" : "false");
  return write_xml(tree);
}

bool parse_validate_response(std::string_view xml) {
  const pt::ptree tree = read_xml(xml, Errc::ServerError);
  const auto valid = tree.get_optional<std::string>("galileo-server.valid");
  if (!valid) throw Error(Errc::ServerError, "missing <valid> element");
  return *valid == "true";
}

}  // namespace trackersync
