#pragma once

// XML documents exchanged between the sync agent and the server.
//
//   <galileo-client version="2.0">
//     <client-info><client-version>..</client-version></client-info>
//     <tracker-id>0A0B0C0D0E0F</tracker-id>
//     <data>BASE64 FRAME</data>
//   </galileo-client>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "frame_codec.hpp"

namespace trackersync {

struct SyncEnvelope {
  TrackerId tracker_id;
  std::string payload_b64;
  std::string client_version = "2.0";

  static SyncEnvelope wrap(const TrackerId& id, ByteView frame);
  // Throws MalformedEnvelope when not Base64 or shorter than header+footer.
  Bytes payload() const;
};

std::string envelope_to_xml(const SyncEnvelope& envelope);
// Throws MalformedEnvelope.
SyncEnvelope parse_envelope(std::string_view xml);

// Server -> client sync response (<galileo-server>).
struct SyncResponse {
  std::string status;                      // "ok" or "error"
  std::optional<std::string> error;        // human-readable reason
  std::optional<std::uint16_t> expected_crc;  // vulnerable mode CRC oracle
  std::optional<TrackerId> tracker_id;
  Bytes ack_frame;

  bool ok() const { return status == "ok"; }
};

std::string sync_response_to_xml(const SyncResponse& response);
SyncResponse parse_sync_response(std::string_view xml);

std::string validate_response_to_xml(bool valid);
bool parse_validate_response(std::string_view xml);

}  // namespace trackersync
