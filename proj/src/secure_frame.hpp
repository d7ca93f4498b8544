#pragma once

// Encrypt-then-MAC framing. The body is XTEA-CTR encrypted under the ENCR0001
// subkey with the header sequence as nonce; the footer CRC covers the
// ciphertext; the tag is a CBC-MAC under the SIGN0001 subkey over
// header || body || footer.

#include <map>
#include <string>
#include <string_view>

#include "crypto.hpp"
#include "frame_codec.hpp"

namespace trackersync {

// Sets header.encrypted (and header.authenticated when `authenticate`).
Bytes seal_frame(FrameHeader header, ByteView plaintext_body, const DeviceKey& device_key,
                 bool authenticate = true);

// Appends a tag to a frame that was assembled with header.authenticated set.
void append_tag(Bytes& frame, const DeviceKey& device_key);

// True iff the frame carries a tag and it verifies. Never throws.
bool verify_frame_tag(ByteView wire, const DeviceKey& device_key);

// Plaintext body of a split frame; decrypts when the header says so.
Bytes open_body(const RawFrame& frame, const DeviceKey& device_key);

// Decodes a megadump, decrypting when required. Tags are not checked here.
Megadump decode_megadump_with_key(ByteView wire, const DeviceKey& device_key);

// Keystore text: one "<12 hex tracker id> <32 hex key>" pair per line,
// '#' starts a comment.
std::map<TrackerId, DeviceKey> parse_keystore(std::string_view text);
std::string format_keystore(const std::map<TrackerId, DeviceKey>& keys);
std::map<TrackerId, DeviceKey> load_keystore(const std::string& path);

}  // namespace trackersync
