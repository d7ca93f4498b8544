#include "secure_frame.hpp"

#include <fstream>
#include <sstream>

#include "error.hpp"

namespace trackersync {

Bytes seal_frame(FrameHeader header, ByteView plaintext_body, const DeviceKey& device_key,
                 bool authenticate) {
  header.encrypted = true;
  header.authenticated = authenticate;
  const DeviceKey enc = derive_subkey(device_key, kEncryptLabel);
  const Bytes ciphertext = xtea_ctr(enc, nonce_for_sequence(header.sequence), plaintext_body);
  Bytes frame = assemble_frame(header, ciphertext);
  if (authenticate) append_tag(frame, device_key);
  return frame;
}

void append_tag(Bytes& frame, const DeviceKey& device_key) {
  const Tag tag = mac(derive_subkey(device_key, kSignLabel), frame);
  frame.insert(frame.end(), tag.begin(), tag.end());
}

bool verify_frame_tag(ByteView wire, const DeviceKey& device_key) {
  if (wire.size() < kHeaderSize + kFooterSize + kTagSize) return false;
  if ((wire[8] & kFlagAuthenticated) == 0) return false;
  Tag tag{};
  std::copy(wire.end() - kTagSize, wire.end(), tag.begin());
  return verify_mac(derive_subkey(device_key, kSignLabel), wire.first(wire.size() - kTagSize), tag);
}

Bytes open_body(const RawFrame& frame, const DeviceKey& device_key) {
  if (!frame.header.encrypted) return frame.body;
  const DeviceKey enc = derive_subkey(device_key, kEncryptLabel);
  return xtea_ctr(enc, nonce_for_sequence(frame.header.sequence), frame.body);
}

Megadump decode_megadump_with_key(ByteView wire, const DeviceKey& device_key) {
  const RawFrame raw = split_frame(wire);
  Megadump out;
  out.header = raw.header;
  out.footer = raw.footer;
  decode_megadump_body(open_body(raw, device_key), out);
  return out;
}

std::map<TrackerId, DeviceKey> parse_keystore(std::string_view text) {
  std::map<TrackerId, DeviceKey> keys;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string id, key, extra;
    if (!(fields >> id)) continue;
    if (!(fields >> key) || (fields >> extra)) {
      throw Error(Errc::InvalidArgument, "keystore line " + std::to_string(line_no) +
                                             ": expected '<tracker id> <key>'");
    }
    keys[TrackerId::parse(id)] = DeviceKey::from_hex(key);
  }
  return keys;
}

std::string format_keystore(const std::map<TrackerId, DeviceKey>& keys) {
  std::string out;
  for (const auto& [id, key] : keys) out += id.to_string() + " " + to_hex(key.bytes()) + "\n";
  return out;
}

std::map<TrackerId, DeviceKey> load_keystore(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open keystore " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_keystore(text.str());
}

}  // namespace trackersync
