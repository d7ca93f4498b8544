#include "bytes.hpp"

#include <cctype>

#include <sodium.h>

#include "error.hpp"

namespace trackersync {

namespace {
constexpr char kHexDigits[] = "0123456789ABCDEF";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

std::string to_hex(ByteView bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0F]);
  }
  return out;
}

std::string hex16(std::uint16_t value) {
  const std::uint8_t raw[2] = {static_cast<std::uint8_t>(value >> 8),
                               static_cast<std::uint8_t>(value)};
  return to_hex(raw);
}

std::string to_hex_spaced(ByteView bytes) {
  std::string out;
  out.reserve(bytes.size() * 3);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i) out.push_back(' ');
    out.push_back(kHexDigits[bytes[i] >> 4]);
    out.push_back(kHexDigits[bytes[i] & 0x0F]);
  }
  return out;
}

Bytes from_hex(std::string_view text) {
  Bytes out;
  int high = -1;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    int v = hex_value(c);
    if (v < 0) throw Error(Errc::BadHex, std::string("invalid hex character '") + c + "'");
    if (high < 0) {
      high = v;
    } else {
      out.push_back(static_cast<std::uint8_t>((high << 4) | v));
      high = -1;
    }
  }
  if (high >= 0) throw Error(Errc::BadHex, "odd number of hex digits");
  return out;
}

std::string base64_encode(ByteView bytes) {
  const std::size_t cap = sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(cap, '\0');
  sodium_bin2base64(out.data(), cap, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(cap - 1);  // drop terminator
  return out;
}

Bytes base64_decode(std::string_view text) {
  Bytes out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \t\r\n", &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size()) {
    throw Error(Errc::MalformedEnvelope, "payload is not valid Base64");
  }
  out.resize(len);
  return out;
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::Ok: return "Ok";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::BadHex: return "BadHex";
    case Errc::MalformedEscape: return "MalformedEscape";
    case Errc::BadCrc: return "BadCrc";
    case Errc::TruncatedFrame: return "TruncatedFrame";
    case Errc::UnknownSectionLayout: return "UnknownSectionLayout";
    case Errc::SectionOrderViolation: return "SectionOrderViolation";
    case Errc::OversizePayload: return "OversizePayload";
    case Errc::EncryptedFrame: return "EncryptedFrame";
    case Errc::BadBlockLength: return "BadBlockLength";
    case Errc::NonceReuse: return "NonceReuse";
    case Errc::BadTag: return "BadTag";
    case Errc::BadLabel: return "BadLabel";
    case Errc::ClockRegression: return "ClockRegression";
    case Errc::CapacityExceeded: return "CapacityExceeded";
    case Errc::ReadProtected: return "ReadProtected";
    case Errc::DebugDisabled: return "DebugDisabled";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::ResponseMismatch: return "ResponseMismatch";
    case Errc::MalformedEnvelope: return "MalformedEnvelope";
    case Errc::GenericInvalid: return "GenericInvalid";
    case Errc::CrcMismatch: return "CrcMismatch";
    case Errc::LockedOut: return "LockedOut";
    case Errc::UnknownTracker: return "UnknownTracker";
    case Errc::UnknownUser: return "UnknownUser";
    case Errc::NoData: return "NoData";
    case Errc::CorruptStore: return "CorruptStore";
    case Errc::ServerError: return "ServerError";
    case Errc::RejectedByServer: return "RejectedByServer";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace trackersync
