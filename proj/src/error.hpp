#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace trackersync {

// Numeric values are part of the C ABI (ts_status); append only.
enum class Errc : int {
  Ok = 0,
  InvalidArgument = 1,
  BadHex = 2,
  MalformedEscape = 10,
  BadCrc = 11,
  TruncatedFrame = 12,
  UnknownSectionLayout = 13,
  SectionOrderViolation = 14,
  OversizePayload = 15,
  EncryptedFrame = 16,
  BadBlockLength = 20,
  NonceReuse = 21,
  BadTag = 22,
  BadLabel = 23,
  ClockRegression = 30,
  CapacityExceeded = 31,
  ReadProtected = 32,
  DebugDisabled = 33,
  OutOfRange = 34,
  ResponseMismatch = 35,
  MalformedEnvelope = 40,
  GenericInvalid = 41,
  CrcMismatch = 42,
  LockedOut = 43,
  UnknownTracker = 44,
  UnknownUser = 45,
  NoData = 46,
  CorruptStore = 47,
  ServerError = 50,
  RejectedByServer = 51,
  Io = 60,
};

const char* errc_name(Errc code);

struct CrcMismatchInfo {
  std::uint16_t expected;  // computed over the received body
  std::uint16_t found;     // declared in the footer
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Error(Errc code, const std::string& what, CrcMismatchInfo crc)
      : std::runtime_error(what), code_(code), crc_(crc) {}

  Errc code() const noexcept { return code_; }
  const std::optional<CrcMismatchInfo>& crc() const noexcept { return crc_; }

 private:
  Errc code_;
  std::optional<CrcMismatchInfo> crc_;
};

}  // namespace trackersync
