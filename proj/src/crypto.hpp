#pragma once

// XTEA and the two modes built on it: CTR for payload confidentiality and
// CBC-MAC for frame authentication.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "bytes.hpp"

namespace trackersync {

// 128-bit device secret. Deliberately has no string conversion or stream
// operator; only the keystore writes key material out.
class DeviceKey {
 public:
  static constexpr std::size_t kSize = 16;

  DeviceKey() = default;
  explicit DeviceKey(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}
  static DeviceKey from_bytes(ByteView bytes);  // throws InvalidArgument
  static DeviceKey from_hex(std::string_view hex);

  const std::array<std::uint8_t, kSize>& bytes() const noexcept { return bytes_; }
  bool operator==(const DeviceKey&) const = default;

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

using Block = std::array<std::uint8_t, 8>;
using Tag = std::array<std::uint8_t, 8>;
using Nonce = std::array<std::uint8_t, 8>;

constexpr std::uint32_t kXteaDelta = 0x9E3779B9;
constexpr int kXteaCycles = 32;

// Blocks and key words are read big-endian.
Block xtea_encrypt_block(const DeviceKey& key, const Block& block);
Block xtea_decrypt_block(const DeviceKey& key, const Block& block);
// Span overloads throw Error(BadBlockLength) unless exactly 8 bytes.
Block xtea_encrypt_block(const DeviceKey& key, ByteView block);
Block xtea_decrypt_block(const DeviceKey& key, ByteView block);

struct EncryptedBody {
  Nonce nonce{};
  Bytes ciphertext;
  std::optional<Tag> tag;
};

// Nonce for a frame: the sequence number, little-endian, zero-extended.
Nonce nonce_for_sequence(std::uint32_t sequence);
// Counter block i = nonce XOR (0 0 0 0 || LE32(i)).
Block ctr_counter_block(const Nonce& nonce, std::uint32_t index);

EncryptedBody encrypt_payload(const DeviceKey& key, const Nonce& nonce, ByteView plaintext);
Bytes decrypt_payload(const DeviceKey& key, const EncryptedBody& body);
// CTR keystream applied in place; encryption and decryption are the same.
Bytes xtea_ctr(const DeviceKey& key, const Nonce& nonce, ByteView data);

constexpr std::string_view kSignLabel = "SIGN0001";
constexpr std::string_view kEncryptLabel = "ENCR0001";

// XTEA(key, label) || XTEA(key, ~label). Throws Error(BadLabel) for labels
// other than SIGN0001 / ENCR0001.
DeviceKey derive_subkey(const DeviceKey& key, std::string_view label);

// CBC-MAC over BE64(len) || message || zero padding.
Tag mac(const DeviceKey& subkey, ByteView message);
// Constant-time comparison against a fresh computation.
bool verify_mac(const DeviceKey& subkey, ByteView message, const Tag& tag);

}  // namespace trackersync
