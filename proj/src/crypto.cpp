#include "crypto.hpp"

#include <algorithm>

#include "error.hpp"

namespace trackersync {

DeviceKey DeviceKey::from_bytes(ByteView bytes) {
  if (bytes.size() != kSize) {
    throw Error(Errc::InvalidArgument, "device key must be 16 bytes, got " + std::to_string(bytes.size()));
  }
  std::array<std::uint8_t, kSize> raw{};
  std::copy(bytes.begin(), bytes.end(), raw.begin());
  return DeviceKey(raw);
}

DeviceKey DeviceKey::from_hex(std::string_view hex) {
  if (hex.size() != 2 * kSize) throw Error(Errc::InvalidArgument, "device key must be 32 hex digits");
  return from_bytes(trackersync::from_hex(hex));
}

namespace {

std::array<std::uint32_t, 4> key_words(const DeviceKey& key) {
  std::array<std::uint32_t, 4> k{};
  for (std::size_t i = 0; i < 4; ++i) k[i] = get_u32_be(key.bytes(), 4 * i);
  return k;
}

Block pack(std::uint32_t v0, std::uint32_t v1) {
  Block out{};
  for (int i = 0; i < 4; ++i) {
    out[i] = static_cast<std::uint8_t>(v0 >> (24 - 8 * i));
    out[4 + i] = static_cast<std::uint8_t>(v1 >> (24 - 8 * i));
  }
  return out;
}

Block to_block(ByteView bytes) {
  if (bytes.size() != 8) {
    throw Error(Errc::BadBlockLength, "XTEA block must be 8 bytes, got " + std::to_string(bytes.size()));
  }
  Block b{};
  std::copy(bytes.begin(), bytes.end(), b.begin());
  return b;
}

void xor_into(Block& acc, const Block& other) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] ^= other[i];
}

}  // namespace

Block xtea_encrypt_block(const DeviceKey& key, const Block& block) {
  const auto k = key_words(key);
  std::uint32_t v0 = get_u32_be(block, 0);
  std::uint32_t v1 = get_u32_be(block, 4);
  std::uint32_t sum = 0;
  for (int i = 0; i < kXteaCycles; ++i) {
    v0 += (((v1 << 4) ^ (v1 >> 5)) + v1) ^ (sum + k[sum & 3]);
    sum += kXteaDelta;
    v1 += (((v0 << 4) ^ (v0 >> 5)) + v0) ^ (sum + k[(sum >> 11) & 3]);
  }
  return pack(v0, v1);
}

Block xtea_decrypt_block(const DeviceKey& key, const Block& block) {
  const auto k = key_words(key);
  std::uint32_t v0 = get_u32_be(block, 0);
  std::uint32_t v1 = get_u32_be(block, 4);
  std::uint32_t sum = kXteaDelta * static_cast<std::uint32_t>(kXteaCycles);
  for (int i = 0; i < kXteaCycles; ++i) {
    v1 -= (((v0 << 4) ^ (v0 >> 5)) + v0) ^ (sum + k[(sum >> 11) & 3]);
    sum -= kXteaDelta;
    v0 -= (((v1 << 4) ^ (v1 >> 5)) + v1) ^ (sum + k[sum & 3]);
  }
  return pack(v0, v1);
}

Block xtea_encrypt_block(const DeviceKey& key, ByteView block) {
  return xtea_encrypt_block(key, to_block(block));
}

Block xtea_decrypt_block(const DeviceKey& key, ByteView block) {
  return xtea_decrypt_block(key, to_block(block));
}

Nonce nonce_for_sequence(std::uint32_t sequence) {
  Nonce n{};
  for (int i = 0; i < 4; ++i) n[i] = static_cast<std::uint8_t>(sequence >> (8 * i));
  return n;
}

Block ctr_counter_block(const Nonce& nonce, std::uint32_t index) {
  Block b = nonce;
  for (int i = 0; i < 4; ++i) b[4 + i] ^= static_cast<std::uint8_t>(index >> (8 * i));
  return b;
}

Bytes xtea_ctr(const DeviceKey& key, const Nonce& nonce, ByteView data) {
  Bytes out(data.begin(), data.end());
  for (std::size_t at = 0, index = 0; at < out.size(); at += 8, ++index) {
    const Block stream = xtea_encrypt_block(key, ctr_counter_block(nonce, static_cast<std::uint32_t>(index)));
    const std::size_t n = std::min<std::size_t>(8, out.size() - at);
    for (std::size_t i = 0; i < n; ++i) out[at + i] ^= stream[i];
  }
  return out;
}

EncryptedBody encrypt_payload(const DeviceKey& key, const Nonce& nonce, ByteView plaintext) {
  EncryptedBody body;
  body.nonce = nonce;
  body.ciphertext = xtea_ctr(key, nonce, plaintext);
  return body;
}

Bytes decrypt_payload(const DeviceKey& key, const EncryptedBody& body) {
  return xtea_ctr(key, body.nonce, body.ciphertext);
}

DeviceKey derive_subkey(const DeviceKey& key, std::string_view label) {
  if (label != kSignLabel && label != kEncryptLabel) {
    throw Error(Errc::BadLabel, "unsupported subkey label '" + std::string(label) + "'");
  }
  Block plain{};
  std::copy(label.begin(), label.end(), plain.begin());
  Block inverted = plain;
  for (auto& b : inverted) b = static_cast<std::uint8_t>(~b);
  const Block lo = xtea_encrypt_block(key, plain);
  const Block hi = xtea_encrypt_block(key, inverted);
  std::array<std::uint8_t, DeviceKey::kSize> raw{};
  std::copy(lo.begin(), lo.end(), raw.begin());
  std::copy(hi.begin(), hi.end(), raw.begin() + 8);
  return DeviceKey(raw);
}

Tag mac(const DeviceKey& subkey, ByteView message) {
  Block state{};
  const std::uint64_t len = message.size();
  for (int i = 0; i < 8; ++i) state[i] = static_cast<std::uint8_t>(len >> (56 - 8 * i));
  state = xtea_encrypt_block(subkey, state);
  for (std::size_t at = 0; at < message.size(); at += 8) {
    Block chunk{};
    const std::size_t n = std::min<std::size_t>(8, message.size() - at);
    std::copy_n(message.begin() + static_cast<long>(at), n, chunk.begin());
    xor_into(state, chunk);
    state = xtea_encrypt_block(subkey, state);
  }
  return state;
}

bool verify_mac(const DeviceKey& subkey, ByteView message, const Tag& tag) {
  const Tag expected = mac(subkey, message);
  std::uint8_t diff = 0;
  for (std::size_t i = 0; i < tag.size(); ++i) diff |= static_cast<std::uint8_t>(expected[i] ^ tag[i]);
  return diff == 0;
}

}  // namespace trackersync
