#include <doctest.h>

#include <bit>
#include <random>

#include "crypto.hpp"
#include "error.hpp"
#include "oracles.hpp"
#include "secure_frame.hpp"

using namespace trackersync;

namespace {

Bytes vec(const auto& a) { return Bytes(a.begin(), a.end()); }

Block block_from_hex(const char* hex) {
  const Bytes b = from_hex(hex);
  Block out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

const DeviceKey kKey = DeviceKey::from_hex("000102030405060708090A0B0C0D0E0F");

}  // namespace

TEST_CASE("xtea published vectors") {
  CHECK(vec(xtea_encrypt_block(DeviceKey{}, Block{})) == from_hex("DEE9D4D8F7131ED9"));
  CHECK(vec(xtea_encrypt_block(kKey, block_from_hex("4142434445464748"))) == from_hex("497DF3D072612CB5"));
  CHECK(vec(xtea_decrypt_block(kKey, block_from_hex("497DF3D072612CB5"))) == from_hex("4142434445464748"));
}

TEST_CASE("xtea agrees with the reference routine on the zero vector") {
  CHECK(vec(xtea_encrypt_block(DeviceKey{}, Block{})) == oracle::xtea_block(Bytes(16, 0), Bytes(8, 0)));
}

TEST_CASE("xtea rejects blocks that are not 8 bytes") {
  const Bytes seven(7, 0);
  CHECK_THROWS_AS(xtea_encrypt_block(kKey, ByteView(seven)), Error);
  try {
    xtea_decrypt_block(kKey, ByteView(Bytes(9, 0)));
    FAIL("expected BadBlockLength");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadBlockLength);
  }
}

TEST_CASE("one key bit flips at least 20 ciphertext bits") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<std::uint8_t, 16> k{};
    for (auto& b : k) b = static_cast<std::uint8_t>(rng());
    std::array<std::uint8_t, 16> k2 = k;
    k2[static_cast<std::size_t>(trial % 16)] ^= static_cast<std::uint8_t>(1u << (trial % 8));
    Block p{};
    for (auto& b : p) b = static_cast<std::uint8_t>(rng());
    const Block a = xtea_encrypt_block(DeviceKey(k), p);
    const Block c = xtea_encrypt_block(DeviceKey(k2), p);
    int bits = 0;
    for (std::size_t i = 0; i < 8; ++i) bits += std::popcount(static_cast<unsigned>(a[i] ^ c[i]));
    CHECK(bits >= 20);
  }
}

TEST_CASE("ctr mode") {
  const Nonce nonce = nonce_for_sequence(0x11223344);
  CHECK(vec(nonce) == from_hex("4433221100000000"));
  CHECK(vec(ctr_counter_block(nonce, 0)) == vec(nonce));
  CHECK(vec(ctr_counter_block(nonce, 0x01020304)) == from_hex("4433221104030201"));

  SUBCASE("empty plaintext") {
    const EncryptedBody e = encrypt_payload(kKey, nonce, Bytes{});
    CHECK(e.ciphertext.empty());
  }
  SUBCASE("keystream block 0 is the encrypted counter block") {
    const Bytes zeros(8, 0);
    const Bytes ks = xtea_ctr(kKey, nonce, zeros);
    CHECK(ks == oracle::xtea_block(vec(kKey.bytes()), vec(nonce)));
  }
  SUBCASE("64 KiB round trip") {
    std::mt19937 rng(3);
    Bytes p(65536 + 3);
    for (auto& b : p) b = static_cast<std::uint8_t>(rng());
    const EncryptedBody e = encrypt_payload(kKey, nonce, p);
    CHECK(e.ciphertext.size() == p.size());
    CHECK(e.ciphertext != p);
    CHECK(decrypt_payload(kKey, e) == p);
  }
}

TEST_CASE("subkey derivation") {
  const DeviceKey sign = derive_subkey(kKey, kSignLabel);
  const DeviceKey encr = derive_subkey(kKey, kEncryptLabel);
  CHECK(sign == derive_subkey(kKey, kSignLabel));
  CHECK(sign != encr);
  CHECK(sign.bytes().size() == 16);

  const std::string label = "SIGN0001";
  Bytes lo(label.begin(), label.end());
  Bytes hi = lo;
  for (auto& b : hi) b = static_cast<std::uint8_t>(~b);
  Bytes expected = oracle::xtea_block(vec(kKey.bytes()), lo);
  const Bytes upper = oracle::xtea_block(vec(kKey.bytes()), hi);
  expected.insert(expected.end(), upper.begin(), upper.end());
  CHECK(vec(sign.bytes()) == expected);

  try {
    derive_subkey(kKey, "XXXX0001");
    FAIL("expected BadLabel");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadLabel);
  }
}

TEST_CASE("cbc-mac") {
  const DeviceKey sub = derive_subkey(kKey, kSignLabel);
  const Bytes msg = from_hex("0A0B0C0D0E0F0D0300");

  CHECK(mac(sub, msg) == mac(sub, msg));
  Bytes flipped = msg;
  flipped[3] ^= 0x10;
  CHECK(mac(sub, flipped) != mac(sub, msg));
  // Empty message: only the length block is chained.
  CHECK(vec(mac(sub, Bytes{})) == oracle::xtea_block(vec(sub.bytes()), Bytes(8, 0)));
  // Length prefix separates m from m || 00.
  Bytes padded = msg;
  padded.push_back(0);
  CHECK(mac(sub, padded) != mac(sub, msg));

  CHECK(verify_mac(sub, msg, mac(sub, msg)));
  Tag bad = mac(sub, msg);
  bad[7] ^= 1;
  CHECK_FALSE(verify_mac(sub, msg, bad));
}

TEST_CASE("sealed frames") {
  FrameHeader h;
  h.device_id = TrackerId::parse("0A0B0C0D0E0F");
  h.firmware_version = 781;
  h.sequence = 42;
  Megadump m;
  m.header = h;
  m.overall.timestamp = 1484478000;
  m.overall.steps = 300;
  const Bytes body = encode_megadump_body(m);
  const Bytes wire = seal_frame(h, body, kKey);

  const RawFrame raw = split_frame(wire);
  CHECK(raw.header.encrypted);
  CHECK(raw.header.authenticated);
  CHECK(raw.header.device_id == h.device_id);
  CHECK(raw.body != body);
  CHECK(raw.body.size() == body.size());
  CHECK(raw.footer.crc == crc_ccitt(raw.body));
  REQUIRE(raw.tag.has_value());
  CHECK(verify_frame_tag(wire, kKey));
  CHECK(open_body(raw, kKey) == body);
  CHECK(decode_megadump_with_key(wire, kKey).overall.steps == 300);

  CHECK_FALSE(verify_frame_tag(wire, DeviceKey{}));
  Bytes tampered = wire;
  tampered[kHeaderSize] ^= 1;
  CHECK_FALSE(verify_frame_tag(tampered, kKey));
  CHECK_FALSE(verify_frame_tag(Bytes{}, kKey));
  CHECK_FALSE(verify_frame_tag(encode_megadump(m), kKey));
}

TEST_CASE("keystore text") {
  const auto keys = parse_keystore(
      "# tracker keys\n"
      "0A0B0C0D0E0F 000102030405060708090A0B0C0D0E0F\n"
      "\n"
      "111111111111 FFEEDDCCBBAA99887766554433221100  # spare\n");
  REQUIRE(keys.size() == 2);
  CHECK(keys.at(TrackerId::parse("0A0B0C0D0E0F")) == kKey);
  CHECK(parse_keystore(format_keystore(keys)) == keys);
  CHECK_THROWS_AS(parse_keystore("0A0B0C0D0E0F\n"), Error);
  CHECK_THROWS_AS(parse_keystore("0A0B0C0D0E0F 0011\n"), Error);
  try {
    load_keystore("/nonexistent/keys.txt");
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Io);
  }
}
