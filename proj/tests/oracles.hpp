#pragma once

// Reference routines written independently of the library, used to check it.

#include <cstddef>
#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

// CRC-16/CCITT-FALSE, one bit at a time through the shift register.
inline std::uint16_t crc16_bitwise(const std::vector<std::uint8_t>& data) {
  std::uint16_t reg = 0xFFFF;
  for (std::uint8_t byte : data) {
    for (int bit = 7; bit >= 0; --bit) {
      const bool in = ((byte >> bit) & 1) != 0;
      const bool top = (reg & 0x8000) != 0;
      reg = static_cast<std::uint16_t>(reg << 1);
      if (in != top) reg ^= 0x1021;
    }
  }
  return reg;
}

// Needham and Wheeler's XTEA routine on 32-bit words.
inline void xtea_encipher(unsigned num_rounds, std::uint32_t v[2], const std::uint32_t key[4]) {
  std::uint32_t v0 = v[0], v1 = v[1], sum = 0;
  const std::uint32_t delta = 0x9E3779B9;
  for (unsigned i = 0; i < num_rounds; i++) {
    v0 += (((v1 << 4) ^ (v1 >> 5)) + v1) ^ (sum + key[sum & 3]);
    sum += delta;
    v1 += (((v0 << 4) ^ (v0 >> 5)) + v0) ^ (sum + key[(sum >> 11) & 3]);
  }
  v[0] = v0;
  v[1] = v1;
}

// Byte-level wrapper: big-endian words, 32 cycles.
inline std::vector<std::uint8_t> xtea_block(const std::vector<std::uint8_t>& key16,
                                            const std::vector<std::uint8_t>& block8) {
  auto word = [](const std::vector<std::uint8_t>& b, std::size_t i) {
    return (std::uint32_t{b[i]} << 24) | (std::uint32_t{b[i + 1]} << 16) | (std::uint32_t{b[i + 2]} << 8) |
           std::uint32_t{b[i + 3]};
  };
  std::uint32_t k[4] = {word(key16, 0), word(key16, 4), word(key16, 8), word(key16, 12)};
  std::uint32_t v[2] = {word(block8, 0), word(block8, 4)};
  xtea_encipher(32, v, k);
  std::vector<std::uint8_t> out;
  for (std::uint32_t w : v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(w >> s));
  }
  return out;
}

inline bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline int days_in_month(int y, int m) {
  static const int table[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : table[m - 1];
}

// Counts whole days forward from 1970-01-01. Years >= 1970 only.
inline std::int64_t unix_time(int year, int month, int day, int hour = 0, int minute = 0, int second = 0) {
  std::int64_t days = 0;
  for (int y = 1970; y < year; ++y) days += is_leap(y) ? 366 : 365;
  for (int m = 1; m < month; ++m) days += days_in_month(year, m);
  days += day - 1;
  return days * 86400 + hour * 3600 + minute * 60 + second;
}

// "YYYY-MM-DD" by walking days forward from the epoch.
inline std::string date_of(std::int64_t unix_seconds) {
  std::int64_t days = unix_seconds / 86400;
  int y = 1970;
  while (days >= (is_leap(y) ? 366 : 365)) days -= is_leap(y++) ? 366 : 365;
  int m = 1;
  while (days >= days_in_month(y, m)) days -= days_in_month(y, m++);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, static_cast<int>(days) + 1);
  return buf;
}

}  // namespace oracle
