#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ecc {

// FNV-1a, 64 bit. Stable across platforms; used for content hashes and ids.
inline std::uint64_t fnv1a64(std::string_view data,
                             std::uint64_t state = 14695981039346656037ull) {
  for (unsigned char c : data) {
    state ^= c;
    state *= 1099511628211ull;
  }
  return state;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::string to_hex(std::uint64_t value, int digits = 16) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

inline std::string hash_hex(std::string_view data, int digits = 16) {
  return to_hex(fnv1a64(data), digits);
}

}  // namespace ecc
