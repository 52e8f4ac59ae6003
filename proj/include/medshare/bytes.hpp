#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace medshare {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;
using Hash256 = std::array<uint8_t, 32>;
using Address = std::array<uint8_t, 20>;

inline Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

inline void append(Bytes& out, ByteView more) { out.insert(out.end(), more.begin(), more.end()); }

inline Bytes concat(ByteView a, ByteView b) {
  Bytes out(a.begin(), a.end());
  append(out, b);
  return out;
}

// Lowercase hex, no prefix. Digests render as 64 chars, addresses as 40.
std::string hex_encode(ByteView data);
Bytes hex_decode(const std::string& hex);  // throws std::invalid_argument

template <size_t N>
std::string hex_encode(const std::array<uint8_t, N>& a) {
  return hex_encode(ByteView(a.data(), N));
}

template <size_t N>
std::array<uint8_t, N> hex_decode_fixed(const std::string& hex) {
  Bytes b = hex_decode(hex);
  if (b.size() != N) throw std::invalid_argument("hex: expected " + std::to_string(N) + " bytes");
  std::array<uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

}  // namespace medshare
