#include "medshare/hash.hpp"

#include <openssl/evp.h>

#include <cstring>

namespace medshare {

Hash256 sha256(ByteView data) {
  Hash256 out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha256: digest failure");
  }
  return out;
}

Hash256 tagged_hash(const std::string& tag, ByteView data) {
  Bytes buf(tag.begin(), tag.end());
  append(buf, data);
  return sha256(buf);
}

Address address_from(ByteView data) {
  Hash256 h = sha256(data);
  Address a{};
  std::memcpy(a.data(), h.data() + (h.size() - a.size()), a.size());
  return a;
}

std::string hex_encode(ByteView data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

static int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

Bytes hex_decode(const std::string& hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("hex: odd length");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("hex: invalid character at offset " + std::to_string(i));
    out.push_back(static_cast<uint8_t>((hi << 4) | lo));
  }
  return out;
}

}  // namespace medshare
