#pragma once

#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>

#include "medshare/bytes.hpp"

// Binary wire format used for ciphertexts, keys, signatures, contract call
// arguments and CAS objects: little-endian integers, length-prefixed
// variable fields, version byte first on top-level objects. Layouts are
// documented in docs/FORMATS.md; CAS digests depend on their stability.

namespace medshare::serial {

class DecodeError : public std::runtime_error {
 public:
  explicit DecodeError(const std::string& what) : std::runtime_error("decode: " + what) {}
};

class Writer {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void raw(ByteView b) { append(buf_, b); }
  template <size_t N>
  void fixed(const std::array<uint8_t, N>& a) {
    raw(ByteView(a.data(), N));
  }
  void blob(ByteView b) {  // u32 length prefix
    u32(static_cast<uint32_t>(b.size()));
    raw(b);
  }
  void str(const std::string& s) { blob(ByteView(reinterpret_cast<const uint8_t*>(s.data()), s.size())); }

  const Bytes& bytes() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  Bytes raw(size_t n) {
    need(n);
    Bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  template <size_t N>
  std::array<uint8_t, N> fixed() {
    need(N);
    std::array<uint8_t, N> out{};
    std::memcpy(out.data(), data_.data() + pos_, N);
    pos_ += N;
    return out;
  }
  Bytes blob() {
    uint32_t n = u32();
    return raw(n);
  }
  std::string str() {
    Bytes b = blob();
    return std::string(b.begin(), b.end());
  }

  size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const {
    if (pos_ != data_.size()) throw DecodeError("trailing bytes");
  }

 private:
  void need(size_t n) const {
    if (data_.size() - pos_ < n) throw DecodeError("truncated input");
  }
  ByteView data_;
  size_t pos_ = 0;
};

}  // namespace medshare::serial
