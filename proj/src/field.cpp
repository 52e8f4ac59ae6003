#include "medshare/field.hpp"

namespace medshare::field {

const Int& modulus() {
  static const Int p = (Int(1) << 255) - 19;
  return p;
}

void Fe::reduce() {
  v_ %= modulus();
  if (v_ < 0) v_ += modulus();
}

Fe Fe::from_bytes(const std::array<uint8_t, 32>& be) {
  Int v = 0;
  for (uint8_t b : be) v = (v << 8) | b;
  return Fe(std::move(v));
}

Fe Fe::random(Rng& rng) {
  for (;;) {
    auto raw = rng.fixed<32>();
    raw[0] &= 0x7f;  // candidate < 2^255; reject the 19 values >= p
    Int v = 0;
    for (uint8_t b : raw) v = (v << 8) | b;
    if (v < modulus()) return Fe(std::move(v));
  }
}

std::array<uint8_t, 32> Fe::to_bytes() const {
  std::array<uint8_t, 32> out{};
  Int v = v_;
  for (int i = 31; i >= 0; --i) {
    out[i] = static_cast<uint8_t>(v & 0xff);
    v >>= 8;
  }
  return out;
}

Fe Fe::operator+(const Fe& o) const { return Fe(v_ + o.v_); }
Fe Fe::operator-(const Fe& o) const { return Fe(v_ - o.v_ + modulus()); }
Fe Fe::operator*(const Fe& o) const { return Fe(v_ * o.v_); }

Fe Fe::inverse() const {
  if (v_ == 0) throw std::domain_error("field: zero has no inverse");
  // extended Euclid; p prime so gcd(v, p) == 1
  Int a = v_, b = modulus();
  Int x0 = 1, x1 = 0;
  while (b != 0) {
    Int q = a / b;
    Int t = a - q * b;
    a = b;
    b = t;
    t = x0 - q * x1;
    x0 = x1;
    x1 = t;
  }
  return Fe(std::move(x0));
}

}  // namespace medshare::field
