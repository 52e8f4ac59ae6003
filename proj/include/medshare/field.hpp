#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "medshare/bytes.hpp"
#include "medshare/rng.hpp"

namespace medshare::field {

using Int = boost::multiprecision::cpp_int;

// Shamir shares live in GF(p) with p = 2^255 - 19; large enough that field
// elements carry 255-bit secrets, small enough to encode in 32 bytes.
const Int& modulus();

// Field element, invariant 0 <= value < p.
class Fe {
 public:
  Fe() : v_(0) {}
  explicit Fe(uint64_t v) : v_(v) { reduce(); }
  explicit Fe(Int v) : v_(std::move(v)) { reduce(); }

  static Fe from_bytes(const std::array<uint8_t, 32>& be);  // big-endian, reduced mod p
  // Uniform element in [0, p) by rejection sampling.
  static Fe random(Rng& rng);

  std::array<uint8_t, 32> to_bytes() const;  // big-endian, 32 bytes

  Fe operator+(const Fe& o) const;
  Fe operator-(const Fe& o) const;
  Fe operator*(const Fe& o) const;
  Fe inverse() const;  // throws std::domain_error on zero

  bool operator==(const Fe& o) const = default;
  bool is_zero() const { return v_ == 0; }
  const Int& value() const { return v_; }

 private:
  void reduce();
  Int v_;
};

}  // namespace medshare::field
