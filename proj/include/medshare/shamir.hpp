#pragma once

#include <vector>

#include "medshare/field.hpp"
#include "medshare/rng.hpp"

namespace medshare::shamir {

struct Share {
  uint32_t x = 0;  // evaluation point, never 0 (x=0 holds the secret)
  field::Fe y;
};

// Classic (t, n) Shamir split over GF(2^255 - 19): degree t-1 polynomial with
// constant term = secret, share j = evaluation at x = j (1-based).
// Requires 1 <= t <= n. Throws std::invalid_argument otherwise.
std::vector<Share> split(const field::Fe& secret, uint32_t threshold, uint32_t count, Rng& rng);

// Lagrange interpolation at x = 0 through all given points. The caller picks
// which t shares to pass; passing fewer than the split threshold yields an
// unrelated value, not an error. Throws std::invalid_argument on an empty
// share list or duplicate x coordinates.
field::Fe reconstruct(const std::vector<Share>& shares);

}  // namespace medshare::shamir
