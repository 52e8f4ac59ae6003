#include "medshare/shamir.hpp"

#include <set>

namespace medshare::shamir {

using field::Fe;

std::vector<Share> split(const Fe& secret, uint32_t threshold, uint32_t count, Rng& rng) {
  if (threshold < 1) throw std::invalid_argument("shamir: threshold must be >= 1");
  if (threshold > count) throw std::invalid_argument("shamir: threshold exceeds share count");

  // coeffs[0] = secret, higher coefficients random
  std::vector<Fe> coeffs;
  coeffs.reserve(threshold);
  coeffs.push_back(secret);
  for (uint32_t i = 1; i < threshold; ++i) coeffs.push_back(Fe::random(rng));

  std::vector<Share> shares;
  shares.reserve(count);
  for (uint32_t j = 1; j <= count; ++j) {
    Fe x(j);
    Fe acc;  // Horner
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    shares.push_back({j, acc});
  }
  return shares;
}

Fe reconstruct(const std::vector<Share>& shares) {
  if (shares.empty()) throw std::invalid_argument("shamir: no shares");
  std::set<uint32_t> seen;
  for (const Share& s : shares) {
    if (s.x == 0) throw std::invalid_argument("shamir: share at x=0");
    if (!seen.insert(s.x).second) throw std::invalid_argument("shamir: duplicate x coordinate");
  }

  Fe secret;
  for (size_t i = 0; i < shares.size(); ++i) {
    Fe xi(shares[i].x);
    // basis at 0: prod_{j!=i} x_j / (x_j - x_i)
    Fe num(1), den(1);
    for (size_t j = 0; j < shares.size(); ++j) {
      if (j == i) continue;
      Fe xj(shares[j].x);
      num = num * xj;
      den = den * (xj - xi);
    }
    secret = secret + shares[i].y * num * den.inverse();
  }
  return secret;
}

}  // namespace medshare::shamir
