#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "semirl/rng.hpp"

namespace semirl {

// Per-position source indicator: bit t = 1 means position t is sampled from
// the model, 0 means it is copied from static data.
struct MaskVector {
  std::vector<std::uint8_t> bits;
  double p_m = 0.0;

  int horizon() const { return static_cast<int>(bits.size()); }

  int ones() const {
    int n = 0;
    for (auto b : bits) n += b;
    return n;
  }

  bool operator==(const MaskVector&) const = default;
};

inline MaskVector build_mask(int horizon, double p_m, SeededRng& rng) {
  if (horizon < 1) throw std::invalid_argument("build_mask: horizon must be >= 1");
  if (p_m < 0.0 || p_m > 1.0) throw std::invalid_argument("build_mask: p_m outside [0,1]");
  MaskVector m;
  m.p_m = p_m;
  m.bits.resize(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) m.bits[static_cast<std::size_t>(t)] = rng.bernoulli(p_m) ? 1 : 0;
  return m;
}

inline MaskVector fixed_mask(std::vector<std::uint8_t> bits, double p_m = 0.5) {
  MaskVector m;
  m.bits = std::move(bits);
  m.p_m = p_m;
  return m;
}

}  // namespace semirl
