#pragma once

#include <cstdint>
#include <stdexcept>

namespace semirl {

using TokenId = std::int32_t;
using ContextId = std::int32_t;

// Action tokens are 0..size-1. Sentinels sit directly above the action range:
// observations may carry them, actions never do.
struct Vocab {
  int size = 0;

  explicit Vocab(int s) : size(s) {
    if (s < 2) throw std::invalid_argument("Vocab: size must be >= 2");
  }

  TokenId mask_id() const { return size; }      // [M]
  TokenId null_id() const { return size + 1; }  // absent-token marker
  TokenId end_id() const { return size + 2; }   // separator for augmented views

  bool is_action(TokenId t) const { return t >= 0 && t < size; }
  bool is_sentinel(TokenId t) const { return t >= size && t <= size + 2; }

  bool operator==(const Vocab&) const = default;
};

}  // namespace semirl
