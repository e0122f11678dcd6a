#pragma once

#include <cstdint>

namespace semirl {

// Counts policy forward propagations: one unit per policy invocation over one
// observation, no matter how many positions that invocation evaluates in
// parallel. This is the artifact's cost currency.
struct FpLedger {
  std::uint64_t count = 0;
  void add(std::uint64_t n = 1) { count += n; }
};

}  // namespace semirl
