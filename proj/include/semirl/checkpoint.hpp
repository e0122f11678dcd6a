#pragma once

#include <string>

#include "semirl/policy.hpp"

namespace semirl {

// Binary policy checkpoint: 16-byte magic, then little-endian u32 fields
// (backend, vocab, horizon, contexts, feature variant), a u64 parameter
// count, and the raw parameters as little-endian IEEE-754 doubles. Bit-exact
// on reload.
inline constexpr char kCheckpointMagic[17] = "SEMIRL-CKPT-0001";

void save_checkpoint(const std::string& path, const Policy& policy);
Policy load_checkpoint(const std::string& path);

}  // namespace semirl
