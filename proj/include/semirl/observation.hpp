#pragma once

#include <optional>
#include <span>
#include <vector>

#include "semirl/mask.hpp"
#include "semirl/rng.hpp"
#include "semirl/vocab.hpp"

namespace semirl {

// Which view of the environment state the policy receives. The kind decides
// the RL setting (or ablation) a run operates in.
enum class ObsKind {
  FullState,          // realized tokens + mask bits (fully observable)
  MaxObs,             // mask bits + static tokens, NULL where sampled
  Masked,             // static tokens with [M] at sampled positions
  ScheduledSampling,  // realized tokens, no mask bits
  NoisyMask,          // masked view where some masked positions lie (show static)
  AllAug,             // masked view + full static sequence behind an END separator
  PreAug,             // masked view + per-position static token side channel
  OfflineStatic,      // static tokens verbatim (teacher forcing input)
};

const char* obs_kind_name(ObsKind k);

struct Observation {
  ObsKind kind = ObsKind::Masked;
  ContextId context = 0;
  // Shown token or sentinel per covered position. Sequential kinds cover a
  // prefix; masked-family kinds cover the whole horizon.
  std::vector<TokenId> slots;
  // Explicit mask bits, aligned with slots (FullState and MaxObs only).
  std::vector<std::uint8_t> mask_bits;
  // AllAug: [END, static_0..static_{T-1}]. PreAug: static_0..static_{T-1},
  // readable only at indices <= the queried position.
  std::vector<TokenId> side;
  double noise_rate = 0.0;

  bool operator==(const Observation&) const = default;
};

Observation masked_observation(const Vocab& vocab, ContextId x,
                               std::span<const TokenId> static_seq,
                               const MaskVector& mask);

Observation max_observation(const Vocab& vocab, ContextId x,
                            std::span<const TokenId> static_seq,
                            const MaskVector& mask);

Observation full_state_observation(ContextId x, std::span<const TokenId> realized_prefix,
                                   std::span<const std::uint8_t> mask_prefix);

// Teacher-forcing input: static tokens with the flagged positions replaced by
// [M]. Empty flags means no corruption.
Observation offline_observation(const Vocab& vocab, ContextId x,
                                std::span<const TokenId> static_seq,
                                std::span<const std::uint8_t> corrupt_flags = {});

// Noisy masked view with the lie pattern given explicitly: masked positions
// with lie flag set display the static token instead of [M].
Observation noisy_mask_observation(const Vocab& vocab, ContextId x,
                                   std::span<const TokenId> static_seq,
                                   const MaskVector& mask,
                                   std::span<const std::uint8_t> lie_flags,
                                   double noise_rate);

struct VariantArgs {
  const std::vector<TokenId>* realized = nullptr;  // ScheduledSampling, FullState
  std::optional<double> noise_rate;                // NoisyMask
  SeededRng* rng = nullptr;                        // NoisyMask lie draws
};

// Dispatcher over every observation kind; throws when a kind's required
// argument is missing.
Observation variant_observation(ObsKind kind, const Vocab& vocab, ContextId x,
                                std::span<const TokenId> static_seq,
                                const MaskVector& mask, const VariantArgs& args = {});

}  // namespace semirl
