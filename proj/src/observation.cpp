#include "semirl/observation.hpp"

#include <stdexcept>

namespace semirl {

namespace {

void check_lengths(std::span<const TokenId> static_seq, const MaskVector& mask) {
  if (static_seq.size() != mask.bits.size())
    throw std::invalid_argument("observation: |static| != |mask|");
}

}  // namespace

const char* obs_kind_name(ObsKind k) {
  switch (k) {
    case ObsKind::FullState: return "full_state";
    case ObsKind::MaxObs: return "max_obs";
    case ObsKind::Masked: return "masked";
    case ObsKind::ScheduledSampling: return "scheduled_sampling";
    case ObsKind::NoisyMask: return "noisy_mask";
    case ObsKind::AllAug: return "all_aug";
    case ObsKind::PreAug: return "pre_aug";
    case ObsKind::OfflineStatic: return "offline_static";
  }
  return "?";
}

Observation masked_observation(const Vocab& vocab, ContextId x,
                               std::span<const TokenId> static_seq, const MaskVector& mask) {
  check_lengths(static_seq, mask);
  Observation o;
  o.kind = ObsKind::Masked;
  o.context = x;
  o.slots.resize(static_seq.size());
  for (std::size_t t = 0; t < static_seq.size(); ++t)
    o.slots[t] = mask.bits[t] ? vocab.mask_id() : static_seq[t];
  return o;
}

Observation max_observation(const Vocab& vocab, ContextId x,
                            std::span<const TokenId> static_seq, const MaskVector& mask) {
  check_lengths(static_seq, mask);
  Observation o;
  o.kind = ObsKind::MaxObs;
  o.context = x;
  o.slots.resize(static_seq.size());
  o.mask_bits.assign(mask.bits.begin(), mask.bits.end());
  for (std::size_t t = 0; t < static_seq.size(); ++t)
    o.slots[t] = mask.bits[t] ? vocab.null_id() : static_seq[t];
  return o;
}

Observation full_state_observation(ContextId x, std::span<const TokenId> realized_prefix,
                                   std::span<const std::uint8_t> mask_prefix) {
  if (realized_prefix.size() != mask_prefix.size())
    throw std::invalid_argument("full_state_observation: prefix length mismatch");
  Observation o;
  o.kind = ObsKind::FullState;
  o.context = x;
  o.slots.assign(realized_prefix.begin(), realized_prefix.end());
  o.mask_bits.assign(mask_prefix.begin(), mask_prefix.end());
  return o;
}

Observation offline_observation(const Vocab& vocab, ContextId x,
                                std::span<const TokenId> static_seq,
                                std::span<const std::uint8_t> corrupt_flags) {
  if (!corrupt_flags.empty() && corrupt_flags.size() != static_seq.size())
    throw std::invalid_argument("offline_observation: corrupt flag length mismatch");
  Observation o;
  o.kind = ObsKind::OfflineStatic;
  o.context = x;
  o.slots.assign(static_seq.begin(), static_seq.end());
  if (!corrupt_flags.empty()) {
    for (std::size_t t = 0; t < o.slots.size(); ++t)
      if (corrupt_flags[t]) o.slots[t] = vocab.mask_id();
  }
  return o;
}

Observation noisy_mask_observation(const Vocab& vocab, ContextId x,
                                   std::span<const TokenId> static_seq, const MaskVector& mask,
                                   std::span<const std::uint8_t> lie_flags, double noise_rate) {
  check_lengths(static_seq, mask);
  if (lie_flags.size() != static_seq.size())
    throw std::invalid_argument("noisy_mask_observation: lie flag length mismatch");
  Observation o;
  o.kind = ObsKind::NoisyMask;
  o.context = x;
  o.noise_rate = noise_rate;
  o.slots.resize(static_seq.size());
  for (std::size_t t = 0; t < static_seq.size(); ++t) {
    if (mask.bits[t] && !lie_flags[t])
      o.slots[t] = vocab.mask_id();
    else
      o.slots[t] = static_seq[t];  // unmasked, or masked-but-lied-about
  }
  return o;
}

Observation variant_observation(ObsKind kind, const Vocab& vocab, ContextId x,
                                std::span<const TokenId> static_seq, const MaskVector& mask,
                                const VariantArgs& args) {
  switch (kind) {
    case ObsKind::Masked:
      return masked_observation(vocab, x, static_seq, mask);
    case ObsKind::MaxObs:
      return max_observation(vocab, x, static_seq, mask);
    case ObsKind::OfflineStatic:
      return offline_observation(vocab, x, static_seq);
    case ObsKind::FullState: {
      if (args.realized == nullptr)
        throw std::invalid_argument("variant_observation: FullState requires realized tokens");
      return full_state_observation(x, *args.realized,
                                    std::span<const std::uint8_t>(mask.bits.data(),
                                                                  args.realized->size()));
    }
    case ObsKind::ScheduledSampling: {
      if (args.realized == nullptr)
        throw std::invalid_argument(
            "variant_observation: ScheduledSampling requires realized tokens");
      Observation o;
      o.kind = ObsKind::ScheduledSampling;
      o.context = x;
      o.slots = *args.realized;  // mixed trajectory, no mask bits
      return o;
    }
    case ObsKind::NoisyMask: {
      if (!args.noise_rate.has_value())
        throw std::invalid_argument("variant_observation: NoisyMask requires noise_rate");
      if (*args.noise_rate < 0.0 || *args.noise_rate > 1.0)
        throw std::invalid_argument("variant_observation: noise_rate outside [0,1]");
      if (args.rng == nullptr)
        throw std::invalid_argument("variant_observation: NoisyMask requires an rng");
      std::vector<std::uint8_t> lies(static_seq.size(), 0);
      for (std::size_t t = 0; t < static_seq.size(); ++t)
        if (mask.bits[t]) lies[t] = args.rng->bernoulli(*args.noise_rate) ? 1 : 0;
      return noisy_mask_observation(vocab, x, static_seq, mask, lies, *args.noise_rate);
    }
    case ObsKind::AllAug: {
      Observation o = masked_observation(vocab, x, static_seq, mask);
      o.kind = ObsKind::AllAug;
      o.side.reserve(static_seq.size() + 1);
      o.side.push_back(vocab.end_id());
      o.side.insert(o.side.end(), static_seq.begin(), static_seq.end());
      return o;
    }
    case ObsKind::PreAug: {
      Observation o = masked_observation(vocab, x, static_seq, mask);
      o.kind = ObsKind::PreAug;
      o.side.assign(static_seq.begin(), static_seq.end());
      return o;
    }
  }
  throw std::invalid_argument("variant_observation: unknown kind");
}

}  // namespace semirl
