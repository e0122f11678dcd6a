#pragma once

#include <optional>
#include <span>
#include <vector>

#include "semirl/ledger.hpp"
#include "semirl/mask.hpp"
#include "semirl/observation.hpp"
#include "semirl/policy.hpp"
#include "semirl/task.hpp"

namespace semirl {

// Environment state: context, realized tokens so far, and the mask prefix
// M_0..M_t (always one bit ahead of the tokens).
struct State {
  ContextId context = 0;
  int horizon = 0;
  std::vector<TokenId> tokens;
  std::vector<std::uint8_t> mask_bits;
};

State initial_state(ContextId x, int horizon, std::uint8_t m0);
// Appends the realized token for the current step and the next mask bit.
void transition(State& s, TokenId realized, std::uint8_t next_mask_bit);

struct TrajectoryBatch {
  ContextId context = 0;
  std::vector<TokenId> static_seq;
  MaskVector mask;
  ObsKind obs_kind = ObsKind::Masked;
  double noise_rate = 0.0;
  // Masked-family rollouts share one observation across every sample.
  std::optional<Observation> shared_obs;
  std::vector<std::vector<TokenId>> samples;  // K x T
  std::vector<double> rewards;                // K
  std::uint64_t fp_cost = 0;
  // Sequential rollouts: step t's observation contained a sampled token.
  std::vector<std::uint8_t> obs_taint;
  std::optional<double> greedy_reward;  // attached for self-critic baselines

  int sample_count() const { return static_cast<int>(samples.size()); }
};

// Sequential rollout that conditions on the full state; the policy runs once
// per masked position, so the ledger grows by sum(mask).
TrajectoryBatch rollout_fully_observable(const Policy& policy, const TaskSpec& task, ContextId x,
                                         std::span<const TokenId> static_seq,
                                         const MaskVector& mask, SeededRng& rng, FpLedger& ledger);

// One policy invocation evaluates every masked position; K samples are drawn
// per position from the same distributions. Ledger grows by exactly 1
// whatever K and the mask are. `kind` selects the masked-family observation
// fed to the policy (Masked, NoisyMask, AllAug, PreAug).
TrajectoryBatch rollout_masked_parallel(const Policy& policy, const TaskSpec& task, ContextId x,
                                        std::span<const TokenId> static_seq,
                                        const MaskVector& mask, int k_samples, SeededRng& rng,
                                        FpLedger& ledger, ObsKind kind = ObsKind::Masked,
                                        double noise_rate = 0.0);

// Sequential rollout fed mixed tokens without mask bits.
TrajectoryBatch rollout_scheduled_sampling(const Policy& policy, const TaskSpec& task, ContextId x,
                                           std::span<const TokenId> static_seq,
                                           const MaskVector& mask, SeededRng& rng,
                                           FpLedger& ledger);

// Computes the greedy decode reward for the batch context and stores it on
// the batch; the decode is billed to `ledger` (horizon FPs).
void attach_greedy_baseline(TrajectoryBatch& batch, const Policy& policy, const TaskSpec& task,
                            FpLedger& ledger);

// GroundTruth copies the targets. DataMinus/DataPlus draw k_candidates full
// sequences per context by sequential ancestral sampling from `base_policy`,
// score them with the task reward, and keep the arg-min/arg-max (first index
// wins ties). Candidate rewards are retained. Pre-generation FPs are billed
// to `gen_ledger` when given; they are never training cost.
StaticDataset build_static_dataset(const Policy& base_policy, const TaskSpec& task,
                                   DatasetMode mode, int k_candidates, SeededRng rng,
                                   FpLedger* gen_ledger = nullptr);

// Fraction of masked-parallel samples (K per context, one fresh mask per
// context) whose reward strictly exceeds the greedy decode reward.
double win_rate(const Policy& policy, const StaticDataset& dataset, const TaskSpec& task,
                double p_m, int k_samples, SeededRng rng);

}  // namespace semirl
