#include "semirl/env.hpp"

#include <stdexcept>

namespace semirl {

State initial_state(ContextId x, int horizon, std::uint8_t m0) {
  if (horizon < 1) throw std::invalid_argument("initial_state: horizon must be >= 1");
  State s;
  s.context = x;
  s.horizon = horizon;
  s.mask_bits.push_back(m0);
  return s;
}

void transition(State& s, TokenId realized, std::uint8_t next_mask_bit) {
  if (static_cast<int>(s.tokens.size()) >= s.horizon)
    throw std::invalid_argument("transition: appending beyond horizon");
  s.tokens.push_back(realized);
  s.mask_bits.push_back(next_mask_bit);
}

namespace {

void check_rollout_args(const TaskSpec& task, ContextId x, std::span<const TokenId> static_seq,
                        const MaskVector& mask) {
  if (x < 0 || x >= task.contexts) throw std::invalid_argument("rollout: context out of range");
  if (static_cast<int>(static_seq.size()) != task.horizon ||
      mask.horizon() != task.horizon)
    throw std::invalid_argument("rollout: static/mask length != horizon");
}

// Shared body of the sequential settings; `kind` picks the observation fed to
// the policy at masked steps.
TrajectoryBatch rollout_sequential(const Policy& policy, const TaskSpec& task, ContextId x,
                                   std::span<const TokenId> static_seq, const MaskVector& mask,
                                   SeededRng& rng, FpLedger& ledger, ObsKind kind) {
  check_rollout_args(task, x, static_seq, mask);
  const int T = task.horizon;

  TrajectoryBatch batch;
  batch.context = x;
  batch.static_seq.assign(static_seq.begin(), static_seq.end());
  batch.mask = mask;
  batch.obs_kind = kind;
  batch.obs_taint.assign(static_cast<std::size_t>(T), 0);

  const std::uint64_t fp0 = ledger.count;
  std::vector<TokenId> traj;
  traj.reserve(static_cast<std::size_t>(T));
  bool sampled_before = false;
  for (int t = 0; t < T; ++t) {
    if (mask.bits[static_cast<std::size_t>(t)]) {
      Observation obs;
      if (kind == ObsKind::FullState) {
        obs = full_state_observation(
            x, traj, std::span<const std::uint8_t>(mask.bits.data(), traj.size()));
      } else {
        VariantArgs args;
        args.realized = &traj;
        obs = variant_observation(ObsKind::ScheduledSampling, task.vocab, x, static_seq, mask,
                                  args);
      }
      // The observation exposes realized tokens, so it is tainted as soon as
      // an earlier position was sampled.
      batch.obs_taint[static_cast<std::size_t>(t)] = sampled_before ? 1 : 0;
      const int pos[] = {t};
      auto rows = distributions(policy, obs, pos, ledger);
      traj.push_back(rng.categorical(rows[0]));
      sampled_before = true;
    } else {
      traj.push_back(static_seq[static_cast<std::size_t>(t)]);
    }
  }
  batch.fp_cost = ledger.count - fp0;
  batch.rewards.push_back(task_reward(task, x, traj));
  batch.samples.push_back(std::move(traj));
  return batch;
}

}  // namespace

TrajectoryBatch rollout_fully_observable(const Policy& policy, const TaskSpec& task, ContextId x,
                                         std::span<const TokenId> static_seq,
                                         const MaskVector& mask, SeededRng& rng,
                                         FpLedger& ledger) {
  return rollout_sequential(policy, task, x, static_seq, mask, rng, ledger, ObsKind::FullState);
}

TrajectoryBatch rollout_scheduled_sampling(const Policy& policy, const TaskSpec& task, ContextId x,
                                           std::span<const TokenId> static_seq,
                                           const MaskVector& mask, SeededRng& rng,
                                           FpLedger& ledger) {
  return rollout_sequential(policy, task, x, static_seq, mask, rng, ledger,
                            ObsKind::ScheduledSampling);
}

TrajectoryBatch rollout_masked_parallel(const Policy& policy, const TaskSpec& task, ContextId x,
                                        std::span<const TokenId> static_seq,
                                        const MaskVector& mask, int k_samples, SeededRng& rng,
                                        FpLedger& ledger, ObsKind kind, double noise_rate) {
  check_rollout_args(task, x, static_seq, mask);
  if (k_samples < 1) throw std::invalid_argument("rollout_masked_parallel: K must be >= 1");
  if (kind != ObsKind::Masked && kind != ObsKind::NoisyMask && kind != ObsKind::AllAug &&
      kind != ObsKind::PreAug)
    throw std::invalid_argument("rollout_masked_parallel: not a masked-family observation");
  const int T = task.horizon;

  TrajectoryBatch batch;
  batch.context = x;
  batch.static_seq.assign(static_seq.begin(), static_seq.end());
  batch.mask = mask;
  batch.obs_kind = kind;
  batch.noise_rate = (kind == ObsKind::NoisyMask) ? noise_rate : 0.0;

  VariantArgs args;
  args.noise_rate = noise_rate;
  args.rng = &rng;
  Observation obs = variant_observation(kind, task.vocab, x, static_seq, mask, args);
  batch.shared_obs = obs;

  std::vector<int> positions;
  for (int t = 0; t < T; ++t)
    if (mask.bits[static_cast<std::size_t>(t)]) positions.push_back(t);

  const std::uint64_t fp0 = ledger.count;
  auto rows = distributions(policy, obs, positions, ledger);
  batch.fp_cost = ledger.count - fp0;

  batch.samples.reserve(static_cast<std::size_t>(k_samples));
  batch.rewards.reserve(static_cast<std::size_t>(k_samples));
  for (int k = 0; k < k_samples; ++k) {
    std::vector<TokenId> traj(static_seq.begin(), static_seq.end());
    for (std::size_t i = 0; i < positions.size(); ++i)
      traj[static_cast<std::size_t>(positions[i])] = rng.categorical(rows[i]);
    batch.rewards.push_back(task_reward(task, x, traj));
    batch.samples.push_back(std::move(traj));
  }
  return batch;
}

void attach_greedy_baseline(TrajectoryBatch& batch, const Policy& policy, const TaskSpec& task,
                            FpLedger& ledger) {
  auto greedy = greedy_decode(policy, batch.context, task.horizon, ledger);
  batch.greedy_reward = task_reward(task, batch.context, greedy);
}

StaticDataset build_static_dataset(const Policy& base_policy, const TaskSpec& task,
                                   DatasetMode mode, int k_candidates, SeededRng rng,
                                   FpLedger* gen_ledger) {
  StaticDataset ds;
  ds.provenance = mode;
  ds.entries.resize(static_cast<std::size_t>(task.contexts));

  if (mode == DatasetMode::GroundTruth) {
    for (int x = 0; x < task.contexts; ++x) ds.entries[static_cast<std::size_t>(x)] = task.target(x);
    return ds;
  }

  if (k_candidates < 1)
    throw std::invalid_argument("build_static_dataset: k_candidates must be >= 1");
  ds.candidate_rewards.resize(static_cast<std::size_t>(task.contexts));

  FpLedger local;
  FpLedger& scratch = gen_ledger ? *gen_ledger : local;
  const std::vector<TokenId> dummy_static(static_cast<std::size_t>(task.horizon), 0);
  MaskVector all_ones;
  all_ones.p_m = 1.0;
  all_ones.bits.assign(static_cast<std::size_t>(task.horizon), 1);

  for (int x = 0; x < task.contexts; ++x) {
    int best = 0;
    std::vector<std::vector<TokenId>> cands;
    auto& rewards = ds.candidate_rewards[static_cast<std::size_t>(x)];
    for (int c = 0; c < k_candidates; ++c) {
      SeededRng crng = rng.derive(mix_keys(0xda7aULL, static_cast<std::uint64_t>(x),
                                           static_cast<std::uint64_t>(c)));
      auto batch = rollout_fully_observable(base_policy, task, x, dummy_static, all_ones, crng,
                                            scratch);
      rewards.push_back(batch.rewards[0]);
      cands.push_back(std::move(batch.samples[0]));
      const bool better = (mode == DatasetMode::DataMinus) ? rewards[static_cast<std::size_t>(c)] < rewards[static_cast<std::size_t>(best)]
                                                           : rewards[static_cast<std::size_t>(c)] > rewards[static_cast<std::size_t>(best)];
      if (better) best = c;
    }
    ds.entries[static_cast<std::size_t>(x)] = std::move(cands[static_cast<std::size_t>(best)]);
  }
  return ds;
}

double win_rate(const Policy& policy, const StaticDataset& dataset, const TaskSpec& task,
                double p_m, int k_samples, SeededRng rng) {
  if (k_samples < 1) throw std::invalid_argument("win_rate: K must be >= 1");
  validate_dataset(dataset, task);
  FpLedger scratch;  // evaluation cost is not training cost
  long wins = 0;
  for (int x = 0; x < task.contexts; ++x) {
    auto greedy = greedy_decode(policy, x, task.horizon, scratch);
    const double g = task_reward(task, x, greedy);
    SeededRng xrng = rng.derive(static_cast<std::uint64_t>(x));
    MaskVector mask = build_mask(task.horizon, p_m, xrng);
    auto batch = rollout_masked_parallel(policy, task, x, dataset.entry(x), mask, k_samples,
                                         xrng, scratch);
    for (double r : batch.rewards)
      if (r > g) ++wins;
  }
  return static_cast<double>(wins) /
         (static_cast<double>(task.contexts) * static_cast<double>(k_samples));
}

}  // namespace semirl
