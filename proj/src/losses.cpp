#include "semirl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace semirl {

const char* baseline_kind_name(BaselineKind b) {
  switch (b) {
    case BaselineKind::BatchMean: return "batch_mean";
    case BaselineKind::SelfCritic: return "self_critic";
  }
  return "?";
}

namespace {

bool is_masked_family(ObsKind k) {
  return k == ObsKind::Masked || k == ObsKind::NoisyMask || k == ObsKind::AllAug ||
         k == ObsKind::PreAug;
}

std::vector<int> loss_positions(const TrajectoryBatch& batch, bool include_unmasked) {
  std::vector<int> pos;
  for (int t = 0; t < batch.mask.horizon(); ++t)
    if (include_unmasked || batch.mask.bits[static_cast<std::size_t>(t)]) pos.push_back(t);
  return pos;
}

double resolve_baseline(const Policy& policy, const TrajectoryBatch& batch, const RLHyper& hyper,
                        const TaskSpec* task, FpLedger* sc_ledger) {
  if (hyper.baseline == BaselineKind::BatchMean) {
    // Exact when every sample earned the same reward, so the centered terms
    // cancel to literal zero.
    bool all_equal = true;
    for (double r : batch.rewards) all_equal &= (r == batch.rewards.front());
    if (all_equal) return batch.rewards.front();
    double s = std::accumulate(batch.rewards.begin(), batch.rewards.end(), 0.0);
    return s / static_cast<double>(batch.rewards.size());
  }
  if (batch.greedy_reward.has_value()) return *batch.greedy_reward;
  if (task == nullptr)
    throw std::invalid_argument("rl_loss: SelfCritic baseline needs a task or a precomputed "
                                "greedy reward");
  FpLedger scratch;
  FpLedger& led = sc_ledger ? *sc_ledger : scratch;
  auto greedy = greedy_decode(policy, batch.context, task->horizon, led);
  return task_reward(*task, batch.context, greedy);
}

// Observation seen by sample k at step t. Masked-family batches share one
// observation; sequential batches are reconstructed from the sample prefix.
Observation observation_for(const TrajectoryBatch& batch, int k, int t) {
  if (is_masked_family(batch.obs_kind)) {
    if (!batch.shared_obs.has_value())
      throw std::invalid_argument("rl_loss: masked-family batch lacks its shared observation");
    return *batch.shared_obs;
  }
  const auto& sample = batch.samples[static_cast<std::size_t>(k)];
  std::vector<TokenId> prefix(sample.begin(), sample.begin() + t);
  if (batch.obs_kind == ObsKind::FullState) {
    return full_state_observation(
        batch.context, prefix,
        std::span<const std::uint8_t>(batch.mask.bits.data(), static_cast<std::size_t>(t)));
  }
  if (batch.obs_kind == ObsKind::ScheduledSampling) {
    Observation o;
    o.kind = ObsKind::ScheduledSampling;
    o.context = batch.context;
    o.slots = std::move(prefix);
    return o;
  }
  throw std::invalid_argument("rl_loss: unsupported batch observation kind");
}

}  // namespace

LossReport rl_loss(const Policy& policy, const TrajectoryBatch& batch, const RLHyper& hyper,
                   const TaskSpec* task, FpLedger* sc_ledger) {
  if (batch.samples.empty()) throw std::invalid_argument("rl_loss: empty batch");
  const int K = batch.sample_count();
  LossReport report;
  report.grads.assign(policy.params.size(), 0.0);
  report.baseline_used = resolve_baseline(policy, batch, hyper, task, sc_ledger);

  const std::vector<int> positions = loss_positions(batch, hyper.include_unmasked_positions);
  if (positions.empty()) return report;

  if (is_masked_family(batch.obs_kind)) {
    const Observation& obs = *batch.shared_obs;
    for (int t : positions) {
      const std::vector<double> row = policy_row(policy, obs, t);
      for (int k = 0; k < K; ++k) {
        const double coeff =
            -(batch.rewards[static_cast<std::size_t>(k)] - report.baseline_used) /
            static_cast<double>(K);
        if (coeff == 0.0) continue;
        const TokenId a = batch.samples[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
        report.scalar += coeff * std::log(row[static_cast<std::size_t>(a)]);
        accumulate_grad_log_prob(policy, obs, t, a, coeff, report.grads);
      }
    }
  } else {
    for (int k = 0; k < K; ++k) {
      const double coeff =
          -(batch.rewards[static_cast<std::size_t>(k)] - report.baseline_used) /
          static_cast<double>(K);
      if (coeff == 0.0) continue;
      for (int t : positions) {
        Observation obs = observation_for(batch, k, t);
        const TokenId a = batch.samples[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
        const std::vector<double> row = policy_row(policy, obs, t);
        report.scalar += coeff * std::log(row[static_cast<std::size_t>(a)]);
        accumulate_grad_log_prob(policy, obs, t, a, coeff, report.grads);
      }
    }
  }
  return report;
}

LossReport token_decompose(const Policy& policy, const TrajectoryBatch& batch,
                           const RLHyper& hyper) {
  if (batch.samples.empty()) throw std::invalid_argument("token_decompose: empty batch");
  if (hyper.baseline != BaselineKind::BatchMean)
    throw std::invalid_argument("token_decompose: decomposition is stated for the batch-mean "
                                "baseline");
  if (!is_masked_family(batch.obs_kind) || !batch.shared_obs.has_value())
    throw std::invalid_argument("token_decompose: batch must come from a masked-family rollout");

  const int K = batch.sample_count();
  const Observation& obs = *batch.shared_obs;

  LossReport report;
  report.grads.assign(policy.params.size(), 0.0);
  report.per_token.emplace();
  report.baseline_used =
      std::accumulate(batch.rewards.begin(), batch.rewards.end(), 0.0) / static_cast<double>(K);

  for (int t : loss_positions(batch, hyper.include_unmasked_positions)) {
    const std::vector<double> row = policy_row(policy, obs, t);
    std::vector<int> counts(static_cast<std::size_t>(policy.vocab), 0);
    std::vector<double> reward_sums(static_cast<std::size_t>(policy.vocab), 0.0);
    for (int k = 0; k < K; ++k) {
      const TokenId a = batch.samples[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
      counts[static_cast<std::size_t>(a)] += 1;
      reward_sums[static_cast<std::size_t>(a)] += batch.rewards[static_cast<std::size_t>(k)];
    }
    for (TokenId i = 0; i < policy.vocab; ++i) {
      const int c = counts[static_cast<std::size_t>(i)];
      if (c == 0) continue;
      const double advantage =
          reward_sums[static_cast<std::size_t>(i)] / static_cast<double>(c) - report.baseline_used;
      const double weight = -static_cast<double>(c) / static_cast<double>(K) * advantage;
      const double cell_loss = weight * std::log(row[static_cast<std::size_t>(i)]);
      report.scalar += cell_loss;
      accumulate_grad_log_prob(policy, obs, t, i, weight, report.grads);
      (*report.per_token)[{t, i}] = TokenCell{cell_loss, c, advantage};
    }
  }
  return report;
}

double token_advantage(const TrajectoryBatch& batch, int t, TokenId token) {
  if (batch.samples.empty()) throw std::invalid_argument("token_advantage: empty batch");
  if (t < 0 || t >= batch.mask.horizon())
    throw std::invalid_argument("token_advantage: position out of range");
  double total = 0.0, chosen = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < batch.samples.size(); ++k) {
    total += batch.rewards[k];
    if (batch.samples[k][static_cast<std::size_t>(t)] == token) {
      chosen += batch.rewards[k];
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("token_advantage: token never chosen at this step");
  return chosen / static_cast<double>(count) - total / static_cast<double>(batch.samples.size());
}

LossReport mle_loss(const Policy& policy, const StaticDataset& dataset, const TaskSpec& task,
                    double mask_corrupt_rate, SeededRng rng, std::span<const ContextId> subset) {
  if (dataset.entries.empty()) throw std::invalid_argument("mle_loss: empty dataset");
  if (mask_corrupt_rate < 0.0 || mask_corrupt_rate > 1.0)
    throw std::invalid_argument("mle_loss: corrupt rate outside [0,1]");

  std::vector<ContextId> contexts(subset.begin(), subset.end());
  if (contexts.empty()) {
    contexts.resize(dataset.entries.size());
    std::iota(contexts.begin(), contexts.end(), 0);
  }

  LossReport report;
  report.grads.assign(policy.params.size(), 0.0);
  const int T = task.horizon;
  const double scale = 1.0 / (static_cast<double>(contexts.size()) * static_cast<double>(T));

  for (ContextId x : contexts) {
    const auto& entry = dataset.entry(x);
    std::vector<std::uint8_t> corrupt(static_cast<std::size_t>(T), 0);
    for (int t = 0; t < T; ++t)
      corrupt[static_cast<std::size_t>(t)] = rng.bernoulli(mask_corrupt_rate) ? 1 : 0;
    Observation obs = offline_observation(task.vocab, x, entry, corrupt);
    for (int t = 0; t < T; ++t) {
      const TokenId y = entry[static_cast<std::size_t>(t)];
      const std::vector<double> row = policy_row(policy, obs, t);
      report.scalar += -std::log(row[static_cast<std::size_t>(y)]) * scale;
      accumulate_grad_log_prob(policy, obs, t, y, -scale, report.grads);
    }
  }
  return report;
}

LossReport combined_loss(const Policy& policy, const StaticDataset& dataset, const TaskSpec& task,
                         const TrajectoryBatch& batch, const RLHyper& hyper, SeededRng rng,
                         std::span<const ContextId> mle_subset, FpLedger* sc_ledger) {
  LossReport mle = mle_loss(policy, dataset, task, hyper.mask_corrupt_rate, rng, mle_subset);
  LossReport rl = rl_loss(policy, batch, hyper, &task, sc_ledger);

  LossReport report;
  report.scalar = mle.scalar + hyper.lambda * rl.scalar;
  report.baseline_used = rl.baseline_used;
  report.mle_component = mle.scalar;
  report.rl_component = rl.scalar;
  report.grads = std::move(mle.grads);
  for (std::size_t i = 0; i < report.grads.size(); ++i)
    report.grads[i] += hyper.lambda * rl.grads[i];
  return report;
}

double avg_loss(std::span<const double> quality, std::span<const double> loglik_sums,
                std::span<const double> lengths, double alpha) {
  const std::size_t n = quality.size();
  if (n == 0 || loglik_sums.size() != n || lengths.size() != n)
    throw std::invalid_argument("avg_loss: input length mismatch");
  const double mean_q = std::accumulate(quality.begin(), quality.end(), 0.0) /
                        static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double norm = std::pow(lengths[j], alpha);
    loss += -(2.0 * static_cast<double>(n) / norm) * loglik_sums[j] * (quality[j] - mean_q);
  }
  return loss;
}

AvgIdentity check_avg_identity(std::span<const double> f, std::span<const double> quality) {
  const std::size_t n = f.size();
  if (quality.size() != n) throw std::invalid_argument("check_avg_identity: length mismatch");
  AvgIdentity out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.lhs += (quality[i] - quality[j]) * (f[j] - f[i]);
  if (n > 0) {
    const double mean_q = std::accumulate(quality.begin(), quality.end(), 0.0) /
                          static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j)
      out.rhs += 2.0 * static_cast<double>(n) * (-f[j]) * (quality[j] - mean_q);
  }
  out.abs_diff = std::abs(out.lhs - out.rhs);
  return out;
}

double brio_contrastive_loss(std::span<const double> loglik_sums, std::span<const double> lengths,
                             std::span<const double> quality, double margin, double alpha) {
  const std::size_t n = loglik_sums.size();
  if (lengths.size() != n || quality.size() != n)
    throw std::invalid_argument("brio_contrastive_loss: input length mismatch");

  // Sort by quality, best first; stable so equal-quality inputs keep order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return quality[a] > quality[b]; });

  std::vector<double> f(n);
  for (std::size_t r = 0; r < n; ++r)
    f[r] = loglik_sums[order[r]] / std::pow(lengths[order[r]], alpha);

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      loss += std::max(0.0, f[j] - f[i] + margin * static_cast<double>(j - i));
  return loss;
}

}  // namespace semirl
