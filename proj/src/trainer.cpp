#include "semirl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace semirl {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

FeatureVariant feature_variant_for(ObsKind kind) {
  if (kind == ObsKind::AllAug) return FeatureVariant::AllAug;
  if (kind == ObsKind::PreAug) return FeatureVariant::PreAug;
  return FeatureVariant::Base;
}

Policy initial_policy(const TrainConfig& config) {
  if (config.backend == Backend::TabularContext)
    return Policy::tabular(config.contexts, config.horizon, config.vocab);
  FeatureSpec spec{config.horizon, config.contexts, config.vocab,
                   feature_variant_for(config.variant)};
  return Policy::linear(spec);
}

// One instance's trajectory batch under the configured RL setting. Sequential
// settings draw k_samples independent rollouts over the same mask.
TrajectoryBatch collect_batch(const Policy& policy, const TaskSpec& task,
                              const StaticDataset& dataset, ContextId x, const TrainConfig& config,
                              const MaskVector& mask, SeededRng& rng, FpLedger& ledger) {
  const auto& entry = dataset.entry(x);
  switch (config.variant) {
    case ObsKind::Masked:
    case ObsKind::NoisyMask:
    case ObsKind::AllAug:
    case ObsKind::PreAug:
      return rollout_masked_parallel(policy, task, x, entry, mask, config.k_samples, rng, ledger,
                                     config.variant, config.noise_rate);
    case ObsKind::FullState:
    case ObsKind::ScheduledSampling: {
      TrajectoryBatch merged;
      for (int k = 0; k < config.k_samples; ++k) {
        TrajectoryBatch one =
            (config.variant == ObsKind::FullState)
                ? rollout_fully_observable(policy, task, x, entry, mask, rng, ledger)
                : rollout_scheduled_sampling(policy, task, x, entry, mask, rng, ledger);
        if (k == 0) {
          merged = std::move(one);
        } else {
          merged.samples.push_back(std::move(one.samples[0]));
          merged.rewards.push_back(one.rewards[0]);
          merged.fp_cost += one.fp_cost;
        }
      }
      return merged;
    }
    default:
      throw std::invalid_argument("collect_batch: unsupported observation variant");
  }
}

}  // namespace

void validate_config(const TrainConfig& config) {
  Vocab check(config.vocab);
  if (config.horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
  if (config.contexts < 1) throw std::invalid_argument("config: contexts must be >= 1");
  if (config.p_m < 0.0 || config.p_m > 1.0)
    throw std::invalid_argument("config: p_m outside [0,1]");
  if (config.k_samples < 1) throw std::invalid_argument("config: K must be >= 1");
  if (config.lambda < 0.0 || !std::isfinite(config.lambda))
    throw std::invalid_argument("config: lambda must be finite and >= 0");
  if (config.learning_rate <= 0.0)
    throw std::invalid_argument("config: learning_rate must be > 0");
  if (config.epochs < 0 || config.mle_warmup_epochs < 0)
    throw std::invalid_argument("config: epoch counts must be >= 0");
  if (config.mask_corrupt_rate < 0.0 || config.mask_corrupt_rate > 1.0)
    throw std::invalid_argument("config: mask_corrupt_rate outside [0,1]");
  if (config.noise_rate < 0.0 || config.noise_rate > 1.0)
    throw std::invalid_argument("config: noise_rate outside [0,1]");
  if (config.dataset_mode != DatasetMode::GroundTruth && config.k_candidates < 1)
    throw std::invalid_argument("config: k_candidates must be >= 1 for data+/data-");
  if (config.eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
  if (config.masks_per_instance < 1)
    throw std::invalid_argument("config: masks_per_instance must be >= 1");
  if (config.variant == ObsKind::MaxObs || config.variant == ObsKind::OfflineStatic)
    throw std::invalid_argument("config: variant must name a training setting");
}

void sgd_step(Policy& policy, std::span<const double> grad, double learning_rate) {
  if (grad.size() != policy.params.size())
    throw std::invalid_argument("sgd_step: gradient size mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) policy.params[i] -= learning_rate * grad[i];
}

double finite_difference_check(const std::function<LossReport(const Policy&)>& loss_fn,
                               Policy& policy, double eps, int n_coords, SeededRng rng) {
  const LossReport base = loss_fn(policy);
  const std::size_t n_params = policy.params.size();
  const int coords = std::min<int>(n_coords, static_cast<int>(n_params));

  double max_rel = 0.0;
  for (int c = 0; c < coords; ++c) {
    const std::size_t i =
        (coords == static_cast<int>(n_params))
            ? static_cast<std::size_t>(c)
            : static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n_params)));
    const double saved = policy.params[i];
    policy.params[i] = saved + eps;
    const double up = loss_fn(policy).scalar;
    policy.params[i] = saved - eps;
    const double down = loss_fn(policy).scalar;
    policy.params[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double diff = std::abs(base.grads[i] - numeric);
    // Central differences cannot resolve below the rounding noise of the two
    // loss evaluations; differences under that floor carry no signal.
    const double noise_floor = 64.0 * std::numeric_limits<double>::epsilon() *
                               (std::abs(up) + std::abs(down)) / (2.0 * eps);
    if (diff <= noise_floor) continue;
    max_rel = std::max(max_rel, diff / std::max(std::abs(numeric), 1e-8));
  }
  return max_rel;
}

double evaluate(const Policy& policy, const TaskSpec& task) {
  FpLedger scratch;
  double total = 0.0;
  for (int x = 0; x < task.contexts; ++x) {
    auto decoded = greedy_decode(policy, x, task.horizon, scratch);
    total += task_reward(task, x, decoded);
  }
  return total / static_cast<double>(task.contexts);
}

TrainResult train(const TrainConfig& config) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();

  TaskSpec task =
      make_random_task(config.vocab, config.horizon, config.contexts, config.task_seed,
                       config.reward);
  Policy policy = initial_policy(config);
  const SeededRng root(mix_keys(config.seed, 0x5e71ULL));

  FpLedger train_ledger;
  FpLedger sc_ledger;
  TrainLog log;
  log.warmup_epochs = config.mle_warmup_epochs;
  log.rl_epochs = config.epochs;

  RLHyper hyper;
  hyper.lambda = config.lambda;
  hyper.baseline = config.baseline;
  hyper.k_samples = config.k_samples;
  hyper.include_unmasked_positions = config.include_unmasked_positions;
  hyper.mask_corrupt_rate = config.mask_corrupt_rate;

  // Warmup anchors: ground truth copies, or the configured candidate
  // selection sampled from the untrained policy.
  FpLedger data_ledger;
  StaticDataset dataset = build_static_dataset(policy, task, config.dataset_mode,
                                               config.k_candidates, root.derive(0xd0d0ULL),
                                               &data_ledger);

  double epoch_sample_reward = kNan;
  double epoch_rl = kNan;
  double epoch_mle = kNan;

  auto record = [&](int epoch) {
    TrainRecord r;
    r.epoch = epoch;
    r.mean_sample_reward = epoch_sample_reward;
    r.greedy_reward = evaluate(policy, task);
    r.rl_loss = epoch_rl;
    r.mle_loss = epoch_mle;
    r.fp_total = train_ledger.count;
    r.win_rate = win_rate(policy, dataset, task, config.p_m, config.k_samples,
                          root.derive(mix_keys(0x313eULL, static_cast<std::uint64_t>(epoch))));
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.records.push_back(r);
  };

  record(0);

  std::vector<ContextId> order(static_cast<std::size_t>(config.contexts));
  std::iota(order.begin(), order.end(), 0);

  // Phase 1: mask-corrupted MLE warmup on the static dataset.
  for (int e = 1; e <= config.mle_warmup_epochs; ++e) {
    SeededRng order_rng = root.derive(mix_keys(0x0e0dULL, static_cast<std::uint64_t>(e)));
    deterministic_shuffle(order, order_rng);
    double mle_sum = 0.0;
    for (ContextId x : order) {
      const ContextId subset[] = {x};
      LossReport loss = mle_loss(policy, dataset, task, config.mask_corrupt_rate,
                                 root.derive(mix_keys(0x31eULL, static_cast<std::uint64_t>(e),
                                                      static_cast<std::uint64_t>(x))),
                                 subset);
      sgd_step(policy, loss.grads, config.learning_rate);
      mle_sum += loss.scalar;
    }
    epoch_mle = mle_sum / static_cast<double>(config.contexts);
    if (e % config.eval_every == 0 || e == config.mle_warmup_epochs) record(e);
  }

  const double post_warmup_greedy = evaluate(policy, task);

  // The RL anchor set: candidate selection re-drawn from the warmed-up
  // policy, so exploration starts from sequences the current policy emits.
  if (config.dataset_mode != DatasetMode::GroundTruth && config.mle_warmup_epochs > 0) {
    dataset = build_static_dataset(policy, task, config.dataset_mode, config.k_candidates,
                                   root.derive(0xd0d1ULL), &data_ledger);
  }

  // Phase 2: combined-loss RL training.
  for (int e = 1; e <= config.epochs; ++e) {
    const int epoch = config.mle_warmup_epochs + e;
    SeededRng order_rng = root.derive(mix_keys(0x0adULL, static_cast<std::uint64_t>(epoch)));
    deterministic_shuffle(order, order_rng);
    double reward_sum = 0.0;
    long reward_count = 0;
    double rl_sum = 0.0, mle_sum = 0.0;
    for (ContextId x : order) {
      for (int rep = 0; rep < config.masks_per_instance; ++rep) {
        SeededRng step_rng = root.derive(mix_keys(0x5a3ULL, static_cast<std::uint64_t>(epoch),
                                                  static_cast<std::uint64_t>(x),
                                                  static_cast<std::uint64_t>(rep)));
        MaskVector mask = build_mask(config.horizon, config.p_m, step_rng);
        TrajectoryBatch batch =
            collect_batch(policy, task, dataset, x, config, mask, step_rng, train_ledger);
        if (config.baseline == BaselineKind::SelfCritic)
          attach_greedy_baseline(batch, policy, task, sc_ledger);
        const ContextId subset[] = {x};
        LossReport loss = combined_loss(policy, dataset, task, batch, hyper,
                                        root.derive(mix_keys(0x31eULL,
                                                             static_cast<std::uint64_t>(epoch),
                                                             static_cast<std::uint64_t>(x),
                                                             static_cast<std::uint64_t>(rep))),
                                        subset, &sc_ledger);
        sgd_step(policy, loss.grads, config.learning_rate);
        for (double r : batch.rewards) reward_sum += r;
        reward_count += batch.sample_count();
        rl_sum += loss.rl_component;
        mle_sum += loss.mle_component;
      }
    }
    const double steps = static_cast<double>(config.contexts) *
                         static_cast<double>(config.masks_per_instance);
    epoch_sample_reward = reward_sum / static_cast<double>(reward_count);
    epoch_rl = rl_sum / steps;
    epoch_mle = mle_sum / steps;
    if (e % config.eval_every == 0 || e == config.epochs) record(epoch);
  }

  log.sc_fp_total = sc_ledger.count;
  log.dataset_fp_total = data_ledger.count;

  TrainResult result{std::move(policy), std::move(log), std::move(task), std::move(dataset),
                     post_warmup_greedy};
  return result;
}

}  // namespace semirl
