#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "semirl/losses.hpp"

namespace semirl {

struct TrainConfig {
  // task generation
  int vocab = 12;
  int horizon = 8;
  int contexts = 64;
  std::uint64_t task_seed = 1;
  RewardKind reward = RewardKind::UnigramF1;
  // static data
  DatasetMode dataset_mode = DatasetMode::DataMinus;
  int k_candidates = 8;
  // RL setting
  double p_m = 0.4;
  int k_samples = 16;
  double lambda = 5.0;
  BaselineKind baseline = BaselineKind::BatchMean;
  ObsKind variant = ObsKind::Masked;
  double noise_rate = 0.5;
  bool include_unmasked_positions = false;
  // optimization
  double learning_rate = 0.1;
  int epochs = 100;
  int mle_warmup_epochs = 30;
  double mask_corrupt_rate = 0.4;
  Backend backend = Backend::TabularContext;
  int masks_per_instance = 1;
  // run
  std::uint64_t seed = 0;
  int eval_every = 1;
};

void validate_config(const TrainConfig& config);

struct TrainRecord {
  int epoch = 0;
  double mean_sample_reward = 0.0;  // nan outside the RL phase
  double greedy_reward = 0.0;
  double rl_loss = 0.0;  // nan outside the RL phase
  double mle_loss = 0.0; // nan before any optimization epoch
  std::uint64_t fp_total = 0;
  double win_rate = 0.0;
  double seconds = 0.0;  // wall clock; the only non-reproducible field
};

struct TrainLog {
  std::vector<TrainRecord> records;
  int warmup_epochs = 0;
  int rl_epochs = 0;
  std::uint64_t sc_fp_total = 0;       // self-critic greedy decodes, own cost line
  std::uint64_t dataset_fp_total = 0;  // candidate pre-generation, not training cost
};

struct TrainResult {
  Policy policy;
  TrainLog log;
  TaskSpec task;
  StaticDataset dataset;
  double post_warmup_greedy = 0.0;
};

// theta <- theta - lr * grad.
void sgd_step(Policy& policy, std::span<const double> grad, double learning_rate);

// Central finite differences on randomly chosen coordinates; returns the
// maximum relative error against the analytic gradient. loss_fn must be a
// pure function of the policy.
double finite_difference_check(const std::function<LossReport(const Policy&)>& loss_fn,
                               Policy& policy, double eps, int n_coords, SeededRng rng);

// Two-phase run: mask-corrupted MLE warmup on the static dataset, then
// combined-loss RL training on per-instance trajectory batches. Fully
// determined by the config (up to wall-clock timestamps in the log).
TrainResult train(const TrainConfig& config);

// Mean greedy decode reward over all contexts.
double evaluate(const Policy& policy, const TaskSpec& task);

}  // namespace semirl
