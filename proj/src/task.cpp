#include "semirl/task.hpp"

#include <algorithm>
#include <stdexcept>

namespace semirl {

const char* reward_kind_name(RewardKind k) {
  switch (k) {
    case RewardKind::UnigramF1: return "unigram_f1";
    case RewardKind::PositionMatch: return "position_match";
  }
  return "?";
}

const char* dataset_mode_name(DatasetMode m) {
  switch (m) {
    case DatasetMode::GroundTruth: return "ground_truth";
    case DatasetMode::DataMinus: return "data_minus";
    case DatasetMode::DataPlus: return "data_plus";
  }
  return "?";
}

TaskSpec make_random_task(int vocab, int horizon, int contexts, std::uint64_t seed,
                          RewardKind kind) {
  if (horizon < 1) throw std::invalid_argument("make_random_task: horizon must be >= 1");
  if (contexts < 1) throw std::invalid_argument("make_random_task: contexts must be >= 1");
  TaskSpec task{Vocab(vocab), horizon, contexts, {}, kind};
  task.targets.resize(static_cast<std::size_t>(contexts));
  SeededRng rng(mix_keys(seed, 0x7a5bULL));
  for (int x = 0; x < contexts; ++x) {
    auto& tgt = task.targets[static_cast<std::size_t>(x)];
    tgt.resize(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) tgt[static_cast<std::size_t>(t)] = rng.uniform_int(vocab);
  }
  return task;
}

void validate_task(const TaskSpec& task) {
  if (static_cast<int>(task.targets.size()) != task.contexts)
    throw std::invalid_argument("task: target count != contexts");
  for (const auto& tgt : task.targets) {
    if (static_cast<int>(tgt.size()) != task.horizon)
      throw std::invalid_argument("task: target length != horizon");
    for (TokenId v : tgt)
      if (!task.vocab.is_action(v)) throw std::invalid_argument("task: target token out of range");
  }
}

double reward_unigram_f1(std::span<const TokenId> y, std::span<const TokenId> target) {
  if (y.size() != target.size())
    throw std::invalid_argument("reward_unigram_f1: length mismatch");
  if (y.empty()) return 0.0;
  std::vector<TokenId> a(y.begin(), y.end());
  std::vector<TokenId> b(target.begin(), target.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) { ++common; ++i; ++j; }
    else if (a[i] < b[j]) ++i;
    else ++j;
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

double reward_position_match(std::span<const TokenId> y, std::span<const TokenId> target) {
  if (y.size() != target.size())
    throw std::invalid_argument("reward_position_match: length mismatch");
  if (y.empty()) return 0.0;
  int hits = 0;
  for (std::size_t t = 0; t < y.size(); ++t) hits += (y[t] == target[t]);
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

double task_reward(const TaskSpec& task, ContextId x, std::span<const TokenId> y) {
  const auto& tgt = task.target(x);
  switch (task.reward_kind) {
    case RewardKind::UnigramF1: return reward_unigram_f1(y, tgt);
    case RewardKind::PositionMatch: return reward_position_match(y, tgt);
  }
  return 0.0;
}

void validate_dataset(const StaticDataset& ds, const TaskSpec& task) {
  if (static_cast<int>(ds.entries.size()) != task.contexts)
    throw std::invalid_argument("dataset: entry count != contexts");
  for (const auto& e : ds.entries) {
    if (static_cast<int>(e.size()) != task.horizon)
      throw std::invalid_argument("dataset: entry length != horizon");
    for (TokenId v : e)
      if (!task.vocab.is_action(v)) throw std::invalid_argument("dataset: token out of range");
  }
}

}  // namespace semirl
