#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semirl/rng.hpp"
#include "semirl/vocab.hpp"

namespace semirl {

enum class RewardKind { UnigramF1, PositionMatch };
enum class DatasetMode { GroundTruth, DataMinus, DataPlus };

const char* reward_kind_name(RewardKind k);
const char* dataset_mode_name(DatasetMode m);

// A synthetic generation task: fixed horizon, one hidden target sequence per
// context, and a toy terminal reward.
struct TaskSpec {
  Vocab vocab;
  int horizon = 0;
  int contexts = 0;
  std::vector<std::vector<TokenId>> targets;  // indexed by context
  RewardKind reward_kind = RewardKind::UnigramF1;

  const std::vector<TokenId>& target(ContextId x) const { return targets.at(static_cast<std::size_t>(x)); }
};

TaskSpec make_random_task(int vocab, int horizon, int contexts, std::uint64_t seed,
                          RewardKind kind = RewardKind::UnigramF1);
void validate_task(const TaskSpec& task);

// F1 over token multisets.
double reward_unigram_f1(std::span<const TokenId> y, std::span<const TokenId> target);
// Fraction of positions that agree.
double reward_position_match(std::span<const TokenId> y, std::span<const TokenId> target);

double task_reward(const TaskSpec& task, ContextId x, std::span<const TokenId> y);

// Static anchor sequences, one per context. DataMinus/DataPlus keep the
// lowest-/highest-reward candidate out of a pre-generated pool and retain the
// pool rewards for win-rate style reporting.
struct StaticDataset {
  DatasetMode provenance = DatasetMode::GroundTruth;
  std::vector<std::vector<TokenId>> entries;          // indexed by context
  std::vector<std::vector<double>> candidate_rewards; // empty for GroundTruth

  const std::vector<TokenId>& entry(ContextId x) const { return entries.at(static_cast<std::size_t>(x)); }
  int contexts() const { return static_cast<int>(entries.size()); }
};

void validate_dataset(const StaticDataset& ds, const TaskSpec& task);

}  // namespace semirl
