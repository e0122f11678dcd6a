#pragma once

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "semirl/env.hpp"
#include "semirl/policy.hpp"

namespace semirl {

enum class BaselineKind { BatchMean, SelfCritic };

const char* baseline_kind_name(BaselineKind b);

struct RLHyper {
  double lambda = 5.0;
  BaselineKind baseline = BaselineKind::BatchMean;
  double alpha = 0.0;  // length-normalization exponent (AVG/BRIO)
  int k_samples = 16;
  // By default the REINFORCE token sum runs over masked positions only:
  // unmasked tokens are copies, not actions. Flipping this includes every
  // position, for comparison runs.
  bool include_unmasked_positions = false;
  double mask_corrupt_rate = 0.4;
};

struct TokenCell {
  double loss = 0.0;
  int count = 0;       // C_t^i: samples choosing token i at step t
  double advantage = 0.0;
};

struct LossReport {
  double scalar = 0.0;
  std::vector<double> grads;  // flat, same layout as the policy parameters
  double baseline_used = 0.0;
  // (t, token) -> cell; only cells with count > 0 are present.
  std::optional<std::map<std::pair<int, TokenId>, TokenCell>> per_token;
  // Filled by combined_loss.
  double mle_component = 0.0;
  double rl_component = 0.0;
};

// REINFORCE with baseline over the batch: mean over samples of
// -(R(Y^k) - b) * sum_t log p(a_t^k | o_t). The baseline is the batch mean
// reward, or the greedy decode reward when SelfCritic is selected (the decode
// is billed to sc_ledger, horizon FPs, reported as its own cost line).
LossReport rl_loss(const Policy& policy, const TrajectoryBatch& batch, const RLHyper& hyper,
                   const TaskSpec* task = nullptr, FpLedger* sc_ledger = nullptr);

// Exact token-wise decomposition of rl_loss under the batch-mean baseline;
// cells with zero count are omitted so the identity stays exact.
LossReport token_decompose(const Policy& policy, const TrajectoryBatch& batch,
                           const RLHyper& hyper);

// Monte-Carlo advantage of emitting token i at step t:
// mean reward of the samples that chose i, minus the batch mean reward.
double token_advantage(const TrajectoryBatch& batch, int t, TokenId token);

// Negative mean log-likelihood of the dataset tokens under sequential
// conditioning; input positions are independently replaced by [M] at
// mask_corrupt_rate (targets unchanged). `subset` restricts the loss to the
// given contexts (empty = all).
LossReport mle_loss(const Policy& policy, const StaticDataset& dataset, const TaskSpec& task,
                    double mask_corrupt_rate, SeededRng rng,
                    std::span<const ContextId> subset = {});

// L = L_MLE + lambda * L_RL, gradients summed.
LossReport combined_loss(const Policy& policy, const StaticDataset& dataset, const TaskSpec& task,
                         const TrajectoryBatch& batch, const RLHyper& hyper, SeededRng rng,
                         std::span<const ContextId> mle_subset = {},
                         FpLedger* sc_ledger = nullptr);

// Sequence-level REINFORCE with mean baseline and length normalization:
// sum_j -(2N / |s_j|^alpha) * logP_j * (M_j - mean(M)).
double avg_loss(std::span<const double> quality, std::span<const double> loglik_sums,
                std::span<const double> lengths, double alpha);

struct AvgIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff = 0.0;
};

// lhs = sum_{i,j} (M_i - M_j)(f_j - f_i) over all ordered pairs;
// rhs = 2N * sum_j -f_j (M_j - mean(M)).
AvgIdentity check_avg_identity(std::span<const double> f, std::span<const double> quality);

// Pairwise hinge over quality-sorted samples with length-normalized sequence
// log-likelihoods f(S) = loglik / |s|^alpha and margins margin * (j - i).
double brio_contrastive_loss(std::span<const double> loglik_sums, std::span<const double> lengths,
                             std::span<const double> quality, double margin, double alpha);

}  // namespace semirl
