#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "semirl/ledger.hpp"
#include "semirl/observation.hpp"
#include "semirl/rng.hpp"
#include "semirl/vocab.hpp"

namespace semirl {

enum class Backend { TabularContext, LinearFeature };
enum class FeatureVariant { Base, AllAug, PreAug };

const char* backend_name(Backend b);

// Hand-built feature map standing in for an encoder. Blocks, in order:
// position one-hot (T), context one-hot (C), previous observed slot with all
// sentinels sharing one extra bucket (V+1), normalized bag of the vocabulary
// tokens shown before t (V), then optional side-channel blocks: bag of the
// full static sequence (AllAug, V) or one-hot of the static token at t
// (PreAug, V). Features never read slot t itself, and depend only on the
// observation contents.
struct FeatureSpec {
  int horizon = 0;
  int contexts = 0;
  int vocab = 0;
  FeatureVariant variant = FeatureVariant::Base;

  int dim() const;
  void extract(const Observation& obs, int t, std::vector<double>& out) const;

  bool operator==(const FeatureSpec&) const = default;
};

// Softmax policy over the action vocabulary. TabularContext keeps one logit
// row per (context, position); LinearFeature scores rows as W * features(obs).
struct Policy {
  Backend backend = Backend::TabularContext;
  int vocab = 0;
  int horizon = 0;
  int contexts = 0;
  FeatureSpec features;  // LinearFeature only
  std::vector<double> params;

  static Policy tabular(int contexts, int horizon, int vocab);
  static Policy linear(const FeatureSpec& spec);
  // Nonuniform tabular policy with logits uniform in [-scale, scale].
  static Policy random_tabular(int contexts, int horizon, int vocab, std::uint64_t seed,
                               double scale = 2.0);

  std::size_t tabular_index(ContextId x, int t, TokenId v) const;
};

void softmax_inplace(std::vector<double>& logits);

// Probability row at one position. No ledger side effects: loss code reuses
// the forward pass that produced the batch, so gradient-side evaluation is
// not billed as a separate FP.
std::vector<double> policy_row(const Policy& policy, const Observation& obs, int t);

// One FP: evaluates every requested position of one observation in parallel.
// Exactly one ledger increment per call, regardless of |positions|.
std::vector<std::vector<double>> distributions(const Policy& policy, const Observation& obs,
                                               std::span<const int> positions, FpLedger& ledger);

double log_prob(const Policy& policy, const Observation& obs, int t, TokenId a, FpLedger& ledger);

// Exact softmax score gradient, flat over the parameter vector.
std::vector<double> grad_log_prob(const Policy& policy, const Observation& obs, int t, TokenId a);
// grad += coeff * d log p(a | obs, t) / d params.
void accumulate_grad_log_prob(const Policy& policy, const Observation& obs, int t, TokenId a,
                              double coeff, std::vector<double>& grad);

// Sequential argmax decode under full-state observations; ledger += horizon.
// Ties break toward the lowest token id.
std::vector<TokenId> greedy_decode(const Policy& policy, ContextId x, int horizon,
                                   FpLedger& ledger);

}  // namespace semirl
