#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "semirl/env.hpp"
#include "semirl/observation.hpp"
#include "semirl/policy.hpp"

namespace semirl {

// Exact posterior over full completions given an observation.
struct PosteriorTable {
  std::vector<std::vector<TokenId>> support;
  std::vector<double> probs;
};

// Factored posterior: per position, a point mass where the observation pins
// the token, the policy distribution where it reveals a masked position, and
// a mixture where the mask bit is hidden (scheduled sampling mixes with
// weight p_m; a noisy masked view mixes with the posterior lie probability
// p_m * noise / (p_m * noise + 1 - p_m)).
PosteriorTable posterior_states(const Observation& obs, std::span<const TokenId> static_seq,
                                double p_m, const Policy& policy);

// Independent route for Masked/MaxObs: enumerate every full completion,
// weight it by the generative law given (static, mask), and normalize.
PosteriorTable posterior_states_raw(ObsKind kind, ContextId x,
                                    std::span<const TokenId> static_seq, const MaskVector& mask,
                                    const Policy& policy);

double total_variation(const PosteriorTable& a, const PosteriorTable& b);

struct Lemma1Grid {
  std::vector<int> vocab_sizes{2, 3};
  std::vector<int> horizons{2, 3};
  std::vector<double> mask_rates{0.25, 0.5, 0.75};
  int policies = 5;
  std::uint64_t policy_seed = 1234;
};

struct Lemma1Result {
  double max_tv = 0.0;
  double min_tv = 0.0;
  long instances = 0;
  std::string worst_instance;  // where max_tv was reached
};

// Exhaustive comparison of the variant posterior against the maximum
// observation posterior over the whole grid: every static sequence, every
// mask, every realized/noise pattern the variant can display.
Lemma1Result check_lemma1(ObsKind kind, double noise_rate, const Lemma1Grid& grid = {});

// Exact count of distinct observations reachable at time t (context fixed),
// by enumeration over static sequences and masks.
long observation_space_size(ObsKind kind, int t, int vocab, int horizon);

// Exact conditional-minus-marginal expected reward of emitting `token` at
// masked position t, enumerating all completions of the masked positions.
double expected_advantage_bruteforce(const Policy& policy, const Observation& obs, int t,
                                     TokenId token,
                                     const std::function<double(std::span<const TokenId>)>& reward);

struct FpVerdict {
  bool pass = true;
  int traces = 0;
  int one_fp_violations = 0;  // tainted traces, cannot reach the 1-FP bound
  std::vector<std::string> notes;
};

// Audits rollout traces against the cost laws: sequential traces must cost
// exactly sum(mask) FPs, masked-parallel traces exactly 1, and any trace
// whose observation exposed a sampled token must have cost >= 2.
FpVerdict check_fp_minimality(std::span<const TrajectoryBatch> traces);

}  // namespace semirl
