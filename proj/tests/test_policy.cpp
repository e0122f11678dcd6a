#include <doctest.h>

#include <cmath>

#include "semirl/policy.hpp"

using namespace semirl;

TEST_SUITE_BEGIN("policy");

namespace {

Observation blank_masked_obs(const Vocab& vocab, ContextId x, int horizon) {
  MaskVector all = fixed_mask(std::vector<std::uint8_t>(static_cast<std::size_t>(horizon), 1));
  std::vector<TokenId> static_seq(static_cast<std::size_t>(horizon), 0);
  return masked_observation(vocab, x, static_seq, all);
}

}  // namespace

TEST_CASE("zero parameters give the uniform distribution at every position") {
  Policy p = Policy::tabular(2, 4, 4);
  Vocab vocab(4);
  Observation obs = blank_masked_obs(vocab, 1, 4);
  FpLedger ledger;
  const int positions[] = {0, 1, 2, 3};
  auto rows = distributions(p, obs, positions, ledger);
  for (const auto& row : rows)
    for (double v : row) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("probability rows sum to one and are strictly positive") {
  Policy p = Policy::random_tabular(3, 5, 7, 99, 4.0);
  Vocab vocab(7);
  Observation obs = blank_masked_obs(vocab, 2, 5);
  for (int t = 0; t < 5; ++t) {
    auto row = policy_row(p, obs, t);
    double sum = 0.0;
    for (double v : row) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("tabular backend ignores observation contents") {
  Policy p = Policy::random_tabular(1, 3, 5, 7);
  Vocab vocab(5);
  std::vector<TokenId> s1{0, 1, 2}, s2{4, 4, 4};
  auto o1 = masked_observation(vocab, 0, s1, fixed_mask({0, 1, 0}));
  auto o2 = masked_observation(vocab, 0, s2, fixed_mask({1, 1, 1}));
  for (int t = 0; t < 3; ++t) CHECK(policy_row(p, o1, t) == policy_row(p, o2, t));
}

TEST_CASE("linear backend weights can pin an argmax through the position feature") {
  const int T = 4, C = 1, V = 5;
  FeatureSpec spec{T, C, V, FeatureVariant::Base};
  Policy p = Policy::linear(spec);
  // Feature layout starts with the position one-hot, so index 2 is "t == 2".
  p.params[static_cast<std::size_t>(3) * static_cast<std::size_t>(spec.dim()) + 2] = 5.0;
  Vocab vocab(V);
  Observation obs = blank_masked_obs(vocab, 0, T);
  auto row = policy_row(p, obs, 2);
  int argmax = 0;
  for (int v = 1; v < V; ++v)
    if (row[static_cast<std::size_t>(v)] > row[static_cast<std::size_t>(argmax)]) argmax = v;
  CHECK(argmax == 3);
  // At other positions the weight is inert.
  auto row0 = policy_row(p, obs, 0);
  CHECK(row0[3] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("log_prob agrees with distributions and normalizes") {
  Policy p = Policy::tabular(1, 2, 4);
  Vocab vocab(4);
  Observation obs = blank_masked_obs(vocab, 0, 2);
  FpLedger ledger;
  CHECK(log_prob(p, obs, 0, 1, ledger) == doctest::Approx(std::log(0.25)).epsilon(1e-12));

  Policy q = Policy::random_tabular(1, 2, 4, 5);
  double total = 0.0;
  for (TokenId a = 0; a < 4; ++a) total += std::exp(log_prob(q, obs, 1, a, ledger));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const int pos[] = {1};
  auto row = distributions(q, obs, pos, ledger)[0];
  for (TokenId a = 0; a < 4; ++a)
    CHECK(std::abs(std::exp(log_prob(q, obs, 1, a, ledger)) - row[static_cast<std::size_t>(a)]) <=
          1e-12);
}

TEST_CASE("grad_log_prob is the exact softmax score") {
  Policy p = Policy::tabular(1, 1, 4);
  Vocab vocab(4);
  Observation obs = blank_masked_obs(vocab, 0, 1);
  auto grad = grad_log_prob(p, obs, 0, 1);
  CHECK(grad[0] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(grad[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(grad[2] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(grad[3] == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("score function identity: expected gradient is zero") {
  Policy p = Policy::random_tabular(1, 3, 5, 11);
  Vocab vocab(5);
  Observation obs = blank_masked_obs(vocab, 0, 3);
  auto row = policy_row(p, obs, 1);
  std::vector<double> expectation(p.params.size(), 0.0);
  for (TokenId a = 0; a < 5; ++a)
    accumulate_grad_log_prob(p, obs, 1, a, row[static_cast<std::size_t>(a)], expectation);
  for (double g : expectation) CHECK(std::abs(g) <= 1e-12);
}

TEST_CASE("grad_log_prob matches central finite differences of log_prob") {
  SeededRng rng(2025);
  double max_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int V = 2 + rng.uniform_int(5);
    const int T = 1 + rng.uniform_int(4);
    const bool linear = rng.bernoulli(0.5);
    Policy p = linear ? Policy::linear(FeatureSpec{T, 2, V, FeatureVariant::Base})
                      : Policy::random_tabular(2, T, V, rng.next_u64());
    if (linear)
      for (auto& w : p.params) w = (rng.uniform01() * 2.0 - 1.0);
    Vocab vocab(V);
    std::vector<TokenId> static_seq(static_cast<std::size_t>(T));
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(T));
    for (auto& v : static_seq) v = rng.uniform_int(V);
    for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
    Observation obs = masked_observation(vocab, rng.uniform_int(2), static_seq, fixed_mask(bits));
    const int t = rng.uniform_int(T);
    const TokenId a = rng.uniform_int(V);

    auto analytic = grad_log_prob(p, obs, t, a);
    const double eps = 1e-6;
    for (int c = 0; c < 5; ++c) {
      const std::size_t i = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(p.params.size())));
      const double saved = p.params[i];
      FpLedger scratch;
      p.params[i] = saved + eps;
      const double up = log_prob(p, obs, t, a, scratch);
      p.params[i] = saved - eps;
      const double down = log_prob(p, obs, t, a, scratch);
      p.params[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      max_rel = std::max(max_rel,
                         std::abs(analytic[i] - numeric) / std::max(std::abs(numeric), 1e-8));
    }
  }
  CHECK(max_rel <= 1e-5);
}

TEST_CASE("one ledger increment per distributions call") {
  Policy p = Policy::tabular(1, 4, 4);
  Vocab vocab(4);
  Observation obs = blank_masked_obs(vocab, 0, 4);
  FpLedger ledger;
  const int many[] = {0, 1, 2, 3};
  distributions(p, obs, many, ledger);
  CHECK(ledger.count == 1);
  distributions(p, obs, std::span<const int>{}, ledger);
  CHECK(ledger.count == 2);
  const int one[] = {2};
  distributions(p, obs, one, ledger);
  CHECK(ledger.count == 3);
}

TEST_CASE("masked-observation evaluation is deterministic across calls") {
  Policy p = Policy::random_tabular(1, 4, 6, 3);
  Vocab vocab(6);
  std::vector<TokenId> static_seq{0, 3, 5, 2};
  auto obs = masked_observation(vocab, 0, static_seq, fixed_mask({1, 0, 1, 0}));
  for (int t = 0; t < 4; ++t) CHECK(policy_row(p, obs, t) == policy_row(p, obs, t));
}

TEST_CASE("greedy decode follows dominant logits and breaks ties low") {
  FpLedger ledger;
  Policy p = Policy::tabular(1, 3, 4);
  p.params[p.tabular_index(0, 0, 2)] = 9.0;
  p.params[p.tabular_index(0, 1, 0)] = 9.0;
  p.params[p.tabular_index(0, 2, 3)] = 9.0;
  CHECK(greedy_decode(p, 0, 3, ledger) == std::vector<TokenId>{2, 0, 3});
  CHECK(ledger.count == 3);

  Policy zero = Policy::tabular(1, 3, 4);
  CHECK(greedy_decode(zero, 0, 3, ledger) == std::vector<TokenId>{0, 0, 0});
}

TEST_CASE("positions outside the horizon are rejected") {
  Policy p = Policy::tabular(1, 3, 4);
  Vocab vocab(4);
  Observation obs = blank_masked_obs(vocab, 0, 3);
  FpLedger ledger;
  const int bad[] = {3};
  CHECK_THROWS_AS(distributions(p, obs, bad, ledger), std::invalid_argument);
  const int neg[] = {-1};
  CHECK_THROWS_AS(distributions(p, obs, neg, ledger), std::invalid_argument);
}

TEST_SUITE_END();
