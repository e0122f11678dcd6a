#include <doctest.h>

#include <cmath>
#include <numeric>

#include "semirl/losses.hpp"
#include "semirl/trainer.hpp"

using namespace semirl;

TEST_SUITE_BEGIN("losses");

namespace {

struct LossFixture {
  TaskSpec task;
  Policy policy;
  StaticDataset dataset;
};

LossFixture make_losses_fixture(int vocab, int horizon, int contexts, std::uint64_t seed) {
  LossFixture f{make_random_task(vocab, horizon, contexts, seed, RewardKind::UnigramF1),
                Policy::random_tabular(contexts, horizon, vocab, mix_keys(seed, 1)),
                {}};
  f.dataset = build_static_dataset(Policy::random_tabular(contexts, horizon, vocab, seed), f.task,
                                   DatasetMode::DataMinus, 4, SeededRng(mix_keys(seed, 2)));
  return f;
}

TrajectoryBatch sample_batch(const LossFixture& f, ContextId x, double p_m, int K,
                             std::uint64_t seed) {
  SeededRng rng(seed);
  MaskVector mask = build_mask(f.task.horizon, p_m, rng);
  FpLedger ledger;
  return rollout_masked_parallel(f.policy, f.task, x, f.dataset.entry(x), mask, K, rng, ledger);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

TEST_CASE("rl_loss vanishes when every sample earns the same reward") {
  LossFixture f = make_losses_fixture(5, 4, 2, 61);
  TrajectoryBatch batch = sample_batch(f, 0, 0.6, 8, 62);
  for (auto& r : batch.rewards) r = 0.7;
  RLHyper hyper;
  auto report = rl_loss(f.policy, batch, hyper);
  CHECK(report.scalar == 0.0);
  for (double g : report.grads) CHECK(g == 0.0);
}

TEST_CASE("rl_loss with K=1 and the batch-mean baseline is degenerate") {
  LossFixture f = make_losses_fixture(5, 4, 2, 63);
  TrajectoryBatch batch = sample_batch(f, 1, 0.5, 1, 64);
  RLHyper hyper;
  auto report = rl_loss(f.policy, batch, hyper);
  CHECK(report.baseline_used == batch.rewards[0]);
  CHECK(report.scalar == 0.0);
}

TEST_CASE("rl_loss hand expansion for K=2, rewards {1, 0}") {
  LossFixture f = make_losses_fixture(4, 3, 1, 65);
  TrajectoryBatch batch = sample_batch(f, 0, 1.0, 2, 66);
  batch.rewards = {1.0, 0.0};

  const Observation& obs = *batch.shared_obs;
  double s1 = 0.0, s2 = 0.0;
  for (int t = 0; t < 3; ++t) {
    auto row = policy_row(f.policy, obs, t);
    s1 += std::log(row[static_cast<std::size_t>(batch.samples[0][static_cast<std::size_t>(t)])]);
    s2 += std::log(row[static_cast<std::size_t>(batch.samples[1][static_cast<std::size_t>(t)])]);
  }
  // (1/K) sum_k -(R_k - 1/2) S_k with K=2: coefficients are +-1/4.
  const double expected = -0.25 * s1 + 0.25 * s2;
  RLHyper hyper;
  auto report = rl_loss(f.policy, batch, hyper);
  CHECK(report.scalar == doctest::Approx(expected).epsilon(1e-12));
  CHECK(report.baseline_used == doctest::Approx(0.5));
}

TEST_CASE("rl_loss sums over masked positions only") {
  LossFixture f = make_losses_fixture(4, 4, 1, 67);
  SeededRng rng(68);
  FpLedger ledger;
  MaskVector mask = fixed_mask({1, 0, 0, 1}, 0.5);
  auto batch = rollout_masked_parallel(f.policy, f.task, 0, f.dataset.entry(0), mask, 4, rng,
                                       ledger);
  batch.greedy_reward = 0.9;  // a baseline away from the batch mean
  batch.rewards = {1.0, 0.0, 0.5, 0.25};

  RLHyper masked_only;
  masked_only.baseline = BaselineKind::SelfCritic;
  RLHyper all_positions = masked_only;
  all_positions.include_unmasked_positions = true;
  const double masked_scalar = rl_loss(f.policy, batch, masked_only).scalar;
  const double all_scalar = rl_loss(f.policy, batch, all_positions).scalar;
  // The unmasked copied tokens contribute extra log-prob terms.
  CHECK(masked_scalar != all_scalar);

  // Under the batch-mean baseline those extra terms cancel exactly: the
  // copied token is identical across samples and the centered coefficients
  // sum to zero.
  RLHyper mean_masked;
  RLHyper mean_all;
  mean_all.include_unmasked_positions = true;
  CHECK(rl_loss(f.policy, batch, mean_masked).scalar ==
        doctest::Approx(rl_loss(f.policy, batch, mean_all).scalar).epsilon(1e-12));
}

TEST_CASE("rl_loss rejects an empty batch") {
  LossFixture f = make_losses_fixture(4, 3, 1, 69);
  TrajectoryBatch batch;
  RLHyper hyper;
  CHECK_THROWS_AS(rl_loss(f.policy, batch, hyper), std::invalid_argument);
}

TEST_CASE("self-critic baseline uses the greedy decode reward and bills it separately") {
  LossFixture f = make_losses_fixture(5, 4, 2, 70);
  TrajectoryBatch batch = sample_batch(f, 0, 0.8, 4, 71);
  RLHyper hyper;
  hyper.baseline = BaselineKind::SelfCritic;
  FpLedger sc_ledger;
  auto report = rl_loss(f.policy, batch, hyper, &f.task, &sc_ledger);
  CHECK(sc_ledger.count == static_cast<std::uint64_t>(f.task.horizon));

  FpLedger scratch;
  auto greedy = greedy_decode(f.policy, 0, f.task.horizon, scratch);
  CHECK(report.baseline_used == task_reward(f.task, 0, greedy));

  CHECK_THROWS_AS(rl_loss(f.policy, batch, hyper), std::invalid_argument);
}

TEST_CASE("token decomposition reproduces rl_loss exactly") {
  double max_gap = 0.0;
  for (int s = 0; s < 100; ++s) {
    SeededRng rng(mix_keys(72, static_cast<std::uint64_t>(s)));
    const int V = 2 + rng.uniform_int(7);
    const int T = 2 + rng.uniform_int(7);
    const int K = 1 + rng.uniform_int(64);
    LossFixture f = make_losses_fixture(V, T, 1, rng.next_u64());
    TrajectoryBatch batch = sample_batch(f, 0, rng.uniform01(), K, rng.next_u64());
    RLHyper hyper;
    auto full = rl_loss(f.policy, batch, hyper);
    auto cells = token_decompose(f.policy, batch, hyper);
    max_gap = std::max(max_gap, std::abs(full.scalar - cells.scalar));
    for (std::size_t i = 0; i < full.grads.size(); ++i)
      max_gap = std::max(max_gap, std::abs(full.grads[i] - cells.grads[i]));
  }
  CHECK(max_gap <= 1e-9);
}

TEST_CASE("token decomposition edge cases") {
  LossFixture f = make_losses_fixture(4, 3, 1, 73);

  SUBCASE("K=1 yields all-zero cells") {
    TrajectoryBatch batch = sample_batch(f, 0, 1.0, 1, 74);
    RLHyper hyper;
    auto cells = token_decompose(f.policy, batch, hyper);
    CHECK(cells.scalar == 0.0);
    for (const auto& [key, cell] : *cells.per_token) {
      CHECK(cell.loss == 0.0);
      CHECK(cell.advantage == 0.0);
    }
  }

  SUBCASE("a unanimous step has one cell with count K and zero advantage") {
    TrajectoryBatch batch = sample_batch(f, 0, 1.0, 8, 75);
    for (auto& sample : batch.samples) sample[0] = 2;
    for (std::size_t k = 0; k < batch.samples.size(); ++k)
      batch.rewards[k] = task_reward(f.task, 0, batch.samples[k]);
    RLHyper hyper;
    auto cells = token_decompose(f.policy, batch, hyper);
    int cells_at_0 = 0;
    for (const auto& [key, cell] : *cells.per_token) {
      if (key.first != 0) continue;
      ++cells_at_0;
      CHECK(key.second == 2);
      CHECK(cell.count == 8);
      // Conditioning on the unanimous token is conditioning on nothing.
      CHECK(std::abs(cell.advantage) <= 1e-12);
    }
    CHECK(cells_at_0 == 1);
  }

  SUBCASE("self-critic baseline is rejected") {
    TrajectoryBatch batch = sample_batch(f, 0, 1.0, 4, 76);
    RLHyper hyper;
    hyper.baseline = BaselineKind::SelfCritic;
    CHECK_THROWS_AS(token_decompose(f.policy, batch, hyper), std::invalid_argument);
  }
}

TEST_CASE("token_advantage basics") {
  LossFixture f = make_losses_fixture(4, 3, 1, 77);
  TrajectoryBatch batch = sample_batch(f, 0, 1.0, 16, 78);
  for (auto& r : batch.rewards) r = 0.5;
  const TokenId some = batch.samples[0][1];
  CHECK(token_advantage(batch, 1, some) == doctest::Approx(0.0));

  TokenId unused = -1;
  for (TokenId v = 0; v < 4; ++v) {
    bool seen = false;
    for (const auto& s : batch.samples) seen |= (s[1] == v);
    if (!seen) unused = v;
  }
  if (unused >= 0) CHECK_THROWS_AS(token_advantage(batch, 1, unused), std::invalid_argument);
  CHECK_THROWS_AS(token_advantage(batch, 99, some), std::invalid_argument);
}

TEST_CASE("mle_loss of the uniform policy is log|V| per token") {
  LossFixture f = make_losses_fixture(6, 4, 3, 79);
  Policy uniform = Policy::tabular(3, 4, 6);
  auto report = mle_loss(uniform, f.dataset, f.task, 0.4, SeededRng(80));
  CHECK(report.scalar == doctest::Approx(std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("mle_loss of a deterministic-correct policy approaches zero") {
  TaskSpec task = make_random_task(5, 4, 2, 81, RewardKind::UnigramF1);
  auto ds = build_static_dataset(Policy::tabular(2, 4, 5), task, DatasetMode::GroundTruth, 0,
                                 SeededRng(82));
  Policy p = Policy::tabular(2, 4, 5);
  for (int x = 0; x < 2; ++x)
    for (int t = 0; t < 4; ++t)
      p.params[p.tabular_index(x, t, task.target(x)[static_cast<std::size_t>(t)])] = 60.0;
  auto report = mle_loss(p, ds, task, 0.0, SeededRng(83));
  CHECK(report.scalar <= 1e-12);
}

TEST_CASE("mle corruption changes the inputs seen by a feature policy") {
  TaskSpec task = make_random_task(5, 4, 1, 84, RewardKind::UnigramF1);
  auto ds = build_static_dataset(Policy::tabular(1, 4, 5), task, DatasetMode::GroundTruth, 0,
                                 SeededRng(85));
  Policy p = Policy::linear(FeatureSpec{4, 1, 5, FeatureVariant::Base});
  SeededRng wrng(86);
  for (auto& w : p.params) w = wrng.uniform01() - 0.5;
  const double plain = mle_loss(p, ds, task, 0.0, SeededRng(87)).scalar;
  const double corrupted = mle_loss(p, ds, task, 1.0, SeededRng(87)).scalar;
  CHECK(plain != corrupted);
  // Rate zero is plain teacher forcing regardless of the rng.
  CHECK(mle_loss(p, ds, task, 0.0, SeededRng(1)).scalar == plain);
  CHECK_THROWS_AS(mle_loss(p, StaticDataset{}, task, 0.0, SeededRng(1)), std::invalid_argument);
}

TEST_CASE("combined loss interpolates between MLE and RL") {
  LossFixture f = make_losses_fixture(5, 4, 2, 88);
  SeededRng rng(89);
  FpLedger ledger;
  auto batch = rollout_masked_parallel(f.policy, f.task, 0, f.dataset.entry(0),
                                       fixed_mask({1, 0, 1, 1}, 0.7), 8, rng, ledger);
  for (std::size_t k = 0; k < batch.rewards.size(); ++k)
    batch.rewards[k] = static_cast<double>(k) / 8.0;  // guarantee a reward spread

  RLHyper off;
  off.lambda = 0.0;
  auto combined_off = combined_loss(f.policy, f.dataset, f.task, batch, off, SeededRng(90));
  auto pure_mle = mle_loss(f.policy, f.dataset, f.task, off.mask_corrupt_rate, SeededRng(90));
  CHECK(combined_off.scalar == doctest::Approx(pure_mle.scalar).epsilon(1e-12));
  for (std::size_t i = 0; i < pure_mle.grads.size(); ++i)
    CHECK(combined_off.grads[i] == doctest::Approx(pure_mle.grads[i]).epsilon(1e-12));

  RLHyper big;
  big.lambda = 1e7;
  auto combined_big = combined_loss(f.policy, f.dataset, f.task, batch, big, SeededRng(90));
  auto pure_rl = rl_loss(f.policy, batch, big);
  const double cosine = dot(combined_big.grads, pure_rl.grads) /
                        (norm(combined_big.grads) * norm(pure_rl.grads));
  CHECK(cosine >= 0.999999);
}

TEST_CASE("reward shifts cancel against the batch-mean baseline") {
  LossFixture f = make_losses_fixture(5, 4, 1, 91);
  TrajectoryBatch batch = sample_batch(f, 0, 0.6, 8, 92);
  RLHyper hyper;
  auto base = rl_loss(f.policy, batch, hyper);

  TrajectoryBatch shifted = batch;
  for (auto& r : shifted.rewards) r += 2.5;
  auto moved = rl_loss(f.policy, shifted, hyper);
  CHECK(moved.scalar == doctest::Approx(base.scalar).epsilon(1e-9));
  for (std::size_t i = 0; i < base.grads.size(); ++i)
    CHECK(moved.grads[i] == doctest::Approx(base.grads[i]).epsilon(1e-9));
}

TEST_CASE("reward scaling scales the gradient linearly") {
  LossFixture f = make_losses_fixture(5, 4, 1, 93);
  TrajectoryBatch batch = sample_batch(f, 0, 0.6, 8, 94);
  RLHyper hyper;
  auto base = rl_loss(f.policy, batch, hyper);

  TrajectoryBatch scaled = batch;
  for (auto& r : scaled.rewards) r *= 3.0;
  auto tripled = rl_loss(f.policy, scaled, hyper);
  CHECK(tripled.scalar == doctest::Approx(3.0 * base.scalar).epsilon(1e-9));
  for (std::size_t i = 0; i < base.grads.size(); ++i)
    CHECK(tripled.grads[i] == doctest::Approx(3.0 * base.grads[i]).epsilon(1e-9));
}

TEST_CASE("loss gradients pass tight finite-difference checks") {
  LossFixture f = make_losses_fixture(4, 4, 2, 95);
  TrajectoryBatch batch = sample_batch(f, 1, 0.5, 6, 96);
  RLHyper hyper;
  hyper.lambda = 2.0;
  Policy policy = f.policy;

  auto rl_fn = [&](const Policy& p) { return rl_loss(p, batch, hyper); };
  auto mle_fn = [&](const Policy& p) { return mle_loss(p, f.dataset, f.task, 0.3, SeededRng(97)); };
  auto combined_fn = [&](const Policy& p) {
    return combined_loss(p, f.dataset, f.task, batch, hyper, SeededRng(97));
  };
  CHECK(finite_difference_check(rl_fn, policy, 1e-6, 100, SeededRng(98)) <= 1e-5);
  CHECK(finite_difference_check(mle_fn, policy, 1e-6, 100, SeededRng(99)) <= 1e-5);
  CHECK(finite_difference_check(combined_fn, policy, 1e-6, 100, SeededRng(100)) <= 1e-5);
}

TEST_CASE("avg loss") {
  SUBCASE("equal quality scores vanish") {
    std::vector<double> q{0.4, 0.4, 0.4};
    std::vector<double> lp{-1.0, -2.0, -3.0};
    std::vector<double> len{3.0, 4.0, 5.0};
    CHECK(avg_loss(q, lp, len, 1.0) == doctest::Approx(0.0));
  }
  SUBCASE("hand expansion for N=2") {
    std::vector<double> q{1.0, 0.0};
    std::vector<double> lp{-0.3, -1.7};
    std::vector<double> len{1.0, 1.0};
    const double expected = -4.0 * (lp[0] * 0.5 + lp[1] * (-0.5));
    CHECK(avg_loss(q, lp, len, 0.0) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("alpha=0 with unit lengths is plain mean-baseline REINFORCE scaled by 2N") {
    SeededRng rng(101);
    const int n = 6;
    std::vector<double> q(n), lp(n), len(n, 1.0);
    for (auto& v : q) v = rng.uniform01();
    for (auto& v : lp) v = -rng.uniform01() * 3.0;
    const double mean_q = std::accumulate(q.begin(), q.end(), 0.0) / n;
    double reinforce = 0.0;
    for (int j = 0; j < n; ++j) reinforce += -lp[static_cast<std::size_t>(j)] * (q[static_cast<std::size_t>(j)] - mean_q);
    CHECK(avg_loss(q, lp, len, 0.0) == doctest::Approx(2.0 * n * reinforce).epsilon(1e-12));
  }
}

TEST_CASE("pairwise-vs-reinforce identity") {
  SUBCASE("random vectors agree to 1e-9") {
    SeededRng rng(102);
    for (int s = 0; s < 20; ++s) {
      const int n = 1 + rng.uniform_int(16);
      std::vector<double> f(static_cast<std::size_t>(n)), m(static_cast<std::size_t>(n));
      for (auto& v : f) v = rng.uniform01() * 2.0 - 1.0;
      for (auto& v : m) v = rng.uniform01();
      CHECK(check_avg_identity(f, m).abs_diff <= 1e-9);
    }
  }
  SUBCASE("degenerate cases are exactly zero") {
    std::vector<double> f{0.2, -0.5, 1.0};
    std::vector<double> m{0.3, 0.3, 0.3};
    auto same = check_avg_identity(f, m);
    CHECK(same.lhs == 0.0);
    CHECK(same.rhs == doctest::Approx(0.0));
    std::vector<double> f1{0.7}, m1{0.9};
    auto single = check_avg_identity(f1, m1);
    CHECK(single.lhs == 0.0);
    CHECK(single.rhs == doctest::Approx(0.0));
  }
}

TEST_CASE("contrastive hinge loss") {
  SUBCASE("perfect ordering with zero margin is free") {
    std::vector<double> lp{-1.0, -2.0, -3.0};
    std::vector<double> len{1.0, 1.0, 1.0};
    std::vector<double> q{0.9, 0.5, 0.1};
    CHECK(brio_contrastive_loss(lp, len, q, 0.0, 0.0) == 0.0);
  }
  SUBCASE("tied likelihoods pay the margin") {
    std::vector<double> lp{-1.0, -1.0};
    std::vector<double> len{1.0, 1.0};
    std::vector<double> q{1.0, 0.0};
    CHECK(brio_contrastive_loss(lp, len, q, 0.5, 0.0) == doctest::Approx(0.5));
  }
  SUBCASE("never negative") {
    SeededRng rng(103);
    for (int s = 0; s < 20; ++s) {
      const int n = 2 + rng.uniform_int(6);
      std::vector<double> lp(static_cast<std::size_t>(n)), len(static_cast<std::size_t>(n)),
          q(static_cast<std::size_t>(n));
      for (auto& v : lp) v = -rng.uniform01() * 5.0;
      for (auto& v : len) v = 1.0 + rng.uniform_int(9);
      for (auto& v : q) v = rng.uniform01();
      CHECK(brio_contrastive_loss(lp, len, q, rng.uniform01(), rng.uniform01() * 2.0) >= 0.0);
    }
  }
}

TEST_SUITE_END();
