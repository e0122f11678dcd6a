#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "semirl/trainer.hpp"

using namespace semirl;

TEST_SUITE_BEGIN("trainer");

namespace {

TrainConfig quick_config() {
  TrainConfig config;
  config.vocab = 6;
  config.horizon = 4;
  config.contexts = 8;
  config.task_seed = 3;
  config.k_candidates = 4;
  config.k_samples = 8;
  config.lambda = 5.0;
  config.learning_rate = 0.1;
  config.epochs = 5;
  config.mle_warmup_epochs = 3;
  config.seed = 7;
  return config;
}

}  // namespace

TEST_CASE("sgd_step applies theta -= lr * grad") {
  Policy p = Policy::tabular(1, 2, 3);
  std::vector<double> grad(p.params.size(), 0.0);
  grad[2] = 2.0;
  sgd_step(p, grad, 0.5);
  CHECK(p.params[2] == doctest::Approx(-1.0));

  std::vector<double> zeros(p.params.size(), 0.0);
  auto before = p.params;
  sgd_step(p, zeros, 0.5);
  CHECK(p.params == before);
  sgd_step(p, grad, 0.0);
  CHECK(p.params == before);
}

TEST_CASE("one small MLE step decreases the loss on the same batch") {
  TaskSpec task = make_random_task(6, 4, 4, 114, RewardKind::UnigramF1);
  auto ds = build_static_dataset(Policy::tabular(4, 4, 6), task, DatasetMode::GroundTruth, 0,
                                 SeededRng(115));
  Policy p = Policy::random_tabular(4, 4, 6, 116, 0.5);
  auto loss_fn = [&](const Policy& q) { return mle_loss(q, ds, task, 0.3, SeededRng(117)); };
  const double before = loss_fn(p).scalar;
  sgd_step(p, loss_fn(p).grads, 0.01);
  CHECK(loss_fn(p).scalar < before);
}

TEST_CASE("finite_difference_check reports near-zero error for a constant loss") {
  Policy p = Policy::tabular(1, 2, 3);
  auto constant = [&](const Policy& q) {
    LossReport r;
    r.scalar = 4.2;
    r.grads.assign(q.params.size(), 0.0);
    return r;
  };
  CHECK(finite_difference_check(constant, p, 1e-6, 10, SeededRng(118)) <= 1e-8);
}

TEST_CASE("zero-epoch training returns the initial policy") {
  TrainConfig config = quick_config();
  config.epochs = 0;
  config.mle_warmup_epochs = 0;
  auto result = train(config);
  for (double w : result.policy.params) CHECK(w == 0.0);
  REQUIRE(result.log.records.size() == 1);
  CHECK(result.log.records[0].epoch == 0);
  CHECK(result.log.records[0].fp_total == 0);
}

TEST_CASE("identical seeds produce bit-identical runs") {
  TrainConfig config = quick_config();
  auto a = train(config);
  auto b = train(config);
  CHECK(a.policy.params == b.policy.params);
  REQUIRE(a.log.records.size() == b.log.records.size());
  for (std::size_t i = 0; i < a.log.records.size(); ++i) {
    const auto& ra = a.log.records[i];
    const auto& rb = b.log.records[i];
    CHECK(ra.epoch == rb.epoch);
    // Bit-equality everywhere except the wall clock.
    CHECK(std::memcmp(&ra.mean_sample_reward, &rb.mean_sample_reward, sizeof(double)) == 0);
    CHECK(std::memcmp(&ra.greedy_reward, &rb.greedy_reward, sizeof(double)) == 0);
    CHECK(std::memcmp(&ra.rl_loss, &rb.rl_loss, sizeof(double)) == 0);
    CHECK(std::memcmp(&ra.mle_loss, &rb.mle_loss, sizeof(double)) == 0);
    CHECK(ra.fp_total == rb.fp_total);
    CHECK(std::memcmp(&ra.win_rate, &rb.win_rate, sizeof(double)) == 0);
  }
}

TEST_CASE("the RL phase bills exactly one FP per instance per epoch") {
  TrainConfig config = quick_config();
  auto result = train(config);
  const auto& records = result.log.records;
  REQUIRE(records.size() ==
          static_cast<std::size_t>(config.epochs + config.mle_warmup_epochs + 1));
  for (std::size_t i = 1; i < records.size(); ++i) {
    const std::uint64_t delta = records[i].fp_total - records[i - 1].fp_total;
    if (records[i].epoch <= config.mle_warmup_epochs)
      CHECK(delta == 0);  // warmup never samples
    else
      CHECK(delta == static_cast<std::uint64_t>(config.contexts));
  }
}

TEST_CASE("warmup MLE loss is nonincreasing at a small learning rate") {
  TrainConfig config = quick_config();
  config.learning_rate = 0.05;
  config.mle_warmup_epochs = 10;
  config.epochs = 0;
  auto result = train(config);
  const auto& records = result.log.records;
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (r.epoch == 0) continue;  // pre-training row has no MLE value
    CHECK(r.mle_loss <= prev + 1e-12);
    prev = r.mle_loss;
  }
}

TEST_CASE("gradient sanity holds mid-training") {
  TrainConfig config = quick_config();
  auto result = train(config);
  FpLedger ledger;
  SeededRng rng(119);
  MaskVector mask = build_mask(config.horizon, config.p_m, rng);
  auto batch = rollout_masked_parallel(result.policy, result.task, 0, result.dataset.entry(0),
                                       mask, config.k_samples, rng, ledger);
  RLHyper hyper;
  hyper.lambda = config.lambda;
  Policy p = result.policy;
  auto fn = [&](const Policy& q) {
    return combined_loss(q, result.dataset, result.task, batch, hyper, SeededRng(120));
  };
  CHECK(finite_difference_check(fn, p, 1e-6, 100, SeededRng(121)) <= 1e-4);
}

TEST_CASE("evaluate scores greedy decodes against the targets") {
  TaskSpec task = make_random_task(4, 3, 5, 122, RewardKind::PositionMatch);
  Policy p = Policy::tabular(5, 3, 4);
  for (int x = 0; x < 5; ++x)
    for (int t = 0; t < 3; ++t)
      p.params[p.tabular_index(x, t, task.target(x)[static_cast<std::size_t>(t)])] = 40.0;
  CHECK(evaluate(p, task) == doctest::Approx(1.0));
}

TEST_CASE("evaluate of the uniform policy matches enumeration over all targets") {
  // V=2, T=2: all four contexts realize all four targets; uniform greedy
  // decodes [0,0] everywhere, so the mean position match is exactly 1/2.
  TaskSpec task = make_random_task(2, 2, 4, 0, RewardKind::PositionMatch);
  task.targets = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  Policy uniform = Policy::tabular(4, 2, 2);
  CHECK(evaluate(uniform, task) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("invalid configurations are rejected") {
  TrainConfig config = quick_config();
  config.p_m = 1.5;
  CHECK_THROWS_AS(validate_config(config), std::invalid_argument);
  config = quick_config();
  config.k_samples = 0;
  CHECK_THROWS_AS(validate_config(config), std::invalid_argument);
  config = quick_config();
  config.learning_rate = 0.0;
  CHECK_THROWS_AS(validate_config(config), std::invalid_argument);
  config = quick_config();
  config.variant = ObsKind::MaxObs;
  CHECK_THROWS_AS(validate_config(config), std::invalid_argument);
}

TEST_CASE("the sample count never changes the masked-parallel training cost") {
  TrainConfig config = quick_config();
  config.k_samples = 2;
  const auto fp_small = train(config).log.records.back().fp_total;
  config.k_samples = 64;
  const auto fp_large = train(config).log.records.back().fp_total;
  CHECK(fp_small == fp_large);
  CHECK(fp_small == static_cast<std::uint64_t>(config.epochs * config.contexts));
}

TEST_CASE("extra mask draws per instance multiply the RL-phase cost") {
  TrainConfig config = quick_config();
  config.masks_per_instance = 2;
  auto result = train(config);
  const auto& records = result.log.records;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].epoch <= config.mle_warmup_epochs) continue;
    CHECK(records[i].fp_total - records[i - 1].fp_total ==
          static_cast<std::uint64_t>(2 * config.contexts));
  }
}

TEST_CASE("a strong RL weight beats both the warmup policy and the offline control") {
  // The RL term has to overpower the anchoring MLE term before greedy decoding
  // moves off the static data; at this reward scale that takes a large weight.
  TrainConfig config;
  config.vocab = 12;
  config.horizon = 8;
  config.contexts = 32;
  config.task_seed = 1;
  config.k_candidates = 8;
  config.k_samples = 16;
  config.lambda = 30.0;
  config.learning_rate = 0.1;
  config.epochs = 80;
  config.mle_warmup_epochs = 20;
  config.seed = 0;
  config.eval_every = 20;
  auto semi = train(config);

  TrainConfig offline = config;
  offline.p_m = 0.0;
  auto control = train(offline);

  const double semi_final = semi.log.records.back().greedy_reward;
  const double control_final = control.log.records.back().greedy_reward;
  CHECK(semi_final > semi.post_warmup_greedy + 0.05);
  CHECK(semi_final > control_final + 0.05);
}

TEST_CASE("scheduled-sampling and full-state variants train with the sequential cost law") {
  TrainConfig config = quick_config();
  config.variant = ObsKind::FullState;
  config.k_samples = 1;
  config.baseline = BaselineKind::SelfCritic;
  config.p_m = 1.0;
  config.epochs = 2;
  config.mle_warmup_epochs = 1;
  auto result = train(config);
  const auto& records = result.log.records;
  // At p_m=1 every sequential instance costs exactly horizon FPs.
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].epoch <= config.mle_warmup_epochs) continue;
    const std::uint64_t delta = records[i].fp_total - records[i - 1].fp_total;
    CHECK(delta == static_cast<std::uint64_t>(config.contexts * config.horizon));
  }
  // Self-critic decodes are billed on their own line.
  CHECK(result.log.sc_fp_total ==
        static_cast<std::uint64_t>(config.epochs * config.contexts * config.horizon));
}

TEST_SUITE_END();
