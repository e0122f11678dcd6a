#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "semirl/trainer.hpp"

namespace semirl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  TrainConfig train;
  std::string out_dir = "out";
};

// Strict JSON parsing: unknown keys are rejected, naming the offending key.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& config);

ObsKind parse_variant(const std::string& name);
RewardKind parse_reward(const std::string& name);
DatasetMode parse_dataset_mode(const std::string& name);
BaselineKind parse_baseline(const std::string& name);
Backend parse_backend(const std::string& name);

// One sweep point: the base config with a single axis overridden. The
// variant axis accepts the ablation set {masked, scheduled_sampling,
// scheduled_sampling_pm1, noisy_mask, all_aug, pre_aug, full_state}, where
// scheduled_sampling_pm1 also forces p_m to 1.
RunConfig apply_sweep_axis(const RunConfig& base, const std::string& axis,
                           const std::string& value);

// RL-weight presets reported for the published summarization/question tasks;
// documentation only, nothing selects them automatically.
const std::map<std::string, double>& lambda_presets();

}  // namespace semirl
