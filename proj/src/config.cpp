#include "semirl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace semirl {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key))
      throw ConfigError("config: unknown key: " + (section.empty() ? key : section + "." + key));
  }
}

template <typename T>
T get_or(const json& obj, const std::string& section, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value type for key: " + section + "." + key);
  }
}

std::string get_str(const json& obj, const std::string& section, const std::string& key,
                    const std::string& fallback) {
  return get_or<std::string>(obj, section, key, fallback);
}

}  // namespace

ObsKind parse_variant(const std::string& name) {
  if (name == "masked") return ObsKind::Masked;
  if (name == "full_state") return ObsKind::FullState;
  if (name == "scheduled_sampling") return ObsKind::ScheduledSampling;
  if (name == "noisy_mask") return ObsKind::NoisyMask;
  if (name == "all_aug") return ObsKind::AllAug;
  if (name == "pre_aug") return ObsKind::PreAug;
  throw ConfigError("config: unknown variant: " + name);
}

RewardKind parse_reward(const std::string& name) {
  if (name == "unigram_f1") return RewardKind::UnigramF1;
  if (name == "position_match") return RewardKind::PositionMatch;
  throw ConfigError("config: unknown reward: " + name);
}

DatasetMode parse_dataset_mode(const std::string& name) {
  if (name == "ground_truth") return DatasetMode::GroundTruth;
  if (name == "data_minus") return DatasetMode::DataMinus;
  if (name == "data_plus") return DatasetMode::DataPlus;
  throw ConfigError("config: unknown dataset mode: " + name);
}

BaselineKind parse_baseline(const std::string& name) {
  if (name == "batch_mean") return BaselineKind::BatchMean;
  if (name == "self_critic") return BaselineKind::SelfCritic;
  throw ConfigError("config: unknown baseline: " + name);
}

Backend parse_backend(const std::string& name) {
  if (name == "tabular") return Backend::TabularContext;
  if (name == "linear") return Backend::LinearFeature;
  throw ConfigError("config: unknown backend: " + name);
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(doc, "", {"task", "data", "rl", "opt", "run"});

  RunConfig config;
  TrainConfig& t = config.train;

  if (doc.contains("task")) {
    const json& s = doc["task"];
    check_keys(s, "task", {"vocab", "horizon", "contexts", "target_seed", "reward"});
    t.vocab = get_or<int>(s, "task", "vocab", t.vocab);
    t.horizon = get_or<int>(s, "task", "horizon", t.horizon);
    t.contexts = get_or<int>(s, "task", "contexts", t.contexts);
    t.task_seed = get_or<std::uint64_t>(s, "task", "target_seed", t.task_seed);
    t.reward = parse_reward(get_str(s, "task", "reward", reward_kind_name(t.reward)));
  }
  if (doc.contains("data")) {
    const json& s = doc["data"];
    check_keys(s, "data", {"mode", "k_candidates"});
    t.dataset_mode = parse_dataset_mode(get_str(s, "data", "mode", dataset_mode_name(t.dataset_mode)));
    t.k_candidates = get_or<int>(s, "data", "k_candidates", t.k_candidates);
  }
  if (doc.contains("rl")) {
    const json& s = doc["rl"];
    check_keys(s, "rl",
               {"p_m", "K", "lambda", "baseline", "variant", "noise_rate",
                "include_unmasked_positions"});
    t.p_m = get_or<double>(s, "rl", "p_m", t.p_m);
    t.k_samples = get_or<int>(s, "rl", "K", t.k_samples);
    t.lambda = get_or<double>(s, "rl", "lambda", t.lambda);
    t.baseline = parse_baseline(get_str(s, "rl", "baseline", baseline_kind_name(t.baseline)));
    t.variant = parse_variant(get_str(s, "rl", "variant", obs_kind_name(t.variant)));
    t.noise_rate = get_or<double>(s, "rl", "noise_rate", t.noise_rate);
    t.include_unmasked_positions =
        get_or<bool>(s, "rl", "include_unmasked_positions", t.include_unmasked_positions);
  }
  if (doc.contains("opt")) {
    const json& s = doc["opt"];
    check_keys(s, "opt",
               {"learning_rate", "epochs", "mle_warmup_epochs", "mask_corrupt_rate", "backend",
                "masks_per_instance"});
    t.learning_rate = get_or<double>(s, "opt", "learning_rate", t.learning_rate);
    t.epochs = get_or<int>(s, "opt", "epochs", t.epochs);
    t.mle_warmup_epochs = get_or<int>(s, "opt", "mle_warmup_epochs", t.mle_warmup_epochs);
    t.mask_corrupt_rate = get_or<double>(s, "opt", "mask_corrupt_rate", t.mask_corrupt_rate);
    t.backend = parse_backend(get_str(s, "opt", "backend", backend_name(t.backend)));
    t.masks_per_instance = get_or<int>(s, "opt", "masks_per_instance", t.masks_per_instance);
  }
  if (doc.contains("run")) {
    const json& s = doc["run"];
    check_keys(s, "run", {"seed", "eval_every", "out_dir"});
    t.seed = get_or<std::uint64_t>(s, "run", "seed", t.seed);
    t.eval_every = get_or<int>(s, "run", "eval_every", t.eval_every);
    config.out_dir = get_str(s, "run", "out_dir", config.out_dir);
  }

  try {
    validate_config(t);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& config) {
  const TrainConfig& t = config.train;
  json doc;
  doc["task"] = {{"vocab", t.vocab},
                 {"horizon", t.horizon},
                 {"contexts", t.contexts},
                 {"target_seed", t.task_seed},
                 {"reward", reward_kind_name(t.reward)}};
  doc["data"] = {{"mode", dataset_mode_name(t.dataset_mode)}, {"k_candidates", t.k_candidates}};
  doc["rl"] = {{"p_m", t.p_m},
               {"K", t.k_samples},
               {"lambda", t.lambda},
               {"baseline", baseline_kind_name(t.baseline)},
               {"variant", obs_kind_name(t.variant)},
               {"noise_rate", t.noise_rate},
               {"include_unmasked_positions", t.include_unmasked_positions}};
  doc["opt"] = {{"learning_rate", t.learning_rate},
                {"epochs", t.epochs},
                {"mle_warmup_epochs", t.mle_warmup_epochs},
                {"mask_corrupt_rate", t.mask_corrupt_rate},
                {"backend", backend_name(t.backend)},
                {"masks_per_instance", t.masks_per_instance}};
  doc["run"] = {{"seed", t.seed}, {"eval_every", t.eval_every}, {"out_dir", config.out_dir}};
  return doc.dump(2) + "\n";
}

RunConfig apply_sweep_axis(const RunConfig& base, const std::string& axis,
                           const std::string& value) {
  RunConfig config = base;
  try {
    if (axis == "p_m") {
      config.train.p_m = std::stod(value);
    } else if (axis == "K") {
      config.train.k_samples = std::stoi(value);
    } else if (axis == "lambda") {
      config.train.lambda = std::stod(value);
    } else if (axis == "variant") {
      if (value == "scheduled_sampling_pm1") {
        config.train.variant = ObsKind::ScheduledSampling;
        config.train.p_m = 1.0;
      } else {
        config.train.variant = parse_variant(value);
      }
    } else if (axis == "dataset_mode") {
      config.train.dataset_mode = parse_dataset_mode(value);
    } else {
      throw ConfigError("unknown sweep axis: " + axis +
                        " (expected p_m|K|lambda|variant|dataset_mode)");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("sweep: bad value '" + value + "' for axis " + axis);
  }
  try {
    validate_config(config.train);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

const std::map<std::string, double>& lambda_presets() {
  static const std::map<std::string, double> presets = {
      {"cnn_dm", 20.0}, {"samsum", 5.0}, {"squad", 4.0}, {"xsum", 2.0}};
  return presets;
}

}  // namespace semirl
