#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "semirl/checkpoint.hpp"
#include "semirl/config.hpp"
#include "semirl/logging.hpp"
#include "semirl/report.hpp"
#include "semirl/verify.hpp"

namespace fs = std::filesystem;
using namespace semirl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  bool seed_set = false;
  std::uint64_t seed = 0;
};

RunConfig load_config_with_overrides(const CommonOpts& opts) {
  RunConfig config = load_run_config(opts.config_path);
  if (opts.seed_set) config.train.seed = opts.seed;
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  return config;
}

void run_one_training(const RunConfig& config, const std::string& dir, SweepRow* row) {
  fs::create_directories(dir);
  TrainResult result = train(config.train);
  write_trainlog_csv(dir + "/trainlog.csv", result.log);
  save_checkpoint(dir + "/checkpoint.bin", result.policy);
  {
    std::ofstream f(dir + "/config.json", std::ios::trunc);
    f << run_config_to_json(config);
  }
  if (row != nullptr) {
    row->final_greedy_reward = result.log.records.back().greedy_reward;
    row->fp_total = result.log.records.back().fp_total;
    row->win_rate = result.log.records.back().win_rate;
  }
  log_msg(LogLevel::Info, "run %s: greedy=%.6f fp=%llu", dir.c_str(),
          result.log.records.back().greedy_reward,
          static_cast<unsigned long long>(result.log.records.back().fp_total));
}

int cmd_verify(const std::string& scope, const std::string& out_path) {
  if (!known_scope(scope)) {
    std::cerr << "unknown scope: " << scope
              << " (expected all|fp|decomposition|lemma1|lemma2|gradients|avg_identity)\n";
    return kExitUsage;
  }
  std::ostringstream report;
  long failures = 0;
  CheckSink sink = [&](const CheckRecord& r) {
    report << check_record_jsonl(r) << "\n";
    if (!r.pass) ++failures;
    log_msg(r.pass ? LogLevel::Info : LogLevel::Error, "%s/%s %s = %g (threshold %g) %s",
            r.suite.c_str(), r.instance.c_str(), r.metric.c_str(), r.value, r.threshold,
            r.pass ? "ok" : "FAIL");
  };
  const bool pass = verify_scope(scope, sink);
  if (out_path.empty()) {
    std::cout << report.str();
  } else {
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) {
      std::cerr << "cannot open " << out_path << "\n";
      return kExitUsage;
    }
    f << report.str();
  }
  if (!pass) std::cerr << failures << " check(s) failed\n";
  return pass ? kExitOk : kExitPropertyFailure;
}

struct SweepPoint {
  RunConfig config;
  std::string value;
  std::string dir;
};

std::vector<std::string> split_values(const std::string& csv) {
  std::vector<std::string> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(item);
  }
  return values;
}

int cmd_sweep(const CommonOpts& opts, const std::string& axis, const std::string& values_csv,
              int jobs) {
  RunConfig base = load_config_with_overrides(opts);
  const auto values = split_values(values_csv);
  if (values.empty()) {
    std::cerr << "sweep: --values must name at least one value\n";
    return kExitUsage;
  }
  std::vector<SweepPoint> points;
  for (const auto& value : values)
    points.push_back(SweepPoint{apply_sweep_axis(base, axis, value), value,
                                base.out_dir + "/" + axis + "=" + value});

  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::vector<std::string> errors;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      rows[i].axis = axis;
      rows[i].value = points[i].value;
      try {
        run_one_training(points[i].config, points[i].dir, &rows[i]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        errors.push_back(points[i].dir + ": " + e.what());
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
  std::vector<std::thread> threads;
  for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "sweep point failed: " << e << "\n";
    return kExitUsage;
  }
  fs::create_directories(base.out_dir);
  write_sweep_summary(base.out_dir + "/sweep_summary.csv", rows);
  std::cout << render_text_table(rows);
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
  if (run_dirs.empty()) {
    std::cerr << "report: at least one run directory is required\n";
    return kExitUsage;
  }
  std::vector<std::vector<SweepRow>> inputs;
  for (const auto& dir : run_dirs) inputs.push_back(read_sweep_summary(dir + "/sweep_summary.csv"));
  auto merged = merge_sweep_rows(inputs, std::cerr);
  const std::string csv = sweep_summary_csv(merged);
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) {
      std::cerr << "cannot open " << out_path << "\n";
      return kExitUsage;
    }
    f << csv;
  } else {
    std::cout << csv;
  }
  std::cout << render_text_table(merged);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semirl: a seeded laboratory for semi-offline RL sequence generation"};
  app.require_subcommand(1);

  // verify
  std::string scope = "all";
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "run the machine-checked property suites");
  verify->add_option("--scope", scope,
                     "all|fp|decomposition|lemma1|lemma2|gradients|avg_identity");
  verify->add_option("--out", verify_out, "write the JSON-lines report here (default stdout)");

  // train
  CommonOpts train_opts;
  auto* train_cmd = app.add_subcommand("train", "run one training job from a JSON config");
  train_cmd->add_option("--config", train_opts.config_path, "JSON run config")->required();
  auto* train_seed = train_cmd->add_option("--seed", train_opts.seed, "override the config seed");
  train_cmd->add_option("--out", train_opts.out_dir, "override the output directory");

  // sweep
  CommonOpts sweep_opts;
  std::string axis;
  std::string values_csv;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "train once per value of one configuration axis");
  sweep->add_option("--config", sweep_opts.config_path, "JSON run config")->required();
  sweep->add_option("--axis", axis, "p_m|K|lambda|variant|dataset_mode")->required();
  sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
  sweep->add_option("--jobs", jobs, "parallel sweep points");
  auto* sweep_seed = sweep->add_option("--seed", sweep_opts.seed, "override the config seed");
  sweep->add_option("--out", sweep_opts.out_dir, "override the output directory");

  // report
  std::vector<std::string> run_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "consolidate sweep summaries from run directories");
  report->add_option("dirs", run_dirs, "run directories holding sweep_summary.csv");
  report->add_option("--out", report_out, "write the merged CSV here (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  train_opts.seed_set = train_seed->count() > 0;
  sweep_opts.seed_set = sweep_seed->count() > 0;

  try {
    if (verify->parsed()) return cmd_verify(scope, verify_out);
    if (train_cmd->parsed()) {
      RunConfig config = load_config_with_overrides(train_opts);
      run_one_training(config, config.out_dir, nullptr);
      return kExitOk;
    }
    if (sweep->parsed()) return cmd_sweep(sweep_opts, axis, values_csv, jobs);
    if (report->parsed()) return cmd_report(run_dirs, report_out);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
