#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "semirl/trainer.hpp"

namespace semirl {

// Deterministic "%.10g" formatting shared by every CSV/JSONL writer.
std::string format_double(double v);

// Columns: epoch,mean_sample_reward,greedy_reward,rl_loss,mle_loss,fp_total,
// win_rate,seconds. Everything except the wall-clock column is reproducible.
std::string trainlog_csv(const TrainLog& log);
void write_trainlog_csv(const std::string& path, const TrainLog& log);

struct SweepRow {
  std::string axis;
  std::string value;
  double final_greedy_reward = 0.0;
  std::uint64_t fp_total = 0;
  double win_rate = 0.0;
};

std::string sweep_summary_csv(std::span<const SweepRow> rows);
void write_sweep_summary(const std::string& path, std::span<const SweepRow> rows);
std::vector<SweepRow> read_sweep_summary(const std::string& path);

// Joins sweep summaries from several run directories into one table keyed by
// (axis, value); on a key clash the later directory wins and a warning is
// emitted. Returns the merged rows in first-seen key order.
std::vector<SweepRow> merge_sweep_rows(const std::vector<std::vector<SweepRow>>& inputs,
                                       std::ostream& warnings);

std::string render_text_table(std::span<const SweepRow> rows);

}  // namespace semirl
