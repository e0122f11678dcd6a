#include "semirl/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace semirl {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string trainlog_csv(const TrainLog& log) {
  std::string out =
      "epoch,mean_sample_reward,greedy_reward,rl_loss,mle_loss,fp_total,win_rate,seconds\n";
  for (const auto& r : log.records) {
    out += std::to_string(r.epoch);
    out += ',';
    out += format_double(r.mean_sample_reward);
    out += ',';
    out += format_double(r.greedy_reward);
    out += ',';
    out += format_double(r.rl_loss);
    out += ',';
    out += format_double(r.mle_loss);
    out += ',';
    out += std::to_string(r.fp_total);
    out += ',';
    out += format_double(r.win_rate);
    out += ',';
    out += format_double(r.seconds);
    out += '\n';
  }
  return out;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

void write_trainlog_csv(const std::string& path, const TrainLog& log) {
  write_file(path, trainlog_csv(log));
}

std::string sweep_summary_csv(std::span<const SweepRow> rows) {
  std::string out = "axis,value,final_greedy_reward,fp_total,win_rate\n";
  for (const auto& r : rows) {
    out += r.axis;
    out += ',';
    out += r.value;
    out += ',';
    out += format_double(r.final_greedy_reward);
    out += ',';
    out += std::to_string(r.fp_total);
    out += ',';
    out += format_double(r.win_rate);
    out += '\n';
  }
  return out;
}

void write_sweep_summary(const std::string& path, std::span<const SweepRow> rows) {
  write_file(path, sweep_summary_csv(rows));
}

std::vector<SweepRow> read_sweep_summary(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty summary: " + path);
  std::vector<SweepRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 5) throw std::runtime_error("malformed summary row in " + path);
    SweepRow row;
    row.axis = fields[0];
    row.value = fields[1];
    row.final_greedy_reward = std::stod(fields[2]);
    row.fp_total = std::stoull(fields[3]);
    row.win_rate = std::stod(fields[4]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> merge_sweep_rows(const std::vector<std::vector<SweepRow>>& inputs,
                                       std::ostream& warnings) {
  std::vector<SweepRow> merged;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& rows : inputs) {
    for (const auto& row : rows) {
      const auto key = std::make_pair(row.axis, row.value);
      auto it = index.find(key);
      if (it != index.end()) {
        warnings << "warning: duplicate key (" << row.axis << ", " << row.value
                 << "); keeping the later run\n";
        merged[it->second] = row;
      } else {
        index.emplace(key, merged.size());
        merged.push_back(row);
      }
    }
  }
  return merged;
}

std::string render_text_table(std::span<const SweepRow> rows) {
  const std::vector<std::string> header = {"axis", "value", "final_greedy_reward", "fp_total",
                                           "win_rate"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back(header);
  for (const auto& r : rows)
    cells.push_back({r.axis, r.value, format_double(r.final_greedy_reward),
                     std::to_string(r.fp_total), format_double(r.win_rate)});

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t c = 0; c < cells[i].size(); ++c) {
      out += cells[i][c];
      if (c + 1 < cells[i].size()) out.append(widths[c] - cells[i][c].size() + 2, ' ');
    }
    out += '\n';
    if (i == 0) {
      for (std::size_t c = 0; c < widths.size(); ++c) {
        out.append(widths[c], '-');
        if (c + 1 < widths.size()) out.append(2, ' ');
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace semirl
