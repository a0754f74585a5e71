#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vdm/common.hpp"

namespace vdm {

// Shortest decimal form that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct MetricsRow {
  std::string run_id;
  std::uint64_t seed = 0;
  long global_step = 0;
  long episode_count = 0;
  std::optional<double> mean_intrinsic_reward;
  std::optional<double> mean_eval_extrinsic_reward;
  std::optional<double> distinct_states_coverage;
  std::optional<double> vdm_loss;
  std::optional<double> policy_entropy;
  std::optional<double> clip_fraction;
  std::optional<double> wall_clock_seconds;
};

inline constexpr const char* kMetricsHeader =
    "run_id,seed,global_step,episode_count,mean_intrinsic_reward,mean_eval_extrinsic_reward,"
    "distinct_states_coverage,vdm_loss,policy_entropy,clip_fraction,wall_clock_seconds";

inline std::string metrics_row_to_csv(const MetricsRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream os;
  os << r.run_id << ',' << r.seed << ',' << r.global_step << ',' << r.episode_count << ','
     << opt(r.mean_intrinsic_reward) << ',' << opt(r.mean_eval_extrinsic_reward) << ','
     << opt(r.distinct_states_coverage) << ',' << opt(r.vdm_loss) << ',' << opt(r.policy_entropy)
     << ',' << opt(r.clip_fraction) << ',' << opt(r.wall_clock_seconds);
  return os.str();
}

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write CSV: " + path);
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << metrics_row_to_csv(r) << '\n';
}

// Generic CSV table for readers (plots, summaries, tests).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }

  std::optional<double> value(std::size_t row, int col) const {
    if (col < 0) return std::nullopt;
    const std::string& s = rows[row][static_cast<std::size_t>(col)];
    if (s.empty()) return std::nullopt;
    return std::stod(s);
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read CSV: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.eof()) break;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    if (first) {
      table.header = fields;
      first = false;
    } else {
      fields.resize(table.header.size());
      table.rows.push_back(fields);
    }
  }
  return table;
}

}  // namespace vdm
