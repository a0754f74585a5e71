#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vdm/csv.hpp"

namespace vdm {

// Minimal deterministic SVG line charts: solid mean line plus a shaded
// +-std band across seeds, one SVG per metric column.

namespace plot_detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return std::string(buf);
}

struct Series {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> stddev;
};

}  // namespace plot_detail

// Aggregates one metric across per-seed CSV tables keyed by global_step.
inline plot_detail::Series aggregate_metric(const std::vector<CsvTable>& tables,
                                            const std::string& metric) {
  plot_detail::Series series;
  if (tables.empty()) return series;
  int xcol = tables[0].column("global_step");
  if (xcol < 0) throw ConfigError("emit_plots: CSV lacks required column: global_step");
  std::size_t n_rows = tables[0].rows.size();
  for (std::size_t r = 0; r < n_rows; ++r) {
    double x = tables[0].value(r, xcol).value_or(0.0);
    Vec vals;
    for (const auto& t : tables) {
      if (r >= t.rows.size()) continue;
      auto v = t.value(r, t.column(metric));
      if (v) vals.push_back(*v);
    }
    if (vals.empty()) continue;
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(vals.size());
    series.x.push_back(x);
    series.mean.push_back(mean);
    series.stddev.push_back(std::sqrt(var));
  }
  return series;
}

inline void write_series_svg(const std::string& path, const plot_detail::Series& s,
                             const std::string& title) {
  using plot_detail::fmt;
  const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("emit_plots: cannot write " + path);

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!s.x.empty()) {
    xmin = *std::min_element(s.x.begin(), s.x.end());
    xmax = *std::max_element(s.x.begin(), s.x.end());
    ymin = 1e300;
    ymax = -1e300;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      ymin = std::min(ymin, s.mean[i] - s.stddev[i]);
      ymax = std::max(ymax, s.mean[i] + s.stddev[i]);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << title << "</text>\n";

  if (!s.x.empty()) {
    // band polygon: upper path forward, lower path backward
    out << "<polygon fill=\"#4c72b0\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << fmt(X(s.x[i])) << ',' << fmt(Y(s.mean[i] + s.stddev[i])) << ' ';
    }
    for (std::size_t i = s.x.size(); i-- > 0;) {
      out << fmt(X(s.x[i])) << ',' << fmt(Y(s.mean[i] - s.stddev[i])) << ' ';
    }
    out << "\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#4c72b0\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << fmt(X(s.x[i])) << ',' << fmt(Y(s.mean[i])) << ' ';
    }
    out << "\"/>\n";
  }

  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << ml << "\" y=\"" << H - mb + 18
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt(xmin)
      << "</text>\n";
  out << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 18
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt(xmax)
      << "</text>\n";
  out << "<text x=\"" << ml - 8 << "\" y=\"" << H - mb
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(ymin)
      << "</text>\n";
  out << "<text x=\"" << ml - 8 << "\" y=\"" << mt + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(ymax)
      << "</text>\n";
  out << "</svg>\n";
}

// One SVG per metric column; all CSVs must share the metrics schema.
inline std::vector<std::string> emit_plots(const std::vector<std::string>& csv_paths,
                                           const std::string& out_dir,
                                           const std::string& stem = "metrics") {
  if (csv_paths.empty()) throw ConfigError("emit_plots: no CSV files given");
  std::vector<CsvTable> tables;
  std::vector<std::string> expected = {
      "run_id", "seed", "global_step", "episode_count", "mean_intrinsic_reward",
      "mean_eval_extrinsic_reward", "distinct_states_coverage", "vdm_loss", "policy_entropy",
      "clip_fraction", "wall_clock_seconds"};
  for (const auto& p : csv_paths) {
    CsvTable t = read_csv(p);
    std::string missing;
    for (const auto& col : expected) {
      if (t.column(col) < 0) missing += missing.empty() ? col : ", " + col;
    }
    if (!missing.empty()) {
      throw ConfigError("emit_plots: CSV " + p + " is missing columns: " + missing);
    }
    tables.push_back(std::move(t));
  }
  std::vector<std::string> metrics = {"mean_intrinsic_reward", "mean_eval_extrinsic_reward",
                                      "distinct_states_coverage", "vdm_loss", "policy_entropy",
                                      "clip_fraction"};
  std::vector<std::string> written;
  for (const auto& m : metrics) {
    plot_detail::Series s = aggregate_metric(tables, m);
    std::string path = out_dir + "/" + stem + "_" + m + ".svg";
    write_series_svg(path, s, m);
    written.push_back(path);
  }
  return written;
}

}  // namespace vdm
