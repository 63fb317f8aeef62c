#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dormsim/config.hpp"
#include "dormsim/format.hpp"
#include "dormsim/harness/metrics.hpp"

namespace dormsim {

// Exponential moving average with weight on the previous smoothed value;
// weight 0 returns the input unchanged.
inline std::vector<double> ema_smooth(std::span<const double> xs, double weight) {
  if (!(weight >= 0.0 && weight < 1.0))
    throw std::invalid_argument("ema_smooth: weight must be in [0, 1)");
  std::vector<double> out(xs.begin(), xs.end());
  for (std::size_t i = 1; i < out.size(); ++i)
    out[i] = weight * out[i - 1] + (1.0 - weight) * out[i];
  return out;
}

inline const std::vector<std::string>& plot_panels() {
  static const std::vector<std::string> panels{"reward", "energy", "sleep", "accuracy"};
  return panels;
}

inline void validate_panel(const std::string& panel) {
  for (const auto& p : plot_panels())
    if (p == panel) return;
  throw ConfigError("unknown panel '" + panel +
                    "' (expected reward, energy, sleep, or accuracy)");
}

inline double panel_value(const MetricsRow& r, const std::string& panel) {
  if (panel == "reward") return r.mean_reward;
  if (panel == "energy") return r.mean_energy_per_min;
  if (panel == "sleep") return r.mean_sleep;
  if (panel == "accuracy") return r.accuracy_rolling;
  throw ConfigError("unknown panel '" + panel +
                    "' (expected reward, energy, sleep, or accuracy)");
}

inline std::string panel_axis_label(const std::string& panel) {
  if (panel == "reward") return "mean round reward";
  if (panel == "energy") return "energy per minute (kW)";
  if (panel == "sleep") return "mean dormancy per round (min)";
  return "monitoring accuracy";
}

struct PlotSeries {
  std::string agent;
  std::uint64_t seed = 0;
  std::string filename;  // relative to the output directory
};

// One whitespace-separated .dat per (agent, seed) over the training rows:
// x = episode, y = the panel metric run through ema_smooth.
inline std::vector<PlotSeries> write_panel_data(const std::vector<MetricsRow>& rows,
                                                const std::string& panel, const std::string& dir,
                                                double smoothing) {
  validate_panel(panel);
  std::vector<const MetricsRow*> train;
  for (const auto& row : rows)
    if (row.phase == "train") train.push_back(&row);
  if (train.empty()) throw std::runtime_error("no training rows to plot");
  std::filesystem::create_directories(dir);

  std::vector<PlotSeries> series;
  for (const auto* row : train) {
    const bool known = [&] {
      for (const auto& s : series)
        if (s.agent == row->agent && s.seed == row->seed) return true;
      return false;
    }();
    if (!known)
      series.push_back({row->agent, row->seed,
                        row->agent + "_seed" + std::to_string(row->seed) + "_" + panel + ".dat"});
  }
  for (const auto& s : series) {
    std::vector<long> episodes;
    std::vector<double> ys;
    for (const auto* row : train) {
      if (row->agent != s.agent || row->seed != s.seed) continue;
      episodes.push_back(row->episode);
      ys.push_back(panel_value(*row, panel));
    }
    const std::vector<double> sy = ema_smooth(ys, smoothing);
    std::ofstream f(std::filesystem::path(dir) / s.filename);
    if (!f) throw std::runtime_error("cannot open plot data file: " + s.filename);
    f << "# " << panel << " series, exponential smoothing weight " << format_double(smoothing)
      << "\n";
    f << "# episode " << panel << "\n";
    for (std::size_t i = 0; i < episodes.size(); ++i)
      f << episodes[i] << ' ' << format_double(sy[i]) << '\n';
  }
  return series;
}

inline void write_panel_script(const std::vector<PlotSeries>& series, const std::string& panel,
                               double tau, std::ostream& os) {
  os << "set terminal pngcairo size 900,600\n";
  os << "set output '" << panel << ".png'\n";
  os << "set xlabel 'episode'\n";
  os << "set ylabel '" << panel_axis_label(panel) << "'\n";
  os << "set key outside right\n";
  if (panel == "accuracy") os << "set yrange [0:1.05]\n";
  os << "plot ";
  bool first = true;
  for (const auto& s : series) {
    if (!first) os << ", ";
    os << "'" << s.filename << "' using 1:2 with lines title '" << s.agent << "/" << s.seed
       << "'";
    first = false;
  }
  if (panel == "accuracy") {
    if (!first) os << ", ";
    os << format_double(tau) << " with lines dashtype 2 title 'accuracy threshold'";
  }
  os << "\n";
}

// Emits data files plus a gnuplot script for one panel ("all" covers every
// panel). Returns the script paths written.
inline std::vector<std::string> write_plots(const std::vector<MetricsRow>& rows,
                                            const std::string& dir, const std::string& panel,
                                            double smoothing, double tau) {
  std::vector<std::string> panels;
  if (panel == "all") {
    panels = plot_panels();
  } else {
    validate_panel(panel);
    panels = {panel};
  }
  std::vector<std::string> scripts;
  for (const auto& p : panels) {
    const auto series = write_panel_data(rows, p, dir, smoothing);
    const auto path = std::filesystem::path(dir) / (p + ".gp");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open plot script: " + path.string());
    write_panel_script(series, p, tau, f);
    scripts.push_back(path.string());
  }
  return scripts;
}

}  // namespace dormsim
