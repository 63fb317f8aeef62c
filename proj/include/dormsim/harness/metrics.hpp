#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dormsim/format.hpp"

namespace dormsim {

inline constexpr const char* kMetricsHeader = "# dormsim-metrics-v1";
inline constexpr const char* kMetricsColumns =
    "run_id,agent,seed,phase,episode,mean_reward,mean_energy_per_min,cum_energy_per_min,"
    "e_tran,e_deal,e_up,e_abnormal,mean_t1,mean_sleep,accuracy_rolling,wall_clock_s";

// One per-episode record. Energies are per-minute averages over the episode;
// cum_energy_per_min averages from the start of the run within the same
// phase. wall_clock_s is the only non-deterministic column, kept last so
// byte-level comparisons can strip it.
struct MetricsRow {
  std::string run_id;
  std::string agent;
  std::uint64_t seed = 0;
  std::string phase;  // "train" or "eval"
  long episode = 0;
  double mean_reward = 0.0;  // raw env reward, unscaled
  double mean_energy_per_min = 0.0;
  double cum_energy_per_min = 0.0;
  double e_tran = 0.0;
  double e_deal = 0.0;
  double e_up = 0.0;
  double e_abnormal = 0.0;
  double mean_t1 = 0.0;
  double mean_sleep = 0.0;
  double accuracy_rolling = 0.0;
  double wall_clock_s = 0.0;
};

class MetricsWriter {
 public:
  explicit MetricsWriter(std::ostream& os) : os_(os) {
    os_ << kMetricsHeader << '\n' << kMetricsColumns << '\n';
  }

  void write(const MetricsRow& r) {
    check_field(r.run_id);
    check_field(r.agent);
    check_field(r.phase);
    os_ << r.run_id << ',' << r.agent << ',' << r.seed << ',' << r.phase << ',' << r.episode
        << ',' << format_double(r.mean_reward) << ',' << format_double(r.mean_energy_per_min)
        << ',' << format_double(r.cum_energy_per_min) << ',' << format_double(r.e_tran) << ','
        << format_double(r.e_deal) << ',' << format_double(r.e_up) << ','
        << format_double(r.e_abnormal) << ',' << format_double(r.mean_t1) << ','
        << format_double(r.mean_sleep) << ',' << format_double(r.accuracy_rolling) << ','
        << format_double(r.wall_clock_s) << '\n';
  }

 private:
  static void check_field(const std::string& s) {
    if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
      throw std::invalid_argument("metrics field must not contain ',' or newline: " + s);
  }
  std::ostream& os_;
};

inline std::vector<MetricsRow> read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader)
    throw std::runtime_error("metrics: bad or missing header");
  if (!std::getline(is, line) || line != kMetricsColumns)
    throw std::runtime_error("metrics: bad or missing column row");
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string item;
    std::istringstream ls(line);
    while (std::getline(ls, item, ',')) f.push_back(item);
    if (f.size() != 16) throw std::runtime_error("metrics: malformed row: " + line);
    MetricsRow r;
    r.run_id = f[0];
    r.agent = f[1];
    r.seed = std::stoull(f[2]);
    r.phase = f[3];
    r.episode = std::stol(f[4]);
    r.mean_reward = std::stod(f[5]);
    r.mean_energy_per_min = std::stod(f[6]);
    r.cum_energy_per_min = std::stod(f[7]);
    r.e_tran = std::stod(f[8]);
    r.e_deal = std::stod(f[9]);
    r.e_up = std::stod(f[10]);
    r.e_abnormal = std::stod(f[11]);
    r.mean_t1 = std::stod(f[12]);
    r.mean_sleep = std::stod(f[13]);
    r.accuracy_rolling = std::stod(f[14]);
    r.wall_clock_s = std::stod(f[15]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace dormsim
