#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dormsim/config.hpp"

namespace dormsim {

// One decision round's invalid-energy account, kW*min per component.
struct EnergyBreakdown {
  double e_tran = 0.0;      // device -> server transmission
  double e_deal = 0.0;      // server processing
  double e_up = 0.0;        // server -> cloud upload
  double e_abnormal = 0.0;  // undetected abnormal operation
  double total = 0.0;       // sum of the four
};

// Transmission rate of one device, MB/minute. The override (when set)
// bypasses the channel law; otherwise rate = B * log2(1 + p / noise).
inline double transmission_rate(const SystemConfig& cfg, int device) {
  if (!(cfg.bandwidth > 0.0)) throw ConfigError("bandwidth must be > 0");
  if (!(cfg.noise_power > 0.0)) throw ConfigError("noise_power must be > 0");
  if (!cfg.tx_rates.empty()) return cfg.tx_rates[static_cast<std::size_t>(device)];
  if (cfg.tx_rate_override) return *cfg.tx_rate_override;
  double p = cfg.tx_power(device);
  if (p < 0.0) throw ConfigError("device_tx_power must be >= 0");
  double rate = cfg.bandwidth * std::log2(1.0 + p / cfg.noise_power);
  if (!(rate > 0.0)) throw ConfigError("computed transmission rate is zero");
  return rate;
}

inline double transmission_rate(const SystemConfig& cfg) { return transmission_rate(cfg, 0); }

struct E1Parts {
  double e_tran = 0.0;
  double e_deal = 0.0;
  double e_up = 0.0;
  double data_mb = 0.0;  // total data shipped to the server this round
};

// E1 of one round: transmission, processing and upload energy for the given
// per-slice monitoring durations (one entry per monitored slice, each with
// devices_per_slice devices). Durations must already satisfy 1 <= t1 <= T.
inline E1Parts round_e1(const SystemConfig& cfg, std::span<const double> monitor_durations) {
  if (monitor_durations.empty()) throw std::invalid_argument("round_e1: no monitor durations");
  for (double t1 : monitor_durations) {
    if (!(t1 >= 1.0 && t1 <= cfg.round_duration))
      throw std::invalid_argument("round_e1: monitor duration out of [1, T]");
  }
  E1Parts out;
  int n = cfg.devices_per_slice;
  for (double t1 : monitor_durations) {
    for (int d = 0; d < n; ++d) {
      out.e_tran += cfg.tx_power(d) * t1;
      out.data_mb += transmission_rate(cfg, d) * t1;
    }
  }
  out.e_deal = cfg.processing_power * out.data_mb / cfg.compute_capacity();
  out.e_up = cfg.upload_power_per_block * out.data_mb / cfg.unit_block_size;
  if (!std::isfinite(out.e_tran) || !std::isfinite(out.e_deal) || !std::isfinite(out.e_up))
    throw std::invalid_argument("round_e1: non-finite energy");
  return out;
}

inline E1Parts round_e1(const SystemConfig& cfg, double monitor_duration) {
  return round_e1(cfg, std::span<const double>(&monitor_duration, 1));
}

// Uploads per round given the data shipped this round. Consistent with the
// upload energy above: f * (e_up_per_block * beta * S_size / S_unit) equals
// upload_power_per_block * D / S_unit.
inline double upload_frequency(const SystemConfig& cfg, double total_data_mb) {
  if (total_data_mb < 0.0) throw std::invalid_argument("upload_frequency: negative data");
  return total_data_mb / (cfg.storage_threshold * cfg.memory_size);
}

// One undetected anomaly's footprint on one device.
struct DevicePersistence {
  int device = 0;     // index within the slice, [0, N)
  double minutes = 0; // t3, time the device stayed abnormal
};

// E2 of one round: energy burned by devices whose anomaly fell in a dormancy
// window. Zero when everything was caught inside monitoring. Entries from
// distinct events may repeat a device; each anomaly instance counts.
inline double abnormal_energy(const SystemConfig& cfg,
                              std::span<const DevicePersistence> persistences) {
  if (persistences.empty()) return 0.0;
  std::vector<bool> seen(static_cast<std::size_t>(cfg.devices_per_slice), false);
  int distinct = 0;
  double e2 = 0.0;
  for (const auto& p : persistences) {
    if (p.device < 0 || p.device >= cfg.devices_per_slice)
      throw std::invalid_argument("abnormal_energy: device index exceeds N (C1)");
    if (p.minutes < 0.0) throw std::invalid_argument("abnormal_energy: negative persistence");
    if (!seen[static_cast<std::size_t>(p.device)]) {
      seen[static_cast<std::size_t>(p.device)] = true;
      if (++distinct > cfg.devices_per_slice)
        throw std::invalid_argument("abnormal_energy: more abnormal devices than N (C1)");
    }
    e2 += cfg.abnormal_power(p.device) * p.minutes;
  }
  return e2;
}

// Total invalid energy of the round; total is exactly the sum of the parts.
inline EnergyBreakdown total_round_energy(const E1Parts& e1, double e_abnormal) {
  if (e1.e_tran < 0.0 || e1.e_deal < 0.0 || e1.e_up < 0.0 || e_abnormal < 0.0)
    throw std::invalid_argument("total_round_energy: negative component");
  EnergyBreakdown b;
  b.e_tran = e1.e_tran;
  b.e_deal = e1.e_deal;
  b.e_up = e1.e_up;
  b.e_abnormal = e_abnormal;
  b.total = b.e_tran + b.e_deal + b.e_up + b.e_abnormal;
  return b;
}

}  // namespace dormsim
