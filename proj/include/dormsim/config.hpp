#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dormsim {

// Raised for invalid configuration values (bad file keys, broken invariants).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Physical and economic constants of the monitored system, one value per
// knob of the energy model plus the anomaly process. Defaults reproduce the
// reference scenario; see configs/default.cfg for the calibration notes.
struct SystemConfig {
  int slice_count = 1;                 // M, number of slices / MAFs
  int devices_per_slice = 100;         // N, devices under one MAF
  double round_duration = 20.0;        // T, minutes per decision round
  double device_tx_power = 0.5;        // kW per device while monitored
  double bandwidth = 1.0;              // MHz, per slice
  double noise_power = 1.0;            // kW, modeled channel noise
  std::optional<double> tx_rate_override = 10.0;  // MB/min; bypasses the log2 rate law
  double cpu_frequency = 1.0;          // c
  double compute_resources = 10000.0;  // P; c*P = MB of processing capacity per round
  double processing_power = 1700.0;    // kW per unit compute-time
  double upload_power_per_block = 1.0; // kW per uploaded memory block
  double memory_size = 10000.0;        // MB of server memory
  double unit_block_size = 100.0;      // MB per memory block
  double storage_threshold = 0.8;      // fraction of memory that triggers an upload
  double anomaly_interval = 20.0;      // T', minutes between anomalies (mean)
  double abnormal_device_power = 1.0;  // kW burned by an undetected abnormal device
  int abnormal_device_count = 10;      // I, devices affected per anomaly event
  double accuracy_threshold = 0.93;    // tau, required monitoring accuracy

  // Optional per-device overrides (length N when set; empty = uniform).
  std::vector<double> device_tx_powers;
  std::vector<double> tx_rates;
  std::vector<double> abnormal_device_powers;

  double compute_capacity() const { return cpu_frequency * compute_resources; }

  double tx_power(int device) const {
    return device_tx_powers.empty() ? device_tx_power
                                    : device_tx_powers[static_cast<std::size_t>(device)];
  }

  double abnormal_power(int device) const {
    return abnormal_device_powers.empty()
               ? abnormal_device_power
               : abnormal_device_powers[static_cast<std::size_t>(device)];
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be > 0");
    };
    if (slice_count < 1) throw ConfigError("slice_count must be >= 1");
    if (devices_per_slice < 1) throw ConfigError("devices_per_slice must be >= 1");
    if (!(round_duration >= 1.0))
      throw ConfigError("round_duration must be >= 1 (minimum monitoring duration)");
    positive(bandwidth, "bandwidth");
    positive(noise_power, "noise_power");
    if (device_tx_power < 0.0) throw ConfigError("device_tx_power must be >= 0");
    if (tx_rate_override && !(*tx_rate_override > 0.0))
      throw ConfigError("tx_rate_override must be > 0");
    positive(cpu_frequency, "cpu_frequency");
    positive(compute_resources, "compute_resources");
    positive(processing_power, "processing_power");
    positive(upload_power_per_block, "upload_power_per_block");
    positive(memory_size, "memory_size");
    positive(unit_block_size, "unit_block_size");
    if (!(storage_threshold > 0.0 && storage_threshold <= 1.0))
      throw ConfigError("storage_threshold out of (0,1]");
    positive(anomaly_interval, "anomaly_interval");
    positive(abnormal_device_power, "abnormal_device_power");
    if (abnormal_device_count < 0 || abnormal_device_count > devices_per_slice)
      throw ConfigError("abnormal_device_count must satisfy 0 <= I <= devices_per_slice");
    if (!(accuracy_threshold > 0.0 && accuracy_threshold <= 1.0))
      throw ConfigError("accuracy_threshold out of (0,1]");
    auto check_vec = [&](const std::vector<double>& v, const char* name) {
      if (v.empty()) return;
      if (v.size() != static_cast<std::size_t>(devices_per_slice))
        throw ConfigError(std::string(name) + " must have devices_per_slice entries");
      for (double x : v)
        if (!(x > 0.0)) throw ConfigError(std::string(name) + " entries must be > 0");
    };
    check_vec(device_tx_powers, "device_tx_powers");
    check_vec(tx_rates, "tx_rates");
    check_vec(abnormal_device_powers, "abnormal_device_powers");
  }
};

}  // namespace dormsim
