#pragma once

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dormsim/anomaly.hpp"
#include "dormsim/config.hpp"
#include "dormsim/energy.hpp"

namespace dormsim {

// Everything observable about one simulated round.
struct RoundOutcome {
  int round = 0;        // 1-based within the episode
  double t1 = 0.0;      // clamped monitoring duration actually applied
  EnergyBreakdown energy;
  double reward = 0.0;
  int caught = 0;
  int total_events = 0;
};

struct StepResult {
  std::vector<double> state;  // observation after this round
  double reward = 0.0;
  bool done = false;
  RoundOutcome outcome;
};

struct EnvOptions {
  // Append the round index and the cumulative event count to the
  // observation. Off by default: the observation is exactly the per-device
  // persistence vector.
  bool extended_observation = false;
  // Multiply the reward by the caught/total event ratio of the round.
  // Off by default: the reward is exactly 1 / total energy.
  bool penalized_reward = false;
};

// Episodic round simulator for a single monitor function over one device
// cluster. Each episode runs a fixed number of rounds against one anomaly
// timeline; the agent picks a monitoring duration per round and the rest of
// the round is dormant. Observations are per-device persistence durations of
// the anomalies missed in the latest round.
class DormancyEnv {
 public:
  DormancyEnv(SystemConfig cfg, int rounds_per_episode, EnvOptions options = {})
      : cfg_(std::move(cfg)), rounds_per_episode_(rounds_per_episode), options_(options) {
    cfg_.validate();
    if (rounds_per_episode_ < 1) throw ConfigError("rounds_per_episode must be >= 1");
  }

  const SystemConfig& config() const { return cfg_; }
  const EnvOptions& options() const { return options_; }
  int rounds_per_episode() const { return rounds_per_episode_; }
  double episode_horizon() const { return rounds_per_episode_ * cfg_.round_duration; }
  int state_dim() const {
    return cfg_.devices_per_slice + (options_.extended_observation ? 2 : 0);
  }

  void set_timeline(AnomalyTimeline timeline) {
    if (timeline.horizon() < episode_horizon())
      throw ConfigError("timeline horizon is shorter than the episode");
    timeline_ = std::move(timeline);
    have_timeline_ = true;
  }

  // Clamps a raw policy output into the action contract [1, T].
  double clamp_action(double raw_t1) const {
    return std::clamp(raw_t1, 1.0, cfg_.round_duration);
  }

  std::vector<double> reset() {
    if (!have_timeline_) throw std::logic_error("DormancyEnv: set_timeline before reset");
    round_ = 0;
    caught_total_ = 0;
    events_total_ = 0;
    state_.assign(static_cast<std::size_t>(state_dim()), 0.0);
    return state_;
  }

  bool done() const { return round_ >= rounds_per_episode_; }

  StepResult step(double raw_t1) {
    if (state_.empty()) throw std::logic_error("DormancyEnv: reset before step");
    if (done()) throw std::logic_error("DormancyEnv: episode is over, call reset");
    ++round_;

    const double t1 = clamp_action(raw_t1);
    const double durations[1] = {t1};  // this env is one monitor function
    const E1Parts e1 = round_e1(cfg_, durations);

    const RoundResolution res = resolve_round(timeline_, round_, t1, cfg_.round_duration);
    std::vector<DevicePersistence> persisting;
    std::fill(state_.begin(), state_.end(), 0.0);
    for (const auto& miss : res.missed) {
      for (int d : miss.affected_devices) {
        persisting.push_back({d, miss.persistence});
        auto& slot = state_[static_cast<std::size_t>(d)];
        slot = std::max(slot, miss.persistence);
      }
    }
    if (options_.extended_observation) {
      state_[state_.size() - 2] = round_;
      state_[state_.size() - 1] = res.cumulative_count;
    }
    const double e2 = abnormal_energy(cfg_, persisting);
    const EnergyBreakdown energy = total_round_energy(e1, e2);
    if (!(energy.total > 0.0)) throw std::domain_error("round energy must be positive");

    caught_total_ += res.caught;
    events_total_ += res.total_events;

    StepResult out;
    out.reward = 1.0 / energy.total;
    if (options_.penalized_reward && res.total_events > 0)
      out.reward *= static_cast<double>(res.caught) / res.total_events;
    out.done = done();
    out.outcome = {round_, t1, energy, out.reward, res.caught, res.total_events};
    out.state = state_;
    return out;
  }

  // Fraction of this episode's anomalies caught inside a monitoring window.
  // Periods with no anomalies at all count as perfect.
  double accuracy() const {
    if (events_total_ == 0) return 1.0;
    return static_cast<double>(caught_total_) / events_total_;
  }

  int events_caught() const { return caught_total_; }
  int events_total() const { return events_total_; }

 private:
  SystemConfig cfg_;
  int rounds_per_episode_ = 0;
  EnvOptions options_;
  AnomalyTimeline timeline_;
  bool have_timeline_ = false;
  int round_ = 0;
  int caught_total_ = 0;
  int events_total_ = 0;
  std::vector<double> state_;
};

inline void write_round_outcomes_csv(const std::vector<RoundOutcome>& rows, std::ostream& os) {
  os << "round,t1,e_tran,e_deal,e_up,e_abnormal,total,reward,caught,total_events\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.round << ',' << r.t1 << ',' << r.energy.e_tran << ',' << r.energy.e_deal << ','
       << r.energy.e_up << ',' << r.energy.e_abnormal << ',' << r.energy.total << ',' << r.reward
       << ',' << r.caught << ',' << r.total_events << '\n';
  }
}

}  // namespace dormsim
