#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dormsim/config.hpp"
#include "dormsim/rng.hpp"

namespace dormsim {

enum class TimelineMode { deterministic, uniform_random };

inline const char* to_string(TimelineMode m) {
  return m == TimelineMode::deterministic ? "deterministic" : "uniform-random";
}

inline TimelineMode timeline_mode_from_string(const std::string& s) {
  if (s == "deterministic") return TimelineMode::deterministic;
  if (s == "uniform-random" || s == "uniform_random") return TimelineMode::uniform_random;
  throw ConfigError("unknown timeline mode: " + s);
}

struct AnomalyEvent {
  double occurrence_time = 0.0;       // minutes from simulation start
  std::vector<int> affected_devices;  // size I, sorted, distinct
};

// Immutable, seeded anomaly schedule over a fixed horizon. Event times are
// strictly increasing; all windows downstream are half-open [start, end).
class AnomalyTimeline {
 public:
  AnomalyTimeline() = default;
  AnomalyTimeline(std::vector<AnomalyEvent> events, TimelineMode mode, std::uint64_t seed,
                  double horizon)
      : events_(std::move(events)), mode_(mode), seed_(seed), horizon_(horizon) {
    for (std::size_t i = 1; i < events_.size(); ++i) {
      if (!(events_[i].occurrence_time > events_[i - 1].occurrence_time))
        throw std::invalid_argument("timeline events must be strictly increasing");
    }
  }

  const std::vector<AnomalyEvent>& events() const { return events_; }
  TimelineMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  double horizon() const { return horizon_; }
  bool empty() const { return events_.empty(); }

  // Number of events with occurrence_time strictly before t. With t = the end
  // of round k's monitoring window this is H_k.
  int cumulative_count_at(double t) const {
    auto it = std::lower_bound(events_.begin(), events_.end(), t,
                               [](const AnomalyEvent& e, double v) { return e.occurrence_time < v; });
    return static_cast<int>(it - events_.begin());
  }

 private:
  std::vector<AnomalyEvent> events_;
  TimelineMode mode_ = TimelineMode::deterministic;
  std::uint64_t seed_ = 0;
  double horizon_ = 0.0;
};

// Builds the event schedule for [0, horizon]. Deterministic mode places
// events at T', 2T', 3T', ...; uniform mode draws inter-arrival times from
// (0, 2T') so the mean interval stays T'. Affected devices are sampled per
// event, I distinct indices out of N. Fully reproducible from the seed.
inline AnomalyTimeline build_timeline(const SystemConfig& cfg, double horizon, TimelineMode mode,
                                      std::uint64_t seed) {
  if (!(horizon > 0.0)) throw ConfigError("timeline horizon must be > 0");
  if (!(cfg.anomaly_interval > 0.0)) throw ConfigError("anomaly_interval must be > 0");
  Rng rng(derive_seed(seed, 0xA0A0));
  std::vector<AnomalyEvent> events;
  double t = 0.0;
  int index = 1;
  while (true) {
    if (mode == TimelineMode::deterministic) {
      t = cfg.anomaly_interval * index;
      ++index;
    } else {
      t += rng.uniform_open() * 2.0 * cfg.anomaly_interval;
    }
    if (t > horizon) break;
    AnomalyEvent ev;
    ev.occurrence_time = t;
    ev.affected_devices =
        rng.sample_without_replacement(cfg.devices_per_slice, cfg.abnormal_device_count);
    events.push_back(std::move(ev));
  }
  return AnomalyTimeline(std::move(events), mode, seed, horizon);
}

struct MissedEvent {
  double occurrence_time = 0.0;
  double persistence = 0.0;           // t3 = kT - occurrence_time
  std::vector<int> affected_devices;  // copy of the event's device set
};

struct RoundResolution {
  int caught = 0;                  // events inside the monitoring window (e_mo)
  int total_events = 0;            // all events inside the round (e)
  std::vector<MissedEvent> missed; // events inside the dormancy window
  int cumulative_count = 0;        // H_k: events before the monitoring window's end
};

// Splits round k's events into caught and missed. Round k spans
// [(k-1)T, kT); its monitoring window is [(k-1)T, (k-1)T + t1). Missed
// events persist until the next round's monitoring starts at kT.
inline RoundResolution resolve_round(const AnomalyTimeline& timeline, int round_index, double t1,
                                     double round_duration) {
  if (round_index < 1) throw std::invalid_argument("resolve_round: round index is 1-based");
  if (!(t1 >= 1.0 && t1 <= round_duration))
    throw std::invalid_argument("resolve_round: t1 out of [1, T]");
  const double start = (round_index - 1) * round_duration;
  const double monitor_end = start + t1;
  const double end = round_index * round_duration;

  RoundResolution res;
  res.cumulative_count = timeline.cumulative_count_at(monitor_end);
  for (const auto& ev : timeline.events()) {
    if (ev.occurrence_time < start) continue;
    if (ev.occurrence_time >= end) break;
    ++res.total_events;
    if (ev.occurrence_time < monitor_end) {
      ++res.caught;
    } else {
      MissedEvent m;
      m.occurrence_time = ev.occurrence_time;
      m.persistence = end - ev.occurrence_time;
      m.affected_devices = ev.affected_devices;
      res.missed.push_back(std::move(m));
    }
  }
  return res;
}

// Line-oriented fixture format: header with mode/seed/horizon, then one
// event per line as "time device device ...".
inline void write_timeline(const AnomalyTimeline& timeline, std::ostream& os) {
  os << "# dormsim-timeline-v1\n";
  os << "mode " << to_string(timeline.mode()) << "\n";
  os << "seed " << timeline.seed() << "\n";
  os << "horizon " << timeline.horizon() << "\n";
  os.precision(17);
  for (const auto& ev : timeline.events()) {
    os << ev.occurrence_time;
    for (int d : ev.affected_devices) os << ' ' << d;
    os << '\n';
  }
}

inline AnomalyTimeline read_timeline(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "# dormsim-timeline-v1")
    throw std::runtime_error("timeline: bad or missing header");
  TimelineMode mode = TimelineMode::deterministic;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::vector<AnomalyEvent> events;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "mode") {
      std::string m;
      ls >> m;
      mode = timeline_mode_from_string(m);
    } else if (head == "seed") {
      ls >> seed;
    } else if (head == "horizon") {
      ls >> horizon;
    } else {
      AnomalyEvent ev;
      ev.occurrence_time = std::stod(head);
      int d;
      while (ls >> d) ev.affected_devices.push_back(d);
      events.push_back(std::move(ev));
    }
  }
  return AnomalyTimeline(std::move(events), mode, seed, horizon);
}

}  // namespace dormsim
