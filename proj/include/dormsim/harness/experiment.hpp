#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "dormsim/agents/factory.hpp"
#include "dormsim/anomaly.hpp"
#include "dormsim/checkpoint.hpp"
#include "dormsim/env.hpp"
#include "dormsim/harness/config_file.hpp"
#include "dormsim/harness/metrics.hpp"

namespace dormsim {

// Seed streams: every consumer hangs off the run seed so runs are
// reproducible, and the anomaly draws are shared by all agents at the same
// seed for a like-for-like comparison.
inline constexpr std::uint64_t kTimelineSalt = 0x71AE;
inline constexpr std::uint64_t kEvalSalt = 0xE7A1;

struct RunSummary {
  std::string agent;
  std::uint64_t seed = 0;
  long episodes = 0;
  double final_reward = 0.0;         // mean raw reward over the last tenth of training
  double final_energy_per_min = 0.0; // same tail, average kW over round time
  double final_accuracy = 0.0;       // rolling accuracy at the end of training
  long convergence_episode = -1;     // first episode inside the 95%-of-final band
  long accuracy_crossing = -1;       // first episode at or above the accuracy threshold
  double wall_clock_s = 0.0;
};

struct RunOutput {
  RunSummary summary;
  std::vector<MetricsRow> rows;  // train and eval rows in chronological order
  Checkpoint final_checkpoint;
};

using CheckpointSink =
    std::function<void(const std::string& agent, std::uint64_t seed, long episode,
                       const Checkpoint& ck, bool is_final)>;

struct ConvergenceInfo {
  double final_reward = 0.0;
  double final_energy_per_min = 0.0;
  long convergence_episode = -1;
  long accuracy_crossing = -1;
};

// Post-hoc view of one run's train rows: the converged level is the mean
// over the last tenth of episodes, and convergence is the first episode
// whose smoothed (trailing-window) reward reaches 95% of that level.
inline ConvergenceInfo summarize_training(const std::vector<MetricsRow>& train_rows, double tau,
                                          int smooth_window = 20) {
  ConvergenceInfo info;
  if (train_rows.empty()) return info;
  const std::size_t n = train_rows.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  double sum_r = 0.0, sum_e = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) {
    sum_r += train_rows[i].mean_reward;
    sum_e += train_rows[i].mean_energy_per_min;
  }
  info.final_reward = sum_r / static_cast<double>(tail);
  info.final_energy_per_min = sum_e / static_cast<double>(tail);

  const double band = 0.95 * info.final_reward;
  double window_sum = 0.0;
  std::deque<double> window;
  for (std::size_t i = 0; i < n; ++i) {
    window.push_back(train_rows[i].mean_reward);
    window_sum += train_rows[i].mean_reward;
    if (static_cast<int>(window.size()) > smooth_window) {
      window_sum -= window.front();
      window.pop_front();
    }
    const double smoothed = window_sum / static_cast<double>(window.size());
    if (info.convergence_episode < 0 && smoothed >= band)
      info.convergence_episode = train_rows[i].episode;
    if (info.accuracy_crossing < 0 && train_rows[i].accuracy_rolling >= tau)
      info.accuracy_crossing = train_rows[i].episode;
  }
  return info;
}

namespace detail {

// Sliding caught/missed record over the last `capacity` anomaly events.
class RollingAccuracy {
 public:
  explicit RollingAccuracy(int capacity) : capacity_(capacity) {}

  void add(int caught, int total) {
    for (int i = 0; i < total; ++i) {
      const bool hit = i < caught;
      events_.push_back(hit);
      caught_ += hit ? 1 : 0;
      if (static_cast<int>(events_.size()) > capacity_) {
        caught_ -= events_.front() ? 1 : 0;
        events_.pop_front();
      }
    }
  }

  double value() const {
    if (events_.empty()) return 1.0;
    return static_cast<double>(caught_) / static_cast<double>(events_.size());
  }

 private:
  int capacity_;
  std::deque<bool> events_;
  int caught_ = 0;
};

struct EpisodeTotals {
  double reward = 0.0;
  EnergyBreakdown energy;
  double t1 = 0.0;
  int caught = 0;
  int events = 0;
  int rounds = 0;

  void add(const RoundOutcome& o) {
    reward += o.reward;
    energy.e_tran += o.energy.e_tran;
    energy.e_deal += o.energy.e_deal;
    energy.e_up += o.energy.e_up;
    energy.e_abnormal += o.energy.e_abnormal;
    energy.total += o.energy.total;
    t1 += o.t1;
    caught += o.caught;
    events += o.total_events;
    ++rounds;
  }
};

}  // namespace detail

// Trains one agent on one seed and reports per-episode metrics, periodic
// greedy evaluations, and the final checkpoint.
inline RunOutput train_single_run(const ExperimentConfig& cfg, const std::string& tag,
                                  std::uint64_t seed, const CheckpointSink& sink = {},
                                  std::ostream* progress = nullptr) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  DormancyEnv env(cfg.system, cfg.rounds_per_episode,
                  EnvOptions{cfg.extended_observation, cfg.penalized_reward});
  auto agent = make_agent(tag, cfg.system, cfg.hyper, env.state_dim(), cfg.total_rounds, seed);
  const long episodes = cfg.episodes();
  const double episode_minutes = env.episode_horizon();
  const std::uint64_t timeline_stream = derive_seed(seed, kTimelineSalt);
  const std::uint64_t eval_stream = derive_seed(seed, kEvalSalt);

  RunOutput out;
  out.summary.agent = tag;
  out.summary.seed = seed;
  out.summary.episodes = episodes;

  detail::RollingAccuracy rolling(cfg.accuracy_window);
  std::vector<MetricsRow> train_rows;
  double train_energy_cum = 0.0, eval_energy_cum = 0.0;
  long eval_points = 0;
  std::uint64_t eval_counter = 0;
  const long progress_every = std::max<long>(1, episodes / 10);

  for (long ep = 1; ep <= episodes; ++ep) {
    env.set_timeline(build_timeline(cfg.system, episode_minutes, cfg.timeline_mode,
                                    derive_seed(timeline_stream, static_cast<std::uint64_t>(ep))));
    std::vector<double> state = env.reset();
    detail::EpisodeTotals totals;
    while (!env.done()) {
      const double action = agent->act(state, true);
      StepResult sr = env.step(action);
      agent->observe(state, action, sr.reward, sr.state, sr.done);
      totals.add(sr.outcome);
      rolling.add(sr.outcome.caught, sr.outcome.total_events);
      state = std::move(sr.state);
    }
    agent->end_episode();

    MetricsRow row;
    row.run_id = cfg.run_id;
    row.agent = tag;
    row.seed = seed;
    row.phase = "train";
    row.episode = ep;
    row.mean_reward = totals.reward / totals.rounds;
    row.mean_energy_per_min = totals.energy.total / episode_minutes;
    train_energy_cum += row.mean_energy_per_min;
    row.cum_energy_per_min = train_energy_cum / static_cast<double>(ep);
    row.e_tran = totals.energy.e_tran / episode_minutes;
    row.e_deal = totals.energy.e_deal / episode_minutes;
    row.e_up = totals.energy.e_up / episode_minutes;
    row.e_abnormal = totals.energy.e_abnormal / episode_minutes;
    row.mean_t1 = totals.t1 / totals.rounds;
    row.mean_sleep = cfg.system.round_duration - row.mean_t1;
    row.accuracy_rolling = rolling.value();
    row.wall_clock_s = elapsed();
    out.rows.push_back(row);
    train_rows.push_back(row);

    if (ep % cfg.eval_every == 0 || ep == episodes) {
      detail::EpisodeTotals eval_totals;
      double eval_reward_mean = 0.0, eval_energy_mean = 0.0, eval_t1_mean = 0.0;
      for (int e = 0; e < cfg.eval_episodes; ++e) {
        env.set_timeline(build_timeline(cfg.system, episode_minutes, cfg.timeline_mode,
                                        derive_seed(eval_stream, eval_counter++)));
        std::vector<double> s = env.reset();
        detail::EpisodeTotals t;
        while (!env.done()) {
          StepResult sr = env.step(agent->act(s, false));
          t.add(sr.outcome);
          s = std::move(sr.state);
        }
        eval_reward_mean += t.reward / t.rounds;
        eval_energy_mean += t.energy.total / episode_minutes;
        eval_t1_mean += t.t1 / t.rounds;
        eval_totals.caught += t.caught;
        eval_totals.events += t.events;
        eval_totals.energy.e_tran += t.energy.e_tran;
        eval_totals.energy.e_deal += t.energy.e_deal;
        eval_totals.energy.e_up += t.energy.e_up;
        eval_totals.energy.e_abnormal += t.energy.e_abnormal;
      }
      const double k = cfg.eval_episodes;
      MetricsRow ev;
      ev.run_id = cfg.run_id;
      ev.agent = tag;
      ev.seed = seed;
      ev.phase = "eval";
      ev.episode = ep;
      ev.mean_reward = eval_reward_mean / k;
      ev.mean_energy_per_min = eval_energy_mean / k;
      eval_energy_cum += ev.mean_energy_per_min;
      ++eval_points;
      ev.cum_energy_per_min = eval_energy_cum / static_cast<double>(eval_points);
      ev.e_tran = eval_totals.energy.e_tran / (k * episode_minutes);
      ev.e_deal = eval_totals.energy.e_deal / (k * episode_minutes);
      ev.e_up = eval_totals.energy.e_up / (k * episode_minutes);
      ev.e_abnormal = eval_totals.energy.e_abnormal / (k * episode_minutes);
      ev.mean_t1 = eval_t1_mean / k;
      ev.mean_sleep = cfg.system.round_duration - ev.mean_t1;
      ev.accuracy_rolling = eval_totals.events == 0
                                ? 1.0
                                : static_cast<double>(eval_totals.caught) / eval_totals.events;
      ev.wall_clock_s = elapsed();
      out.rows.push_back(ev);
    }

    if (cfg.checkpoint_every > 0 && sink && ep % cfg.checkpoint_every == 0 && ep != episodes) {
      Checkpoint ck{kCheckpointVersion, tag, seed, ep, agent->checkpoint_payload()};
      sink(tag, seed, ep, ck, false);
    }
    if (progress && (ep % progress_every == 0 || ep == episodes)) {
      *progress << "[" << tag << " seed " << seed << "] episode " << ep << "/" << episodes
                << " reward " << format_double(train_rows.back().mean_reward) << " energy/min "
                << format_double(train_rows.back().mean_energy_per_min) << " accuracy "
                << format_double(train_rows.back().accuracy_rolling) << "\n";
    }
  }

  out.final_checkpoint =
      Checkpoint{kCheckpointVersion, tag, seed, episodes, agent->checkpoint_payload()};
  if (sink) sink(tag, seed, episodes, out.final_checkpoint, true);

  const ConvergenceInfo info =
      summarize_training(train_rows, cfg.system.accuracy_threshold);
  out.summary.final_reward = info.final_reward;
  out.summary.final_energy_per_min = info.final_energy_per_min;
  out.summary.convergence_episode = info.convergence_episode;
  out.summary.accuracy_crossing = info.accuracy_crossing;
  out.summary.final_accuracy = rolling.value();
  out.summary.wall_clock_s = elapsed();
  return out;
}

struct ExperimentResult {
  std::vector<RunOutput> runs;
};

// Full sweep: every configured agent on every configured seed, sequentially
// and independently.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const CheckpointSink& sink = {},
                                       std::ostream* progress = nullptr) {
  cfg.validate();
  ExperimentResult result;
  for (const auto& tag : cfg.agents)
    for (std::uint64_t seed : cfg.seeds)
      result.runs.push_back(train_single_run(cfg, tag, seed, sink, progress));
  return result;
}

}  // namespace dormsim
