#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dormsim/agents/agent.hpp"
#include "dormsim/anomaly.hpp"
#include "dormsim/config.hpp"
#include "dormsim/format.hpp"

namespace dormsim {

// Everything a run needs: the simulated system, the learner tunables, and
// the experiment schedule.
struct ExperimentConfig {
  SystemConfig system;
  AgentHyper hyper;
  std::vector<std::string> agents{"ppo", "dqn", "ddpg", "full-monitor"};
  std::vector<std::uint64_t> seeds{0};
  long total_rounds = 15000;
  int rounds_per_episode = 10;
  int eval_every = 10;       // training episodes between greedy evaluations
  int eval_episodes = 5;     // episodes averaged per evaluation point
  TimelineMode timeline_mode = TimelineMode::deterministic;
  int checkpoint_every = 0;  // episodes; 0 means final checkpoint only
  int accuracy_window = 100; // anomaly events in the rolling accuracy
  bool extended_observation = false;  // append round index and event count to states
  bool penalized_reward = false;      // scale reward by the caught fraction
  std::string run_id = "run";

  long episodes() const { return total_rounds / rounds_per_episode; }

  void validate() const {
    system.validate();
    if (agents.empty()) throw ConfigError("agents list must not be empty");
    if (seeds.empty()) throw ConfigError("seeds list must not be empty");
    if (rounds_per_episode < 1) throw ConfigError("rounds_per_episode must be >= 1");
    if (episodes() < 1) throw ConfigError("total_rounds must cover at least one episode");
    if (total_rounds % rounds_per_episode != 0)
      throw ConfigError("total_rounds must be divisible by rounds_per_episode");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
    if (accuracy_window < 1) throw ConfigError("accuracy_window must be >= 1");
    if (run_id.empty()) throw ConfigError("run_id must not be empty");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void bad_value(const std::string& key, int line) {
  throw ConfigError("bad value for '" + key + "' at line " + std::to_string(line));
}

inline double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) bad_value(key, line);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, line);
  }
}

inline long parse_long(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) bad_value(key, line);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, line);
  }
}

inline int parse_int(const std::string& v, const std::string& key, int line) {
  const long x = parse_long(v, key, line);
  if (x < static_cast<long>(INT32_MIN) || x > static_cast<long>(INT32_MAX)) bad_value(key, line);
  return static_cast<int>(x);
}

inline bool parse_bool(const std::string& v, const std::string& key, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, line);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& v, const std::string& key,
                                             int line) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(parse_double(item, key, line));
  return out;
}

inline std::vector<int> parse_int_list(const std::string& v, const std::string& key, int line) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(parse_int(item, key, line));
  return out;
}

inline std::string join_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out;
}

}  // namespace detail

// Line-oriented "[section]" + "key = value" format. Unknown sections or
// keys, duplicate keys, and malformed values are all hard errors; '#' or ';'
// start a full-line comment.
inline ExperimentConfig parse_config(std::istream& is) {
  using namespace detail;
  ExperimentConfig cfg;
  std::string line, section;
  std::vector<std::string> seen;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("malformed section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "system" && section != "experiment" && section != "ppo" &&
          section != "dqn" && section != "ddpg" && section != "full-monitor")
        throw ConfigError("unknown section '" + section + "' at line " + std::to_string(lineno));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value' at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    if (section.empty())
      throw ConfigError("key '" + key + "' before any section at line " + std::to_string(lineno));
    const std::string qualified = section + "." + key;
    if (std::find(seen.begin(), seen.end(), qualified) != seen.end())
      throw ConfigError("duplicate key '" + qualified + "' at line " + std::to_string(lineno));
    seen.push_back(qualified);

    auto& sys = cfg.system;
    auto& hp = cfg.hyper;
    if (section == "system") {
      if (key == "slice_count") sys.slice_count = parse_int(value, key, lineno);
      else if (key == "devices_per_slice") sys.devices_per_slice = parse_int(value, key, lineno);
      else if (key == "round_duration") sys.round_duration = parse_double(value, key, lineno);
      else if (key == "device_tx_power") sys.device_tx_power = parse_double(value, key, lineno);
      else if (key == "bandwidth") sys.bandwidth = parse_double(value, key, lineno);
      else if (key == "noise_power") sys.noise_power = parse_double(value, key, lineno);
      else if (key == "tx_rate_override") {
        if (value == "none") sys.tx_rate_override.reset();
        else sys.tx_rate_override = parse_double(value, key, lineno);
      }
      else if (key == "cpu_frequency") sys.cpu_frequency = parse_double(value, key, lineno);
      else if (key == "compute_resources") sys.compute_resources = parse_double(value, key, lineno);
      else if (key == "processing_power") sys.processing_power = parse_double(value, key, lineno);
      else if (key == "upload_power_per_block")
        sys.upload_power_per_block = parse_double(value, key, lineno);
      else if (key == "memory_size") sys.memory_size = parse_double(value, key, lineno);
      else if (key == "unit_block_size") sys.unit_block_size = parse_double(value, key, lineno);
      else if (key == "storage_threshold") sys.storage_threshold = parse_double(value, key, lineno);
      else if (key == "anomaly_interval") sys.anomaly_interval = parse_double(value, key, lineno);
      else if (key == "abnormal_device_power")
        sys.abnormal_device_power = parse_double(value, key, lineno);
      else if (key == "abnormal_device_count")
        sys.abnormal_device_count = parse_int(value, key, lineno);
      else if (key == "accuracy_threshold")
        sys.accuracy_threshold = parse_double(value, key, lineno);
      else if (key == "device_tx_powers") sys.device_tx_powers = parse_double_list(value, key, lineno);
      else if (key == "tx_rates") sys.tx_rates = parse_double_list(value, key, lineno);
      else if (key == "abnormal_device_powers")
        sys.abnormal_device_powers = parse_double_list(value, key, lineno);
      else throw ConfigError("unknown key '" + qualified + "' at line " + std::to_string(lineno));
    } else if (section == "experiment") {
      if (key == "agents") cfg.agents = split_list(value);
      else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& s : split_list(value))
          cfg.seeds.push_back(static_cast<std::uint64_t>(parse_long(s, key, lineno)));
      }
      else if (key == "total_rounds") cfg.total_rounds = parse_long(value, key, lineno);
      else if (key == "rounds_per_episode") cfg.rounds_per_episode = parse_int(value, key, lineno);
      else if (key == "eval_every") cfg.eval_every = parse_int(value, key, lineno);
      else if (key == "eval_episodes") cfg.eval_episodes = parse_int(value, key, lineno);
      else if (key == "timeline") cfg.timeline_mode = timeline_mode_from_string(value);
      else if (key == "checkpoint_every") cfg.checkpoint_every = parse_int(value, key, lineno);
      else if (key == "accuracy_window") cfg.accuracy_window = parse_int(value, key, lineno);
      else if (key == "extended_observation")
        cfg.extended_observation = parse_bool(value, key, lineno);
      else if (key == "penalized_reward") cfg.penalized_reward = parse_bool(value, key, lineno);
      else if (key == "run_id") cfg.run_id = value;
      else if (key == "gamma") hp.gamma = parse_double(value, key, lineno);
      else if (key == "reward_scale") hp.reward_scale = parse_double(value, key, lineno);
      else if (key == "hidden_sizes") hp.hidden_sizes = parse_int_list(value, key, lineno);
      else if (key == "replay_capacity")
        hp.replay_capacity = static_cast<std::size_t>(parse_long(value, key, lineno));
      else throw ConfigError("unknown key '" + qualified + "' at line " + std::to_string(lineno));
    } else if (section == "ppo") {
      if (key == "lr_policy") hp.ppo_lr_policy = parse_double(value, key, lineno);
      else if (key == "lr_value") hp.ppo_lr_value = parse_double(value, key, lineno);
      else if (key == "clip") hp.ppo_clip = parse_double(value, key, lineno);
      else if (key == "gae_lambda") hp.gae_lambda = parse_double(value, key, lineno);
      else if (key == "epochs") hp.ppo_epochs = parse_int(value, key, lineno);
      else if (key == "batch_episodes") hp.ppo_batch_episodes = parse_int(value, key, lineno);
      else if (key == "minibatch") hp.ppo_minibatch = parse_int(value, key, lineno);
      else if (key == "normalize_advantages")
        hp.ppo_normalize_advantages = parse_bool(value, key, lineno);
      else if (key == "grad_clip") hp.ppo_grad_clip = parse_double(value, key, lineno);
      else if (key == "init_log_std") hp.ppo_init_log_std = parse_double(value, key, lineno);
      else if (key == "entropy_coef") hp.ppo_entropy_coef = parse_double(value, key, lineno);
      else throw ConfigError("unknown key '" + qualified + "' at line " + std::to_string(lineno));
    } else if (section == "dqn") {
      if (key == "lr") hp.dqn_lr = parse_double(value, key, lineno);
      else if (key == "epsilon_start") hp.dqn_epsilon_start = parse_double(value, key, lineno);
      else if (key == "epsilon_end") hp.dqn_epsilon_end = parse_double(value, key, lineno);
      else if (key == "batch") hp.dqn_batch = parse_int(value, key, lineno);
      else if (key == "target_sync") hp.dqn_target_sync = parse_int(value, key, lineno);
      else throw ConfigError("unknown key '" + qualified + "' at line " + std::to_string(lineno));
    } else if (section == "ddpg") {
      if (key == "lr_actor") hp.ddpg_lr_actor = parse_double(value, key, lineno);
      else if (key == "lr_critic") hp.ddpg_lr_critic = parse_double(value, key, lineno);
      else if (key == "noise_start") hp.ddpg_noise_start = parse_double(value, key, lineno);
      else if (key == "noise_end") hp.ddpg_noise_end = parse_double(value, key, lineno);
      else if (key == "polyak") hp.ddpg_polyak = parse_double(value, key, lineno);
      else if (key == "batch") hp.ddpg_batch = parse_int(value, key, lineno);
      else throw ConfigError("unknown key '" + qualified + "' at line " + std::to_string(lineno));
    } else {  // full-monitor has no tunables
      throw ConfigError("unknown key '" + qualified + "' at line " + std::to_string(lineno));
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  return parse_config(f);
}

// Writes the complete effective configuration, defaults included, in the
// same format parse_config reads. write then parse round-trips exactly.
inline void write_config(const ExperimentConfig& cfg, std::ostream& os) {
  using detail::join_doubles;
  const auto& sys = cfg.system;
  const auto& hp = cfg.hyper;
  auto d = [](double v) { return format_double(v); };

  os << "[system]\n";
  os << "slice_count = " << sys.slice_count << "\n";
  os << "devices_per_slice = " << sys.devices_per_slice << "\n";
  os << "round_duration = " << d(sys.round_duration) << "\n";
  os << "device_tx_power = " << d(sys.device_tx_power) << "\n";
  os << "bandwidth = " << d(sys.bandwidth) << "\n";
  os << "noise_power = " << d(sys.noise_power) << "\n";
  os << "tx_rate_override = "
     << (sys.tx_rate_override ? d(*sys.tx_rate_override) : std::string("none")) << "\n";
  os << "cpu_frequency = " << d(sys.cpu_frequency) << "\n";
  os << "compute_resources = " << d(sys.compute_resources) << "\n";
  os << "processing_power = " << d(sys.processing_power) << "\n";
  os << "upload_power_per_block = " << d(sys.upload_power_per_block) << "\n";
  os << "memory_size = " << d(sys.memory_size) << "\n";
  os << "unit_block_size = " << d(sys.unit_block_size) << "\n";
  os << "storage_threshold = " << d(sys.storage_threshold) << "\n";
  os << "anomaly_interval = " << d(sys.anomaly_interval) << "\n";
  os << "abnormal_device_power = " << d(sys.abnormal_device_power) << "\n";
  os << "abnormal_device_count = " << sys.abnormal_device_count << "\n";
  os << "accuracy_threshold = " << d(sys.accuracy_threshold) << "\n";
  if (!sys.device_tx_powers.empty())
    os << "device_tx_powers = " << join_doubles(sys.device_tx_powers) << "\n";
  if (!sys.tx_rates.empty()) os << "tx_rates = " << join_doubles(sys.tx_rates) << "\n";
  if (!sys.abnormal_device_powers.empty())
    os << "abnormal_device_powers = " << join_doubles(sys.abnormal_device_powers) << "\n";

  os << "\n[experiment]\n";
  os << "agents = ";
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) os << (i ? ", " : "") << cfg.agents[i];
  os << "\n";
  os << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) os << (i ? ", " : "") << cfg.seeds[i];
  os << "\n";
  os << "total_rounds = " << cfg.total_rounds << "\n";
  os << "rounds_per_episode = " << cfg.rounds_per_episode << "\n";
  os << "eval_every = " << cfg.eval_every << "\n";
  os << "eval_episodes = " << cfg.eval_episodes << "\n";
  os << "timeline = " << to_string(cfg.timeline_mode) << "\n";
  os << "checkpoint_every = " << cfg.checkpoint_every << "\n";
  os << "accuracy_window = " << cfg.accuracy_window << "\n";
  os << "extended_observation = " << (cfg.extended_observation ? "true" : "false") << "\n";
  os << "penalized_reward = " << (cfg.penalized_reward ? "true" : "false") << "\n";
  os << "run_id = " << cfg.run_id << "\n";
  os << "gamma = " << d(hp.gamma) << "\n";
  os << "reward_scale = " << d(hp.reward_scale) << "\n";
  os << "hidden_sizes = ";
  for (std::size_t i = 0; i < hp.hidden_sizes.size(); ++i)
    os << (i ? ", " : "") << hp.hidden_sizes[i];
  os << "\n";
  os << "replay_capacity = " << hp.replay_capacity << "\n";

  os << "\n[ppo]\n";
  os << "lr_policy = " << d(hp.ppo_lr_policy) << "\n";
  os << "lr_value = " << d(hp.ppo_lr_value) << "\n";
  os << "clip = " << d(hp.ppo_clip) << "\n";
  os << "gae_lambda = " << d(hp.gae_lambda) << "\n";
  os << "epochs = " << hp.ppo_epochs << "\n";
  os << "batch_episodes = " << hp.ppo_batch_episodes << "\n";
  os << "minibatch = " << hp.ppo_minibatch << "\n";
  os << "normalize_advantages = " << (hp.ppo_normalize_advantages ? "true" : "false") << "\n";
  os << "grad_clip = " << d(hp.ppo_grad_clip) << "\n";
  os << "init_log_std = " << d(hp.ppo_init_log_std) << "\n";
  os << "entropy_coef = " << d(hp.ppo_entropy_coef) << "\n";

  os << "\n[dqn]\n";
  os << "lr = " << d(hp.dqn_lr) << "\n";
  os << "epsilon_start = " << d(hp.dqn_epsilon_start) << "\n";
  os << "epsilon_end = " << d(hp.dqn_epsilon_end) << "\n";
  os << "batch = " << hp.dqn_batch << "\n";
  os << "target_sync = " << hp.dqn_target_sync << "\n";

  os << "\n[ddpg]\n";
  os << "lr_actor = " << d(hp.ddpg_lr_actor) << "\n";
  os << "lr_critic = " << d(hp.ddpg_lr_critic) << "\n";
  os << "noise_start = " << d(hp.ddpg_noise_start) << "\n";
  os << "noise_end = " << d(hp.ddpg_noise_end) << "\n";
  os << "polyak = " << d(hp.ddpg_polyak) << "\n";
  os << "batch = " << hp.ddpg_batch << "\n";
}

}  // namespace dormsim
