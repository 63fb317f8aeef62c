#pragma once

#include <memory>
#include <string>

#include "dormsim/agents/agent.hpp"
#include "dormsim/agents/ddpg.hpp"
#include "dormsim/agents/dqn.hpp"
#include "dormsim/agents/full_monitor.hpp"
#include "dormsim/agents/ppo.hpp"
#include "dormsim/config.hpp"

namespace dormsim {

inline const std::vector<std::string>& agent_tags() {
  static const std::vector<std::string> tags{"ppo", "dqn", "ddpg", "full-monitor"};
  return tags;
}

inline std::unique_ptr<Agent> make_agent(const std::string& tag, const SystemConfig& cfg,
                                         const AgentHyper& hyper, int state_dim,
                                         long total_rounds, std::uint64_t seed) {
  if (tag == "ppo") return std::make_unique<PpoAgent>(cfg, hyper, state_dim, seed);
  if (tag == "dqn") return std::make_unique<DqnAgent>(cfg, hyper, state_dim, total_rounds, seed);
  if (tag == "ddpg") return std::make_unique<DdpgAgent>(cfg, hyper, state_dim, total_rounds, seed);
  if (tag == "full-monitor") return std::make_unique<FullMonitorAgent>(cfg);
  throw ConfigError("unknown agent: " + tag + " (expected ppo, dqn, ddpg, or full-monitor)");
}

}  // namespace dormsim
