#pragma once

#include "dormsim/agents/agent.hpp"
#include "dormsim/config.hpp"

namespace dormsim {

// Baseline without dormancy: monitor for the whole round, every round.
class FullMonitorAgent final : public Agent {
 public:
  explicit FullMonitorAgent(const SystemConfig& cfg) : t1_(cfg.round_duration) {}

  std::string name() const override { return "full-monitor"; }

  double act(std::span<const double>, bool) override { return t1_; }

  void observe(std::span<const double>, double, double, std::span<const double>, bool) override {}
  void end_episode() override {}

  nlohmann::json checkpoint_payload() const override { return {{"t1", t1_}}; }
  void restore(const nlohmann::json& payload) override { t1_ = payload.at("t1").get<double>(); }

 private:
  double t1_;
};

}  // namespace dormsim
