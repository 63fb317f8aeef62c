#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "dormsim/agents/agent.hpp"
#include "dormsim/checkpoint.hpp"
#include "dormsim/config.hpp"
#include "dormsim/net.hpp"
#include "dormsim/replay.hpp"
#include "dormsim/rng.hpp"

namespace dormsim {

// Q-learning over the integer monitoring durations 1..floor(T). Epsilon
// decays linearly across the whole training run; a lagged target net is
// refreshed by full copy every few hundred gradient steps.
class DqnAgent final : public Agent {
 public:
  DqnAgent(const SystemConfig& cfg, const AgentHyper& hyper, int state_dim, long total_rounds,
           std::uint64_t seed)
      : hyper_(hyper),
        n_actions_(static_cast<int>(std::floor(cfg.round_duration))),
        decay_rounds_(std::max<long>(1, total_rounds)),
        rng_(derive_seed(seed, 0xD90)),
        online_(make_sizes(state_dim, cfg, hyper), rng_),
        target_(online_),
        replay_(hyper.replay_capacity, derive_seed(seed, 0xD91)),
        opt_(online_.parameter_count(), hyper.dqn_lr) {
    if (n_actions_ < 1) throw std::invalid_argument("DqnAgent: round_duration below 1 minute");
    if (hyper_.dqn_batch < 1 || hyper_.dqn_target_sync < 1)
      throw std::invalid_argument("DqnAgent: batch and target_sync must be >= 1");
  }

  std::string name() const override { return "dqn"; }

  int action_count() const { return n_actions_; }

  double epsilon() const {
    const double frac =
        std::min(1.0, static_cast<double>(explore_steps_) / static_cast<double>(decay_rounds_));
    return hyper_.dqn_epsilon_start + (hyper_.dqn_epsilon_end - hyper_.dqn_epsilon_start) * frac;
  }

  double act(std::span<const double> state, bool explore) override {
    if (explore) {
      const double eps = epsilon();
      ++explore_steps_;
      if (rng_.uniform() < eps) return 1.0 + rng_.uniform_int(0, n_actions_ - 1);
    }
    return 1.0 + greedy_index(online_, state);
  }

  void observe(std::span<const double> state, double action, double reward,
               std::span<const double> next_state, bool done) override {
    StepRecord step;
    step.state.assign(state.begin(), state.end());
    step.action = action;
    step.reward = reward * hyper_.reward_scale;
    step.next_state.assign(next_state.begin(), next_state.end());
    step.done = done;
    replay_.push(std::move(step));
    if (replay_.size() >= static_cast<std::size_t>(hyper_.dqn_batch)) {
      try {
        learn();
      } catch (const std::domain_error& e) {
        // the optimizer validates before touching parameters, so a rejected
        // update leaves the net exactly as it was
        ++skipped_updates_;
        std::cerr << "dqn: update rejected, parameters preserved: " << e.what() << '\n';
      }
    }
  }

  void end_episode() override {}

  long skipped_updates() const { return skipped_updates_; }

  nlohmann::json checkpoint_payload() const override {
    return {{"online", mlp_to_json(online_)},
            {"target", mlp_to_json(target_)},
            {"opt", adam_to_json(opt_)},
            {"explore_steps", explore_steps_},
            {"learn_steps", learn_steps_}};
  }

  void restore(const nlohmann::json& payload) override {
    mlp_restore_from_json(online_, payload.at("online"));
    mlp_restore_from_json(target_, payload.at("target"));
    adam_restore_from_json(opt_, payload.at("opt"));
    explore_steps_ = payload.at("explore_steps").get<long>();
    learn_steps_ = payload.at("learn_steps").get<long>();
  }

 private:
  static std::vector<int> make_sizes(int state_dim, const SystemConfig& cfg,
                                     const AgentHyper& hyper) {
    std::vector<int> sizes{state_dim};
    sizes.insert(sizes.end(), hyper.hidden_sizes.begin(), hyper.hidden_sizes.end());
    sizes.push_back(static_cast<int>(std::floor(cfg.round_duration)));
    return sizes;
  }

  // Lowest index wins ties so greedy play is deterministic.
  int greedy_index(const Mlp& net, std::span<const double> state) const {
    const std::vector<double> q = net.forward(state);
    int best = 0;
    for (int i = 1; i < n_actions_; ++i)
      if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) best = i;
    return best;
  }

  void learn() {
    const auto batch = replay_.sample(static_cast<std::size_t>(hyper_.dqn_batch));
    const double inv_m = 1.0 / static_cast<double>(batch.size());
    std::vector<double> grads = online_.zero_grads();
    Mlp::Cache cache;
    for (const StepRecord* s : batch) {
      double target = s->reward;
      if (!s->done) {
        const std::vector<double> qn = target_.forward(s->next_state);
        target += hyper_.gamma * *std::max_element(qn.begin(), qn.end());
      }
      const std::vector<double> q = online_.forward(s->state, cache);
      const int a = static_cast<int>(std::lround(s->action)) - 1;
      if (a < 0 || a >= n_actions_) throw std::logic_error("dqn: stored action out of range");
      std::vector<double> out_grad(static_cast<std::size_t>(n_actions_), 0.0);
      out_grad[static_cast<std::size_t>(a)] =
          2.0 * (q[static_cast<std::size_t>(a)] - target) * inv_m;
      online_.backward(cache, out_grad, grads);
    }
    opt_.step(online_, grads, OptimizeDirection::minimize);
    ++learn_steps_;
    if (learn_steps_ % hyper_.dqn_target_sync == 0) target_.parameters() = online_.parameters();
  }

  AgentHyper hyper_;
  int n_actions_;
  long decay_rounds_;
  Rng rng_;
  Mlp online_;
  Mlp target_;
  ReplayBuffer replay_;
  Adam opt_;
  long explore_steps_ = 0;
  long learn_steps_ = 0;
  long skipped_updates_ = 0;
};

}  // namespace dormsim
