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

// Deterministic actor-critic with Gaussian action noise that anneals over
// the first half of training, replayed minibatches, and Polyak-averaged
// target nets. The critic takes [state, action] as one input vector.
class DdpgAgent final : public Agent {
 public:
  DdpgAgent(const SystemConfig& cfg, const AgentHyper& hyper, int state_dim, long total_rounds,
            std::uint64_t seed)
      : hyper_(hyper),
        round_duration_(cfg.round_duration),
        anneal_rounds_(std::max<long>(1, total_rounds / 2)),
        rng_(derive_seed(seed, 0xDD90)),
        actor_(actor_sizes(state_dim, hyper), rng_),
        critic_(critic_sizes(state_dim, hyper), rng_),
        actor_target_(actor_),
        critic_target_(critic_),
        replay_(hyper.replay_capacity, derive_seed(seed, 0xDD91)),
        opt_actor_(actor_.parameter_count(), hyper.ddpg_lr_actor),
        opt_critic_(critic_.parameter_count(), hyper.ddpg_lr_critic) {
    if (hyper_.ddpg_batch < 1) throw std::invalid_argument("DdpgAgent: batch must be >= 1");
    if (!(hyper_.ddpg_polyak > 0.0 && hyper_.ddpg_polyak <= 1.0))
      throw std::invalid_argument("DdpgAgent: polyak must be in (0, 1]");
    actor_.set_output_bias((1.0 + cfg.round_duration) / 2.0);
    actor_target_ = actor_;
  }

  std::string name() const override { return "ddpg"; }

  long skipped_updates() const { return skipped_updates_; }

  double noise_stddev() const {
    const double frac =
        std::min(1.0, static_cast<double>(explore_steps_) / static_cast<double>(anneal_rounds_));
    return (hyper_.ddpg_noise_start + (hyper_.ddpg_noise_end - hyper_.ddpg_noise_start) * frac) *
           round_duration_;
  }

  double act(std::span<const double> state, bool explore) override {
    double a = actor_.forward(state)[0];
    if (!std::isfinite(a)) throw std::domain_error("ddpg: actor produced non-finite action");
    if (explore) {
      const double sigma = noise_stddev();
      ++explore_steps_;
      a += sigma * rng_.normal();
    }
    return a;
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
    if (replay_.size() >= static_cast<std::size_t>(hyper_.ddpg_batch)) learn();
  }

  void end_episode() override {}

  nlohmann::json checkpoint_payload() const override {
    return {{"actor", mlp_to_json(actor_)},
            {"critic", mlp_to_json(critic_)},
            {"actor_target", mlp_to_json(actor_target_)},
            {"critic_target", mlp_to_json(critic_target_)},
            {"opt_actor", adam_to_json(opt_actor_)},
            {"opt_critic", adam_to_json(opt_critic_)},
            {"explore_steps", explore_steps_}};
  }

  void restore(const nlohmann::json& payload) override {
    mlp_restore_from_json(actor_, payload.at("actor"));
    mlp_restore_from_json(critic_, payload.at("critic"));
    mlp_restore_from_json(actor_target_, payload.at("actor_target"));
    mlp_restore_from_json(critic_target_, payload.at("critic_target"));
    adam_restore_from_json(opt_actor_, payload.at("opt_actor"));
    adam_restore_from_json(opt_critic_, payload.at("opt_critic"));
    explore_steps_ = payload.at("explore_steps").get<long>();
  }

 private:
  static std::vector<int> actor_sizes(int state_dim, const AgentHyper& hyper) {
    std::vector<int> sizes{state_dim};
    sizes.insert(sizes.end(), hyper.hidden_sizes.begin(), hyper.hidden_sizes.end());
    sizes.push_back(1);
    return sizes;
  }

  static std::vector<int> critic_sizes(int state_dim, const AgentHyper& hyper) {
    std::vector<int> sizes{state_dim + 1};
    sizes.insert(sizes.end(), hyper.hidden_sizes.begin(), hyper.hidden_sizes.end());
    sizes.push_back(1);
    return sizes;
  }

  static std::vector<double> with_action(std::span<const double> state, double action) {
    std::vector<double> x(state.begin(), state.end());
    x.push_back(action);
    return x;
  }

  void polyak_into(const Mlp& online, Mlp& target) const {
    const double rho = hyper_.ddpg_polyak;
    auto& tp = target.parameters();
    const auto& op = online.parameters();
    for (std::size_t i = 0; i < tp.size(); ++i) tp[i] = rho * op[i] + (1.0 - rho) * tp[i];
  }

  // The critic step lands before the actor step, so a non-finite actor
  // gradient must roll the critic (and its optimizer) back to keep the
  // whole update atomic.
  void learn() {
    const std::vector<double> critic_params = critic_.parameters();
    const Adam opt_critic_saved = opt_critic_;
    try {
      learn_unguarded();
    } catch (const std::domain_error& e) {
      critic_.parameters() = critic_params;
      opt_critic_ = opt_critic_saved;
      ++skipped_updates_;
      std::cerr << "ddpg: update skipped, parameters preserved: " << e.what() << "\n";
    }
  }

  void learn_unguarded() {
    const auto batch = replay_.sample(static_cast<std::size_t>(hyper_.ddpg_batch));
    const double inv_m = 1.0 / static_cast<double>(batch.size());
    Mlp::Cache cache;

    std::vector<double> critic_grads = critic_.zero_grads();
    for (const StepRecord* s : batch) {
      double target = s->reward;
      if (!s->done) {
        const double a_next = actor_target_.forward(s->next_state)[0];
        target += hyper_.gamma * critic_target_.forward(with_action(s->next_state, a_next))[0];
      }
      const double q = critic_.forward(with_action(s->state, s->action), cache)[0];
      const double out_grad[1] = {2.0 * (q - target) * inv_m};
      critic_.backward(cache, out_grad, critic_grads);
    }
    opt_critic_.step(critic_, critic_grads, OptimizeDirection::minimize);

    // Actor ascends the critic's valuation of its own actions; the action
    // gradient is the last coordinate of the critic's input gradient.
    std::vector<double> actor_grads = actor_.zero_grads();
    std::vector<double> scratch = critic_.zero_grads();
    std::vector<double> input_grad;
    Mlp::Cache actor_cache;
    for (const StepRecord* s : batch) {
      const double a_pi = actor_.forward(s->state, actor_cache)[0];
      critic_.forward(with_action(s->state, a_pi), cache);
      const double out_grad[1] = {inv_m};
      critic_.backward(cache, out_grad, scratch, &input_grad);
      const double dq_da[1] = {input_grad.back()};
      actor_.backward(actor_cache, dq_da, actor_grads);
    }
    opt_actor_.step(actor_, actor_grads, OptimizeDirection::maximize);

    polyak_into(critic_, critic_target_);
    polyak_into(actor_, actor_target_);
  }

  AgentHyper hyper_;
  double round_duration_;
  long anneal_rounds_;
  Rng rng_;
  Mlp actor_;
  Mlp critic_;
  Mlp actor_target_;
  Mlp critic_target_;
  ReplayBuffer replay_;
  Adam opt_actor_;
  Adam opt_critic_;
  long explore_steps_ = 0;
  long skipped_updates_ = 0;
};

}  // namespace dormsim
