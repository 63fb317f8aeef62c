#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dormsim/rl.hpp"

namespace dormsim {

// Tunables for every learner, grouped by the config section they come from.
struct AgentHyper {
  // shared
  double gamma = 0.99;
  double reward_scale = 1000.0;        // env rewards are O(1e-3), rescale for learning
  std::vector<int> hidden_sizes = {64, 64};

  // ppo
  double ppo_lr_policy = 5e-3;
  double ppo_lr_value = 5e-2;
  double ppo_clip = 0.2;
  double gae_lambda = 0.0;             // 0 = per-round credit; longer traces mostly
                                       // import the neighbouring rounds' noise here
  int ppo_epochs = 15;
  int ppo_batch_episodes = 2;          // episodes per policy update
  int ppo_minibatch = 20;              // steps per gradient step
  bool ppo_normalize_advantages = true;
  double ppo_grad_clip = 0.5;          // global-norm bound, policy and value alike
  double ppo_init_log_std = 0.7;       // start wide so the mean can move fast
  double ppo_entropy_coef = 0.0;       // exploration bonus weight, off by default

  // dqn
  double dqn_lr = 5e-3;
  double dqn_epsilon_start = 1.0;
  double dqn_epsilon_end = 0.05;
  int dqn_batch = 64;
  int dqn_target_sync = 200;           // learn steps between target refreshes

  // ddpg
  double ddpg_lr_actor = 2e-3;
  double ddpg_lr_critic = 1e-2;
  double ddpg_noise_start = 0.3;       // exploration stddev, as a fraction of T
  double ddpg_noise_end = 0.02;
  double ddpg_polyak = 0.005;          // target <- rho*online + (1-rho)*target
  int ddpg_batch = 64;

  std::size_t replay_capacity = 100000;
};

// A monitoring-duration policy plus whatever it learns from. act() may be
// called freely (e.g. for greedy evaluation); learning happens only through
// observe()/end_episode().
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string name() const = 0;

  // Picks a raw monitoring duration for this state. explore=false must be a
  // pure function of the learned parameters (no rng draws, no learning).
  virtual double act(std::span<const double> state, bool explore) = 0;

  // Feeds back the transition produced by the agent's latest explore action.
  // reward is the raw env reward; agents apply their own scaling.
  virtual void observe(std::span<const double> state, double action, double reward,
                       std::span<const double> next_state, bool done) = 0;

  virtual void end_episode() = 0;

  virtual nlohmann::json checkpoint_payload() const = 0;
  virtual void restore(const nlohmann::json& payload) = 0;
};

}  // namespace dormsim
