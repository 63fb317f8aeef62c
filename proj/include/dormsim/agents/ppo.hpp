#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dormsim/agents/agent.hpp"
#include "dormsim/checkpoint.hpp"
#include "dormsim/config.hpp"
#include "dormsim/net.hpp"
#include "dormsim/rl.hpp"
#include "dormsim/rng.hpp"

namespace dormsim {

// Clipped-surrogate policy gradient over a Gaussian policy. The mean comes
// from an MLP; the log stddev is a single state-independent learned scalar.
// Updates run after every batch of whole episodes, with several passes of
// minibatch ascent on the policy and descent on the value net.
class PpoAgent final : public Agent {
 public:
  PpoAgent(const SystemConfig& cfg, const AgentHyper& hyper, int state_dim, std::uint64_t seed)
      : hyper_(hyper),
        rng_(derive_seed(seed, 0x990)),
        policy_(make_sizes(state_dim, hyper), rng_),
        value_(make_sizes(state_dim, hyper), rng_),
        log_std_{hyper.ppo_init_log_std},
        opt_policy_(policy_.parameter_count(), hyper.ppo_lr_policy),
        opt_log_std_(1, hyper.ppo_lr_policy),
        opt_value_(value_.parameter_count(), hyper.ppo_lr_value) {
    if (hyper_.ppo_batch_episodes < 1 || hyper_.ppo_epochs < 1 || hyper_.ppo_minibatch < 1)
      throw std::invalid_argument("PpoAgent: batch sizes and epochs must be >= 1");
    // start the mean mid-range so early exploration covers the action space
    policy_.set_output_bias((1.0 + cfg.round_duration) / 2.0);
  }

  std::string name() const override { return "ppo"; }

  double act(std::span<const double> state, bool explore) override {
    const double mean = policy_.forward(state)[0];
    if (!std::isfinite(mean)) throw std::domain_error("ppo: policy produced non-finite action");
    if (!explore) return mean;
    const double a = sample_gaussian(rng_, mean, log_std_[0]);
    pending_log_prob_ = gaussian_log_prob(a, mean, log_std_[0]);
    has_pending_ = true;
    return a;
  }

  void observe(std::span<const double> state, double action, double reward,
               std::span<const double> next_state, bool done) override {
    if (!has_pending_) throw std::logic_error("ppo: observe without a preceding explore action");
    has_pending_ = false;
    StepRecord step;
    step.state.assign(state.begin(), state.end());
    step.action = action;
    step.reward = reward * hyper_.reward_scale;
    step.next_state.assign(next_state.begin(), next_state.end());
    step.done = done;
    step.log_prob = pending_log_prob_;
    episode_.push_back(std::move(step));
  }

  void end_episode() override {
    if (episode_.empty()) return;
    batch_.push_back(std::move(episode_));
    episode_.clear();
    if (static_cast<int>(batch_.size()) >= hyper_.ppo_batch_episodes) update();
  }

  double log_std() const { return log_std_[0]; }
  std::uint64_t policy_updates() const { return opt_policy_.updates(); }
  long aborted_updates() const { return aborted_updates_; }

  nlohmann::json checkpoint_payload() const override {
    return {{"policy", mlp_to_json(policy_)},
            {"value", mlp_to_json(value_)},
            {"log_std", log_std_[0]},
            {"opt_policy", adam_to_json(opt_policy_)},
            {"opt_log_std", adam_to_json(opt_log_std_)},
            {"opt_value", adam_to_json(opt_value_)}};
  }

  void restore(const nlohmann::json& payload) override {
    mlp_restore_from_json(policy_, payload.at("policy"));
    mlp_restore_from_json(value_, payload.at("value"));
    log_std_[0] = payload.at("log_std").get<double>();
    adam_restore_from_json(opt_policy_, payload.at("opt_policy"));
    adam_restore_from_json(opt_log_std_, payload.at("opt_log_std"));
    adam_restore_from_json(opt_value_, payload.at("opt_value"));
    batch_.clear();
    episode_.clear();
    has_pending_ = false;
  }

 private:
  static std::vector<int> make_sizes(int state_dim, const AgentHyper& hyper) {
    std::vector<int> sizes{state_dim};
    sizes.insert(sizes.end(), hyper.hidden_sizes.begin(), hyper.hidden_sizes.end());
    sizes.push_back(1);
    return sizes;
  }

  void update() {
    // Keep a restore point: a non-finite gradient anywhere aborts the whole
    // iteration and leaves the parameters as they were.
    const std::vector<double> policy_snap = policy_.parameters();
    const std::vector<double> value_snap = value_.parameters();
    const std::vector<double> log_std_snap = log_std_;
    const Adam opt_policy_snap = opt_policy_;
    const Adam opt_log_std_snap = opt_log_std_;
    const Adam opt_value_snap = opt_value_;
    try {
      update_unguarded();
    } catch (const std::domain_error& e) {
      policy_.parameters() = policy_snap;
      value_.parameters() = value_snap;
      log_std_ = log_std_snap;
      opt_policy_ = opt_policy_snap;
      opt_log_std_ = opt_log_std_snap;
      opt_value_ = opt_value_snap;
      ++aborted_updates_;
      std::cerr << "ppo: update aborted, parameters preserved: " << e.what() << '\n';
    }
    batch_.clear();
  }

  void update_unguarded() {
    // Flatten the batch and compute GAE per episode with a terminal
    // bootstrap of zero.
    std::vector<const StepRecord*> steps;
    std::vector<double> advantages, targets;
    for (const auto& traj : batch_) {
      std::vector<double> rewards, values;
      rewards.reserve(traj.size());
      values.reserve(traj.size());
      for (const auto& s : traj) {
        rewards.push_back(s.reward);
        values.push_back(value_.forward(s.state)[0]);
      }
      GaeResult gae =
          returns_and_advantages(rewards, values, 0.0, hyper_.gamma, hyper_.gae_lambda);
      for (std::size_t i = 0; i < traj.size(); ++i) {
        steps.push_back(&traj[i]);
        advantages.push_back(gae.advantages[i]);
        targets.push_back(gae.returns[i]);
      }
    }
    if (hyper_.ppo_normalize_advantages) normalize_advantages(advantages);

    const std::size_t n = steps.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<double> policy_grads = policy_.zero_grads();
    std::vector<double> log_std_grads(1, 0.0);
    std::vector<double> value_grads = value_.zero_grads();
    Mlp::Cache cache;

    for (int epoch = 0; epoch < hyper_.ppo_epochs; ++epoch) {
      for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
        const auto j = static_cast<std::size_t>(rng_.uniform_int(0, static_cast<int>(i) - 1));
        std::swap(order[i - 1], order[j]);
      }
      for (std::size_t lo = 0; lo < n; lo += static_cast<std::size_t>(hyper_.ppo_minibatch)) {
        const std::size_t hi = std::min(n, lo + static_cast<std::size_t>(hyper_.ppo_minibatch));
        const double inv_m = 1.0 / static_cast<double>(hi - lo);

        std::fill(policy_grads.begin(), policy_grads.end(), 0.0);
        log_std_grads[0] = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
          const StepRecord& s = *steps[order[k]];
          const double mean = policy_.forward(s.state, cache)[0];
          const double lp = gaussian_log_prob(s.action, mean, log_std_[0]);
          const double ratio = std::exp(lp - s.log_prob);
          if (!std::isfinite(ratio)) continue;
          const PpoTerm term = ppo_clip_term(ratio, advantages[order[k]], hyper_.ppo_clip);
          if (term.dobj_dratio == 0.0) continue;
          // d obj / d log_prob = dobj_dratio * ratio, then into mean/log_std
          const double w = term.dobj_dratio * ratio * inv_m;
          const GaussianLogProbGrad g = gaussian_log_prob_grad(s.action, mean, log_std_[0]);
          const double out_grad[1] = {w * g.d_mean};
          policy_.backward(cache, out_grad, policy_grads);
          log_std_grads[0] += w * g.d_log_std;
        }
        // Gaussian entropy is log_std plus a constant, so the bonus adds its
        // coefficient straight to the log_std gradient.
        log_std_grads[0] += hyper_.ppo_entropy_coef;
        clip_global_norm({&policy_grads, &log_std_grads}, hyper_.ppo_grad_clip);
        opt_policy_.step(policy_, policy_grads, OptimizeDirection::maximize);
        opt_log_std_.step(log_std_, log_std_grads, OptimizeDirection::maximize);
        log_std_[0] = std::clamp(log_std_[0], -6.0, 2.0);

        std::fill(value_grads.begin(), value_grads.end(), 0.0);
        for (std::size_t k = lo; k < hi; ++k) {
          const StepRecord& s = *steps[order[k]];
          const double v = value_.forward(s.state, cache)[0];
          const double out_grad[1] = {2.0 * (v - targets[order[k]]) * inv_m};
          value_.backward(cache, out_grad, value_grads);
        }
        clip_global_norm({&value_grads}, hyper_.ppo_grad_clip);
        opt_value_.step(value_, value_grads, OptimizeDirection::minimize);
      }
    }
  }

  AgentHyper hyper_;
  Rng rng_;
  Mlp policy_;
  Mlp value_;
  std::vector<double> log_std_;
  Adam opt_policy_;
  Adam opt_log_std_;
  Adam opt_value_;
  Trajectory episode_;
  std::vector<Trajectory> batch_;
  double pending_log_prob_ = 0.0;
  bool has_pending_ = false;
  long aborted_updates_ = 0;
};

}  // namespace dormsim
