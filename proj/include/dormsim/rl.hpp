#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "dormsim/rng.hpp"

namespace dormsim {

// One environment transition as stored by the learning agents. For the
// on-policy learner log_prob is the behavior policy's log-density at the
// moment the action was sampled; off-policy learners leave it at 0.
struct StepRecord {
  std::vector<double> state;
  double action = 0.0;  // raw policy output, before the env clamps it
  double reward = 0.0;  // scaled reward as seen by the learner
  std::vector<double> next_state;
  bool done = false;
  double log_prob = 0.0;
};

using Trajectory = std::vector<StepRecord>;

inline double sample_gaussian(Rng& rng, double mean, double log_std) {
  return mean + std::exp(log_std) * rng.normal();
}

inline double gaussian_log_prob(double x, double mean, double log_std) {
  const double inv_std = std::exp(-log_std);
  const double z = (x - mean) * inv_std;
  return -0.5 * std::log(2.0 * std::numbers::pi) - log_std - 0.5 * z * z;
}

// d log N(x; mean, std) / d mean and / d log_std, for the policy gradient.
struct GaussianLogProbGrad {
  double d_mean = 0.0;
  double d_log_std = 0.0;
};

inline GaussianLogProbGrad gaussian_log_prob_grad(double x, double mean, double log_std) {
  const double inv_var = std::exp(-2.0 * log_std);
  const double diff = x - mean;
  GaussianLogProbGrad g;
  g.d_mean = diff * inv_var;
  g.d_log_std = diff * diff * inv_var - 1.0;
  return g;
}

struct GaeResult {
  std::vector<double> returns;     // advantage + value, the value-net target
  std::vector<double> advantages;  // GAE(lambda) estimates
};

// Generalized advantage estimation over one episode. final_value bootstraps
// the state after the last step; pass 0 when that state is terminal.
inline GaeResult returns_and_advantages(std::span<const double> rewards,
                                        std::span<const double> values, double final_value,
                                        double gamma, double lambda) {
  if (rewards.size() != values.size())
    throw std::invalid_argument("returns_and_advantages: rewards/values size mismatch");
  const std::size_t n = rewards.size();
  GaeResult out;
  out.returns.resize(n);
  out.advantages.resize(n);
  double gae = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = (i + 1 < n) ? values[i + 1] : final_value;
    const double delta = rewards[i] + gamma * next_value - values[i];
    gae = delta + gamma * lambda * gae;
    out.advantages[i] = gae;
    out.returns[i] = gae + values[i];
  }
  return out;
}

// In-place shift to zero mean and (population) unit variance. A constant
// batch maps to all zeros rather than dividing by zero.
inline void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(advantages.size());
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(advantages.size());
  const double denom = std::sqrt(var) + 1e-8;
  for (double& a : advantages) a = (a - mean) / denom;
}

struct PpoTerm {
  double objective = 0.0;     // min(ratio * A, clip(ratio) * A)
  double dobj_dratio = 0.0;   // zero when the clipped branch is active
};

// Clipped-surrogate term for one sample. The derivative follows the branch
// the min picks; inside the clip region both branches agree and the
// unclipped derivative applies.
inline PpoTerm ppo_clip_term(double ratio, double advantage, double clip_epsilon) {
  if (!(clip_epsilon > 0.0)) throw std::invalid_argument("ppo_clip_term: clip_epsilon must be > 0");
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  const double plain_obj = ratio * advantage;
  const double clipped_obj = clipped * advantage;
  if (plain_obj <= clipped_obj) return {plain_obj, advantage};
  return {clipped_obj, clipped == ratio ? advantage : 0.0};
}

// Mean squared error between value predictions and return targets.
inline double value_loss(std::span<const double> predicted, std::span<const double> targets) {
  if (predicted.size() != targets.size())
    throw std::invalid_argument("value_loss: size mismatch");
  if (predicted.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

}  // namespace dormsim
