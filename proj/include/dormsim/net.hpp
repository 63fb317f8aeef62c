#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

#include "dormsim/rng.hpp"

namespace dormsim {

// Fully-connected network with tanh hidden units and a linear output layer.
// Parameters live in one flat vector (per layer: row-major weights, then
// biases) so optimizers and checkpoints can treat the net as a single array.
class Mlp {
 public:
  explicit Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
    for (int s : sizes_)
      if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be >= 1");
    std::size_t count = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
      offsets_.push_back(count);
      count += static_cast<std::size_t>(sizes_[l]) * sizes_[l - 1] + sizes_[l];
    }
    params_.assign(count, 0.0);
  }

  // Xavier-uniform weights, zero biases. Draw order is fixed (layers in
  // order, weights row-major) so identical seeds give identical nets.
  Mlp(std::vector<int> layer_sizes, Rng& rng) : Mlp(std::move(layer_sizes)) {
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
      const int fan_in = sizes_[l - 1], fan_out = sizes_[l];
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      double* w = params_.data() + offsets_[l - 1];
      for (int i = 0; i < fan_out * fan_in; ++i) w[i] = rng.uniform(-limit, limit);
    }
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t parameter_count() const { return params_.size(); }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  std::vector<double> zero_grads() const { return std::vector<double>(params_.size(), 0.0); }

  // Overwrites every output-layer bias (used to start policies mid-range).
  void set_output_bias(double value) {
    const std::size_t l = sizes_.size() - 1;
    double* b = params_.data() + offsets_[l - 1] +
                static_cast<std::size_t>(sizes_[l]) * sizes_[l - 1];
    for (int o = 0; o < sizes_[l]; ++o) b[o] = value;
  }

  // Post-activation values per layer; acts[0] is the input, acts.back() the
  // network output. Needed again by backward().
  struct Cache {
    std::vector<std::vector<double>> acts;
  };

  std::vector<double> forward(std::span<const double> x, Cache& cache) const {
    if (static_cast<int>(x.size()) != input_dim())
      throw std::invalid_argument("Mlp::forward: input size mismatch");
    cache.acts.assign(sizes_.size(), {});
    cache.acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
      const int in = sizes_[l - 1], out = sizes_[l];
      const double* w = params_.data() + offsets_[l - 1];
      const double* b = w + static_cast<std::size_t>(out) * in;
      const double* a = cache.acts[l - 1].data();
      auto& next = cache.acts[l];
      next.resize(static_cast<std::size_t>(out));
      const bool hidden = l + 1 < sizes_.size();
      for (int o = 0; o < out; ++o) {
        double z = b[o];
        const double* row = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) z += row[i] * a[i];
        next[static_cast<std::size_t>(o)] = hidden ? std::tanh(z) : z;
      }
    }
    return cache.acts.back();
  }

  std::vector<double> forward(std::span<const double> x) const {
    Cache cache;
    return forward(x, cache);
  }

  // Accumulates dLoss/dParams into grads (flat layout, +=). output_grad is
  // dLoss/dOutput for the cached sample. When input_grad is non-null it
  // receives dLoss/dInput, which the deterministic-policy critic path needs.
  void backward(const Cache& cache, std::span<const double> output_grad,
                std::vector<double>& grads, std::vector<double>* input_grad = nullptr) const {
    if (cache.acts.size() != sizes_.size())
      throw std::invalid_argument("Mlp::backward: cache does not match this net");
    if (static_cast<int>(output_grad.size()) != output_dim())
      throw std::invalid_argument("Mlp::backward: output_grad size mismatch");
    if (grads.size() != params_.size())
      throw std::invalid_argument("Mlp::backward: grads size mismatch");

    std::vector<double> delta(output_grad.begin(), output_grad.end());
    for (std::size_t l = sizes_.size() - 1; l >= 1; --l) {
      const int in = sizes_[l - 1], out = sizes_[l];
      const double* w = params_.data() + offsets_[l - 1];
      double* gw = grads.data() + offsets_[l - 1];
      double* gb = gw + static_cast<std::size_t>(out) * in;
      const double* a = cache.acts[l - 1].data();
      std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
      for (int o = 0; o < out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        gb[o] += d;
        double* grow = gw + static_cast<std::size_t>(o) * in;
        const double* row = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) {
          grow[i] += d * a[i];
          prev[static_cast<std::size_t>(i)] += d * row[i];
        }
      }
      if (l - 1 >= 1) {
        // tanh'(z) expressed through the cached activation
        for (int i = 0; i < in; ++i) prev[static_cast<std::size_t>(i)] *= 1.0 - a[i] * a[i];
      }
      delta = std::move(prev);
    }
    if (input_grad) *input_grad = std::move(delta);
  }

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;  // flat offset of each layer's weights
  std::vector<double> params_;
};

enum class OptimizeDirection { minimize, maximize };

// Adam with standard bias correction; the update is lr * m_hat / (sqrt(v_hat)
// + eps). One instance per parameter vector it drives.
class Adam {
 public:
  Adam(std::size_t parameter_count, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
    if (!(lr > 0.0)) throw std::invalid_argument("Adam: lr must be > 0");
  }

  void step(std::vector<double>& params, const std::vector<double>& grads, OptimizeDirection dir) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw std::invalid_argument("Adam::step: size mismatch");
    for (double g : grads)
      if (!std::isfinite(g)) throw std::domain_error("Adam::step: non-finite gradient");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double sign = dir == OptimizeDirection::minimize ? -1.0 : 1.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
      const double m_hat = m_[i] / c1;
      const double v_hat = v_[i] / c2;
      params[i] += sign * lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }

  void step(Mlp& net, const std::vector<double>& grads, OptimizeDirection dir) {
    step(net.parameters(), grads, dir);
  }

  double learning_rate() const { return lr_; }
  std::uint64_t updates() const { return t_; }
  const std::vector<double>& first_moments() const { return m_; }
  const std::vector<double>& second_moments() const { return v_; }

  void restore(std::vector<double> m, std::vector<double> v, std::uint64_t t) {
    if (m.size() != m_.size() || v.size() != v_.size())
      throw std::invalid_argument("Adam::restore: size mismatch");
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

inline double global_grad_norm(std::initializer_list<const std::vector<double>*> grads) {
  double sq = 0.0;
  for (const auto* g : grads)
    for (double x : *g) sq += x * x;
  return std::sqrt(sq);
}

// Scales the listed gradient vectors in place so their joint L2 norm is at
// most max_norm. Returns the factor applied (1.0 when already within bound).
inline double clip_global_norm(std::initializer_list<std::vector<double>*> grads,
                               double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_global_norm: max_norm must be > 0");
  double sq = 0.0;
  for (auto* g : grads)
    for (double x : *g) sq += x * x;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw std::domain_error("clip_global_norm: non-finite gradient norm");
  if (norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  for (auto* g : grads)
    for (double& x : *g) x *= scale;
  return scale;
}

}  // namespace dormsim
