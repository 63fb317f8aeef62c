#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dormsim/rl.hpp"
#include "dormsim/rng.hpp"

namespace dormsim {

// Fixed-capacity FIFO transition store. Once full, every push overwrites the
// oldest entry. Sampling is uniform with replacement from its own seeded
// stream so training runs replay identically.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed)
      : capacity_(capacity), rng_(derive_seed(seed, 0xB0FF)) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
    data_.reserve(capacity_);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  void push(StepRecord step) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(step));
    } else {
      data_[next_] = std::move(step);
    }
    next_ = (next_ + 1) % capacity_;
  }

  // batch_size independent uniform draws; requires at least batch_size
  // stored transitions so early batches aren't dominated by repeats.
  std::vector<const StepRecord*> sample(std::size_t batch_size) {
    if (batch_size == 0) throw std::invalid_argument("ReplayBuffer::sample: batch_size must be > 0");
    if (data_.size() < batch_size)
      throw std::logic_error("ReplayBuffer::sample: not enough transitions stored");
    std::vector<const StepRecord*> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      const int j = rng_.uniform_int(0, static_cast<int>(data_.size()) - 1);
      out.push_back(&data_[static_cast<std::size_t>(j)]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<StepRecord> data_;
  std::size_t next_ = 0;
  Rng rng_;
};

}  // namespace dormsim
