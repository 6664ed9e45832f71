#pragma once

// FIFO ring of transitions with uniform sampling. Observations are stored as
// floats in one contiguous block that grows lazily up to capacity.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace platform_entry {

class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim) : capacity_(capacity), dim_(obs_dim) {
    if (capacity == 0 || obs_dim == 0) throw std::invalid_argument("replay buffer needs capacity and dimension > 0");
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t obs_dim() const { return dim_; }
  /// Total pushes so far; slot of push k is k % capacity.
  std::uint64_t pushes() const { return pushes_; }

  void push(const Eigen::VectorXd& obs, int action, double reward, const Eigen::VectorXd& next_obs, bool done) {
    if (static_cast<std::size_t>(obs.size()) != dim_ || static_cast<std::size_t>(next_obs.size()) != dim_)
      throw std::invalid_argument("observation dimension mismatch");
    const std::size_t slot = static_cast<std::size_t>(pushes_ % capacity_);
    if (slot == actions_.size()) {
      obs_.resize(obs_.size() + dim_);
      next_.resize(next_.size() + dim_);
      actions_.push_back(0);
      rewards_.push_back(0.0);
      done_.push_back(0);
    }
    for (std::size_t q = 0; q < dim_; ++q) {
      obs_[slot * dim_ + q] = static_cast<float>(obs[static_cast<Eigen::Index>(q)]);
      next_[slot * dim_ + q] = static_cast<float>(next_obs[static_cast<Eigen::Index>(q)]);
    }
    actions_[slot] = action;
    rewards_[slot] = reward;
    done_[slot] = done ? 1 : 0;
    ++pushes_;
    if (size_ < capacity_) ++size_;
  }

  /// Uniform draw with replacement over stored slots.
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const {
    if (size_ == 0) throw std::logic_error("cannot sample an empty replay buffer");
    std::vector<std::size_t> out(n);
    for (auto& i : out) i = static_cast<std::size_t>(rng() % size_);
    return out;
  }

  /// Slot of the oldest stored transition.
  std::size_t oldest_slot() const { return size_ < capacity_ ? 0 : static_cast<std::size_t>(pushes_ % capacity_); }

  struct Batch {
    Eigen::MatrixXd obs;       // dim x n
    Eigen::MatrixXd next_obs;  // dim x n
    std::vector<int> actions;
    Eigen::VectorXd rewards;
    Eigen::VectorXd done;
  };

  Batch gather(const std::vector<std::size_t>& slots) const {
    Batch b;
    const auto n = static_cast<Eigen::Index>(slots.size());
    const auto d = static_cast<Eigen::Index>(dim_);
    b.obs.resize(d, n);
    b.next_obs.resize(d, n);
    b.rewards.resize(n);
    b.done.resize(n);
    for (Eigen::Index c = 0; c < n; ++c) {
      const std::size_t s = slots[static_cast<std::size_t>(c)];
      if (s >= size_) throw std::out_of_range("replay slot out of range");
      for (Eigen::Index q = 0; q < d; ++q) {
        b.obs(q, c) = obs_[s * dim_ + static_cast<std::size_t>(q)];
        b.next_obs(q, c) = next_[s * dim_ + static_cast<std::size_t>(q)];
      }
      b.actions.push_back(actions_[s]);
      b.rewards[c] = rewards_[s];
      b.done[c] = done_[s];
    }
    return b;
  }

  Batch sample(std::size_t n, std::mt19937_64& rng) const { return gather(sample_indices(n, rng)); }

  int action_at(std::size_t slot) const { return actions_.at(slot); }
  double reward_at(std::size_t slot) const { return rewards_.at(slot); }

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::size_t size_ = 0;
  std::uint64_t pushes_ = 0;
  std::vector<float> obs_, next_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> done_;
};

}  // namespace platform_entry
