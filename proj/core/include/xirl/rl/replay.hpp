#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "xirl/diffcore/tensor.hpp"

namespace xirl::rl {

struct Batch {
  diff::Matrix states;       // [n, state_dim]
  diff::Matrix actions;      // [n, action_dim]
  diff::Matrix rewards;      // [n, 1]
  diff::Matrix next_states;  // [n, state_dim]
  diff::Matrix not_done;     // [n, 1], 0 for terminal transitions
};

/// Fixed-capacity FIFO transition store.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim);

  /// Throws NumericError on non-finite input and ContractError on an action
  /// outside [-1, 1] or mismatched widths.
  void add(std::span<const double> state, std::span<const double> action, double reward,
           std::span<const double> next_state, bool done);

  /// Uniform draw with replacement. Throws ContractError when empty.
  [[nodiscard]] Batch sample(std::size_t n, std::mt19937_64& rng) const;

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  /// Transition at logical position i (0 = oldest still stored).
  [[nodiscard]] double reward_at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<double> states_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<double> next_states_;
  std::vector<double> not_done_;
};

}  // namespace xirl::rl
