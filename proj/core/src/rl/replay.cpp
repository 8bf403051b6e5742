#include "xirl/rl/replay.hpp"

#include <algorithm>
#include <cmath>

#include "xirl/common/errors.hpp"

namespace xirl::rl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity == 0) throw ContractError("replay capacity must be positive");
  // Grow on demand; a 1e6 capacity should not cost memory up front.
}

void ReplayBuffer::add(std::span<const double> state, std::span<const double> action, double reward,
                       std::span<const double> next_state, bool done) {
  if (state.size() != state_dim_ || next_state.size() != state_dim_ || action.size() != action_dim_) {
    throw ContractError("replay: transition widths do not match the buffer");
  }
  auto finite = [](std::span<const double> v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
  if (!finite(state) || !finite(next_state) || !finite(action) || !std::isfinite(reward)) {
    throw NumericError("replay: non-finite transition");
  }
  for (double a : action) {
    if (a < -1.0 || a > 1.0) throw ContractError("replay: action outside [-1, 1]");
  }
  if (size_ < capacity_ && next_ == size_) {
    states_.insert(states_.end(), state.begin(), state.end());
    actions_.insert(actions_.end(), action.begin(), action.end());
    rewards_.push_back(reward);
    next_states_.insert(next_states_.end(), next_state.begin(), next_state.end());
    not_done_.push_back(done ? 0.0 : 1.0);
  } else {
    std::copy(state.begin(), state.end(), states_.begin() + static_cast<std::ptrdiff_t>(next_ * state_dim_));
    std::copy(action.begin(), action.end(), actions_.begin() + static_cast<std::ptrdiff_t>(next_ * action_dim_));
    rewards_[next_] = reward;
    std::copy(next_state.begin(), next_state.end(),
              next_states_.begin() + static_cast<std::ptrdiff_t>(next_ * state_dim_));
    not_done_[next_] = done ? 0.0 : 1.0;
  }
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Batch ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (size_ == 0) throw ContractError("replay: cannot sample an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  const auto rows = static_cast<Eigen::Index>(n);
  Batch b{diff::Matrix(rows, static_cast<Eigen::Index>(state_dim_)), diff::Matrix(rows, static_cast<Eigen::Index>(action_dim_)),
          diff::Matrix(rows, 1), diff::Matrix(rows, static_cast<Eigen::Index>(state_dim_)), diff::Matrix(rows, 1)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t i = pick(rng);
    for (std::size_t c = 0; c < state_dim_; ++c) {
      b.states(r, static_cast<Eigen::Index>(c)) = states_[i * state_dim_ + c];
      b.next_states(r, static_cast<Eigen::Index>(c)) = next_states_[i * state_dim_ + c];
    }
    for (std::size_t c = 0; c < action_dim_; ++c) b.actions(r, static_cast<Eigen::Index>(c)) = actions_[i * action_dim_ + c];
    b.rewards(r, 0) = rewards_[i];
    b.not_done(r, 0) = not_done_[i];
  }
  return b;
}

double ReplayBuffer::reward_at(std::size_t i) const {
  if (i >= size_) throw ContractError("replay: index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : next_;
  return rewards_[(oldest + i) % capacity_];
}

}  // namespace xirl::rl
