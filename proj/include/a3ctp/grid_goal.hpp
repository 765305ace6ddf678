#pragma once

#include <cstdlib>
#include <memory>

#include "a3ctp/env.hpp"

namespace a3ctp {

// n x n open grid. The agent and goal are placed on distinct random cells;
// reaching the goal ends the episode with reward 1, running out of steps ends
// it with reward 0. Observation: one-hot agent cell followed by one-hot goal cell.
class GridGoal final : public Environment {
 public:
  enum Move : size_t { up = 0, down, left, right };

  explicit GridGoal(size_t size = 8, size_t max_steps = 0) : size_(size) {
    if (size < 2) throw std::invalid_argument("GridGoal: size must be >= 2");
    spec_ = EnvSpec{"gridgoal", 2 * size * size, 4, max_steps ? max_steps : 4 * size};
    spec_.validate();
  }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(Rng& rng) override {
    const size_t cells = size_ * size_;
    agent_ = rng.below(cells);
    goal_ = rng.below(cells - 1);
    if (goal_ >= agent_) ++goal_;
    steps_ = 0;
    done_ = false;
    return observe();
  }

  // Deterministic placement, for tests.
  std::vector<double> reset_to(size_t agent_cell, size_t goal_cell) {
    if (agent_cell == goal_cell || agent_cell >= size_ * size_ || goal_cell >= size_ * size_)
      throw std::invalid_argument("GridGoal::reset_to: bad cells");
    agent_ = agent_cell;
    goal_ = goal_cell;
    steps_ = 0;
    done_ = false;
    return observe();
  }

  StepResult step(size_t action, Rng&) override {
    if (action >= 4) throw std::out_of_range("GridGoal: invalid action");
    if (done_) throw EnvironmentError("GridGoal: step after terminal");
    size_t r = agent_ / size_, c = agent_ % size_;
    switch (action) {
      case up: r = r > 0 ? r - 1 : r; break;
      case down: r = r + 1 < size_ ? r + 1 : r; break;
      case left: c = c > 0 ? c - 1 : c; break;
      case right: c = c + 1 < size_ ? c + 1 : c; break;
    }
    agent_ = r * size_ + c;
    ++steps_;
    StepResult out;
    if (agent_ == goal_) {
      out.reward = 1.0;
      out.terminal = true;
    } else if (steps_ >= spec_.max_steps) {
      out.terminal = true;
    }
    done_ = out.terminal;
    out.observation = observe();
    return out;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<GridGoal>(*this); }

  size_t agent_cell() const { return agent_; }
  size_t goal_cell() const { return goal_; }
  size_t manhattan_to_goal() const {
    const auto ar = static_cast<long>(agent_ / size_), ac = static_cast<long>(agent_ % size_);
    const auto gr = static_cast<long>(goal_ / size_), gc = static_cast<long>(goal_ % size_);
    return static_cast<size_t>(std::labs(ar - gr) + std::labs(ac - gc));
  }

 private:
  std::vector<double> observe() const {
    std::vector<double> obs(spec_.observation_size, 0.0);
    obs[agent_] = 1.0;
    obs[size_ * size_ + goal_] = 1.0;
    return obs;
  }

  size_t size_;
  EnvSpec spec_;
  size_t agent_ = 0;
  size_t goal_ = 1;
  size_t steps_ = 0;
  bool done_ = false;
};

}  // namespace a3ctp
