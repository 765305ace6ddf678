#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <numbers>

#include "a3ctp/env.hpp"

namespace a3ctp {

// Classical cart-pole with explicit Euler integration. Reward +1 for every
// step after which the pole is still up and the cart on the track.
class PoleBalance final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kHalfPoleLength = 0.5;
  static constexpr double kForce = 10.0;
  static constexpr double kDt = 0.02;
  static constexpr double kAngleLimit = 12.0 * 2.0 * std::numbers::pi / 360.0;
  static constexpr double kPositionLimit = 2.4;

  explicit PoleBalance(size_t max_steps = 200) : spec_{"polebalance", 4, 2, max_steps} { spec_.validate(); }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(Rng& rng) override {
    for (double& s : state_) s = rng.uniform(-0.05, 0.05);
    steps_ = 0;
    done_ = false;
    return {state_.begin(), state_.end()};
  }

  StepResult step(size_t action, Rng&) override {
    if (action >= 2) throw std::out_of_range("PoleBalance: invalid action");
    if (done_) throw EnvironmentError("PoleBalance: step after terminal");
    auto& [x, x_dot, theta, theta_dot] = state_;
    const double force = action == 1 ? kForce : -kForce;
    const double total_mass = kCartMass + kPoleMass;
    const double pole_moment = kPoleMass * kHalfPoleLength;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    const double temp = (force + pole_moment * theta_dot * theta_dot * sin_t) / total_mass;
    const double theta_acc =
        (kGravity * sin_t - cos_t * temp) /
        (kHalfPoleLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_moment * theta_acc * cos_t / total_mass;
    x += kDt * x_dot;
    x_dot += kDt * x_acc;
    theta += kDt * theta_dot;
    theta_dot += kDt * theta_acc;
    ++steps_;

    const bool fallen = std::abs(x) > kPositionLimit || std::abs(theta) > kAngleLimit;
    StepResult out;
    out.reward = fallen ? 0.0 : 1.0;
    out.terminal = fallen || steps_ >= spec_.max_steps;
    done_ = out.terminal;
    out.observation.assign(state_.begin(), state_.end());
    return out;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<PoleBalance>(*this); }

  const std::array<double, 4>& state() const { return state_; }
  void set_state(const std::array<double, 4>& s) {
    state_ = s;
    steps_ = 0;
    done_ = false;
  }

 private:
  EnvSpec spec_;
  std::array<double, 4> state_{};
  size_t steps_ = 0;
  bool done_ = false;
};

}  // namespace a3ctp
