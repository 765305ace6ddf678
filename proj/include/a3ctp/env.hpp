#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "a3ctp/rng.hpp"

namespace a3ctp {

struct EnvSpec {
  std::string name;
  size_t observation_size = 0;
  size_t action_count = 0;
  size_t max_steps = 0;

  void validate() const {
    if (action_count < 2) throw std::invalid_argument("EnvSpec: action count must be >= 2");
    if (max_steps < 1) throw std::invalid_argument("EnvSpec: max steps must be >= 1");
  }
};

enum class GameResult { win, loss, tie };

// How a two-player episode ended, seen from the learner.
enum class OutcomeCause {
  enemy_killed_by_our_bomb,
  our_suicide,
  opponent_suicide,
  killed_by_enemy_bomb,
  timeout,
};

struct EpisodeOutcome {
  GameResult result = GameResult::tie;
  OutcomeCause cause = OutcomeCause::timeout;

  bool operator==(const EpisodeOutcome&) const = default;
};

inline std::string_view to_string(GameResult r) {
  switch (r) {
    case GameResult::win: return "win";
    case GameResult::loss: return "loss";
    case GameResult::tie: return "tie";
  }
  return "?";
}

inline std::string_view to_string(OutcomeCause c) {
  switch (c) {
    case OutcomeCause::enemy_killed_by_our_bomb: return "enemy-killed-by-our-bomb";
    case OutcomeCause::our_suicide: return "our-suicide";
    case OutcomeCause::opponent_suicide: return "opponent-suicide";
    case OutcomeCause::killed_by_enemy_bomb: return "killed-by-enemy-bomb";
    case OutcomeCause::timeout: return "timeout";
  }
  return "?";
}

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminal = false;
  std::optional<EpisodeOutcome> outcome;
};

class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Episodic simulator. Instances are single-owner; all randomness comes from
// the generator passed to reset/step.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepResult step(size_t action, Rng& rng) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

}  // namespace a3ctp
