#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "a3ctp/bomber.hpp"
#include "a3ctp/bomber_agents.hpp"
#include "a3ctp/env.hpp"

namespace a3ctp {

// MiniBomber behind the Environment contract. The learner is agent 0; agent 1
// is driven by the configured opponent using the same generator as reset.
class MiniBomberEnv final : public Environment {
 public:
  MiniBomberEnv(bomber::BoardOptions options, bomber::OpponentKind opponent)
      : options_(options), opponent_(opponent) {
    const size_t plane = static_cast<size_t>(options.size * options.size);
    spec_ = EnvSpec{"minibomber", bomber::kNumChannels * plane, bomber::kNumActions,
                    static_cast<size_t>(options.max_steps)};
    spec_.validate();
  }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(Rng& rng) override {
    board_ = bomber::generate_board(options_, rng);
    return bomber::encode_observation(board_, 0);
  }

  // Starts from a given position instead of a generated one.
  std::vector<double> reset_to(bomber::Board board) {
    board_ = std::move(board);
    return bomber::encode_observation(board_, 0);
  }

  StepResult step(size_t action, Rng& rng) override {
    if (action >= static_cast<size_t>(bomber::kNumActions)) throw std::out_of_range("MiniBomber: invalid action");
    const bomber::Action opp = bomber::opponent_action(opponent_, board_, 1, rng);
    const bomber::TickResult tick = bomber::step(board_, {static_cast<bomber::Action>(action), opp});
    StepResult out;
    out.reward = tick.rewards[0];
    out.terminal = tick.terminal;
    if (tick.terminal) out.outcome = bomber::classify_outcome(board_, 0);
    out.observation = bomber::encode_observation(board_, 0);
    return out;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<MiniBomberEnv>(*this); }

  const bomber::Board& board() const { return board_; }
  const bomber::BoardOptions& options() const { return options_; }
  bomber::OpponentKind opponent() const { return opponent_; }

 private:
  bomber::BoardOptions options_;
  bomber::OpponentKind opponent_;
  EnvSpec spec_;
  bomber::Board board_;
};

namespace bomber {

// A finished or partial game: seed of the environment generator plus the
// learner's actions. Re-simulation is exact because reset and the opponent
// draw from a generator seeded with `seed` alone.
struct Replay {
  uint64_t seed = 0;
  BoardOptions options;
  OpponentKind opponent = OpponentKind::static_agent;
  std::vector<Action> actions;

  bool operator==(const Replay&) const = default;
};

inline std::string replay_to_text(const Replay& r) {
  std::ostringstream os;
  os << "minibomber-replay 1\n";
  os << "seed " << r.seed << "\n";
  os << "size " << r.options.size << "\n";
  os << "max_steps " << r.options.max_steps << "\n";
  os.precision(17);
  os << "rigid_density " << r.options.rigid_density << "\n";
  os << "wood_density " << r.options.wood_density << "\n";
  os << "powerup_probability " << r.options.powerup_probability << "\n";
  os << "opponent " << to_string(r.opponent) << "\n";
  os << "actions";
  for (Action a : r.actions) os << ' ' << static_cast<int>(a);
  os << "\n";
  return os.str();
}

inline Replay replay_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string key;
  int version = 0;
  in >> key >> version;
  if (key != "minibomber-replay" || version != 1) throw std::invalid_argument("replay: bad header");
  Replay r;
  std::string opponent;
  for (const char* expected : {"seed", "size", "max_steps", "rigid_density", "wood_density",
                               "powerup_probability", "opponent", "actions"}) {
    in >> key;
    if (key != expected) throw std::invalid_argument("replay: expected '" + std::string(expected) + "'");
    if (key == "seed") in >> r.seed;
    else if (key == "size") in >> r.options.size;
    else if (key == "max_steps") in >> r.options.max_steps;
    else if (key == "rigid_density") in >> r.options.rigid_density;
    else if (key == "wood_density") in >> r.options.wood_density;
    else if (key == "powerup_probability") in >> r.options.powerup_probability;
    else if (key == "opponent") {
      in >> opponent;
      r.opponent = parse_opponent(opponent);
    }
  }
  if (!in) throw std::invalid_argument("replay: malformed");
  for (int a; in >> a;) {
    if (a < 0 || a >= kNumActions) throw std::invalid_argument("replay: bad action");
    r.actions.push_back(static_cast<Action>(a));
  }
  return r;
}

// Replays the game and returns the final board.
inline Board resimulate(const Replay& r) {
  Rng rng(r.seed);
  MiniBomberEnv env(r.options, r.opponent);
  env.reset(rng);
  for (Action a : r.actions) {
    if (env.board().terminal()) throw std::invalid_argument("replay: actions continue past the end of the game");
    env.step(static_cast<size_t>(a), rng);
  }
  return env.board();
}

}  // namespace bomber
}  // namespace a3ctp
