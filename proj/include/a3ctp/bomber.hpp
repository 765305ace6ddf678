#pragma once

// MiniBomber: the two-agent Pommerman variant.
//
// One call to step() resolves, in order:
//   1. flame decay (lifetime -1; flames at 0 vanish)
//   2. bomb placement (timer kBombTimer, owner's current blast radius)
//   3. simultaneous movement, including kicks and conflict bounce-back
//   4. power-up pickup
//   5. kicked bombs already in motion slide one cell
//   6. timers of bombs placed before this step tick down by one
//   7. explosions: bombs at timer 0 or sitting on a flame, closed under chain
//      reaction; wood in a blast is destroyed and reveals its power-up
//   8. agents standing on any flame die; the flame owner is the killer
// A bomb placed during step t therefore explodes during step t+10 and its
// flames are visible after steps t+10 and t+11.

#include <algorithm>
#include <array>
#include <cstdint>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "a3ctp/env.hpp"
#include "a3ctp/rng.hpp"

namespace a3ctp::bomber {

inline constexpr int kBombTimer = 10;
inline constexpr int kFlameLifetime = 2;
inline constexpr int kMaxSteps = 800;
inline constexpr int kNumActions = 6;
inline constexpr int kNumChannels = 22;
inline constexpr int kInitialAmmo = 1;
inline constexpr int kInitialBlastRadius = 2;
inline constexpr int kDefaultBoardSize = 8;

enum class Cell : uint8_t { passage, rigid, wood };
enum class PowerUp : uint8_t { none, extra_bomb, blast_radius, kick };
enum class Action : uint8_t { stop = 0, up, down, left, right, bomb };

inline constexpr std::array<Action, 4> kMoves = {Action::up, Action::down, Action::left, Action::right};

struct Pos {
  int row = 0;
  int col = 0;
  auto operator<=>(const Pos&) const = default;
};

inline Pos offset(Pos p, Action a) {
  switch (a) {
    case Action::up: return {p.row - 1, p.col};
    case Action::down: return {p.row + 1, p.col};
    case Action::left: return {p.row, p.col - 1};
    case Action::right: return {p.row, p.col + 1};
    default: return p;
  }
}

inline bool is_move(Action a) { return a == Action::up || a == Action::down || a == Action::left || a == Action::right; }

struct Agent {
  Pos pos;
  bool alive = true;
  int ammo = kInitialAmmo;
  int blast_radius = kInitialBlastRadius;
  bool can_kick = false;
  bool operator==(const Agent&) const = default;
};

struct Bomb {
  int id = 0;
  Pos pos;
  int owner = 0;
  int timer = kBombTimer;
  int radius = kInitialBlastRadius;
  Action moving = Action::stop;
  bool operator==(const Bomb&) const = default;
};

struct Flame {
  Pos pos;
  int life = kFlameLifetime;
  int owner = 0;
  bool operator==(const Flame&) const = default;
};

struct Death {
  int agent = 0;
  int killer = 0;  // owner of the flame the agent died on
  bool operator==(const Death&) const = default;
};

struct Board {
  int size = kDefaultBoardSize;
  int step = 0;
  int max_steps = kMaxSteps;
  int next_bomb_id = 0;
  std::vector<Cell> cells;
  // Power-up per cell; hidden while the cell is still wood.
  std::vector<PowerUp> powerups;
  std::array<Agent, 2> agents;
  std::vector<Bomb> bombs;    // kept sorted by id
  std::vector<Flame> flames;  // kept sorted by cell index
  std::vector<Death> deaths;

  static Board empty(int size, int max_steps = kMaxSteps) {
    if (size < 3) throw std::invalid_argument("Board: size must be >= 3");
    Board b;
    b.size = size;
    b.max_steps = max_steps;
    b.cells.assign(static_cast<size_t>(size * size), Cell::passage);
    b.powerups.assign(static_cast<size_t>(size * size), PowerUp::none);
    b.agents[0].pos = {0, 0};
    b.agents[1].pos = {size - 1, size - 1};
    return b;
  }

  bool in_bounds(Pos p) const { return p.row >= 0 && p.col >= 0 && p.row < size && p.col < size; }
  size_t index(Pos p) const { return static_cast<size_t>(p.row * size + p.col); }
  Pos pos_of(size_t i) const { return {static_cast<int>(i) / size, static_cast<int>(i) % size}; }

  Cell cell(Pos p) const { return cells[index(p)]; }
  void set_cell(Pos p, Cell c) { cells[index(p)] = c; }
  PowerUp visible_powerup(Pos p) const { return cell(p) == Cell::passage ? powerups[index(p)] : PowerUp::none; }

  const Bomb* bomb_at(Pos p) const {
    for (const auto& b : bombs)
      if (b.pos == p) return &b;
    return nullptr;
  }
  Bomb* bomb_at(Pos p) { return const_cast<Bomb*>(std::as_const(*this).bomb_at(p)); }

  const Flame* flame_at(Pos p) const {
    for (const auto& f : flames)
      if (f.pos == p) return &f;
    return nullptr;
  }

  // Index of the living agent on `p`, or -1.
  int agent_at(Pos p) const {
    for (int i = 0; i < 2; ++i)
      if (agents[i].alive && agents[i].pos == p) return i;
    return -1;
  }

  bool terminal() const { return !deaths.empty() || step >= max_steps; }

  size_t count(Cell c) const { return static_cast<size_t>(std::count(cells.begin(), cells.end(), c)); }

  bool operator==(const Board&) const = default;
};

// Cells covered by a blast of `radius` centred on `center`: rays stop before
// rigid cells and the board edge, and stop after (including) the first wood.
inline std::vector<Pos> blast_cells(const Board& b, Pos center, int radius) {
  std::vector<Pos> out{center};
  for (Action dir : kMoves) {
    Pos p = center;
    for (int k = 0; k < radius; ++k) {
      p = offset(p, dir);
      if (!b.in_bounds(p) || b.cell(p) == Cell::rigid) break;
      out.push_back(p);
      if (b.cell(p) == Cell::wood) break;
    }
  }
  return out;
}

struct TickResult {
  std::array<double, 2> rewards{0.0, 0.0};
  bool terminal = false;
};

namespace detail {

inline void resolve_movement(Board& b, const std::array<Action, 2>& actions, std::vector<int>& kicked_ids) {
  std::array<Pos, 2> from{b.agents[0].pos, b.agents[1].pos};
  std::array<Pos, 2> to = from;
  std::array<bool, 2> kick{false, false};
  std::array<Pos, 2> kick_dest{};

  auto free_for_bomb = [&](Pos q) {
    return b.in_bounds(q) && b.cell(q) == Cell::passage && !b.bomb_at(q) && b.agent_at(q) < 0;
  };

  for (int i = 0; i < 2; ++i) {
    const Agent& a = b.agents[i];
    if (!a.alive || !is_move(actions[i])) continue;
    const Pos t = offset(from[i], actions[i]);
    if (!b.in_bounds(t) || b.cell(t) != Cell::passage) continue;
    if (b.bomb_at(t)) {
      if (!a.can_kick) continue;
      const Pos beyond = offset(t, actions[i]);
      if (!free_for_bomb(beyond)) continue;
      kick[i] = true;
      kick_dest[i] = beyond;
    }
    to[i] = t;
  }

  auto revert = [&](int i) {
    to[i] = from[i];
    kick[i] = false;
  };
  const bool both_alive = b.agents[0].alive && b.agents[1].alive;
  for (int iter = 0; iter < 4 && both_alive; ++iter) {
    const std::array<Pos, 2> before = to;
    const bool moved0 = to[0] != from[0], moved1 = to[1] != from[1];
    if (to[0] == to[1]) {
      // contested cell, or walking into an agent that stays put
      if (moved0) revert(0);
      if (moved1) revert(1);
    } else if (moved0 && moved1 && to[0] == from[1] && to[1] == from[0]) {
      revert(0);
      revert(1);
    }
    if (kick[0] && kick[1] && kick_dest[0] == kick_dest[1]) {
      revert(0);
      revert(1);
    }
    for (int i = 0; i < 2; ++i)
      if (kick[i] && kick_dest[i] == to[1 - i]) revert(i);
    if (to == before) break;
  }

  for (int i = 0; i < 2; ++i) {
    if (kick[i]) {
      Bomb* bomb = b.bomb_at(to[i]);
      bomb->pos = kick_dest[i];
      bomb->moving = actions[i];
      kicked_ids.push_back(bomb->id);
    }
    b.agents[i].pos = to[i];
  }
}

}  // namespace detail

// Advances the board by one step with both agents' actions.
inline TickResult step(Board& b, const std::array<Action, 2>& actions) {
  if (b.terminal()) throw EnvironmentError("bomber::step: board is terminal");
  for (Action a : actions)
    if (static_cast<int>(a) >= kNumActions) throw std::out_of_range("bomber::step: invalid action");

  // 1. flame decay
  for (auto& f : b.flames) f.life -= 1;
  std::erase_if(b.flames, [](const Flame& f) { return f.life <= 0; });

  // 2. bomb placement
  std::vector<int> fresh_ids;
  for (int i = 0; i < 2; ++i) {
    Agent& a = b.agents[i];
    if (a.alive && actions[i] == Action::bomb && a.ammo > 0 && !b.bomb_at(a.pos)) {
      b.bombs.push_back(Bomb{b.next_bomb_id++, a.pos, i, kBombTimer, a.blast_radius, Action::stop});
      a.ammo -= 1;
      fresh_ids.push_back(b.bombs.back().id);
    }
  }

  // 3. movement
  std::vector<int> kicked_ids;
  detail::resolve_movement(b, actions, kicked_ids);

  // 4. power-ups
  for (auto& a : b.agents) {
    if (!a.alive) continue;
    PowerUp& pu = b.powerups[b.index(a.pos)];
    switch (pu) {
      case PowerUp::extra_bomb: a.ammo += 1; break;
      case PowerUp::blast_radius: a.blast_radius += 1; break;
      case PowerUp::kick: a.can_kick = true; break;
      case PowerUp::none: break;
    }
    pu = PowerUp::none;
  }

  // 5. sliding bombs
  for (auto& bomb : b.bombs) {
    if (bomb.moving == Action::stop) continue;
    if (std::find(kicked_ids.begin(), kicked_ids.end(), bomb.id) != kicked_ids.end()) continue;
    const Pos next = offset(bomb.pos, bomb.moving);
    if (b.in_bounds(next) && b.cell(next) == Cell::passage && !b.bomb_at(next) && b.agent_at(next) < 0)
      bomb.pos = next;
    else
      bomb.moving = Action::stop;
  }

  // 6. timers
  for (auto& bomb : b.bombs)
    if (std::find(fresh_ids.begin(), fresh_ids.end(), bomb.id) == fresh_ids.end()) bomb.timer -= 1;

  // 7. explosions, closed under chain reaction
  const size_t n_cells = b.cells.size();
  std::vector<int> flame_owner(n_cells, -1);
  std::vector<bool> wood_hit(n_cells, false);
  std::vector<bool> exploding(b.bombs.size(), false);
  std::queue<size_t> pending;
  for (size_t k = 0; k < b.bombs.size(); ++k) {
    if (b.bombs[k].timer <= 0 || b.flame_at(b.bombs[k].pos)) {
      exploding[k] = true;
      pending.push(k);
    }
  }
  while (!pending.empty()) {
    const Bomb& bomb = b.bombs[pending.front()];
    pending.pop();
    for (Pos p : blast_cells(b, bomb.pos, bomb.radius)) {
      const size_t idx = b.index(p);
      if (flame_owner[idx] < 0) flame_owner[idx] = bomb.owner;
      if (b.cell(p) == Cell::wood) wood_hit[idx] = true;
      for (size_t k = 0; k < b.bombs.size(); ++k) {
        if (!exploding[k] && b.bombs[k].pos == p) {
          exploding[k] = true;
          pending.push(k);
        }
      }
    }
  }
  for (size_t k = 0; k < b.bombs.size(); ++k)
    if (exploding[k]) b.agents[b.bombs[k].owner].ammo += 1;
  {
    std::vector<Bomb> remaining;
    for (size_t k = 0; k < b.bombs.size(); ++k)
      if (!exploding[k]) remaining.push_back(b.bombs[k]);
    b.bombs = std::move(remaining);
  }
  for (size_t i = 0; i < n_cells; ++i)
    if (wood_hit[i]) b.cells[i] = Cell::passage;
  for (size_t i = 0; i < n_cells; ++i) {
    if (flame_owner[i] < 0) continue;
    const Pos p = b.pos_of(i);
    auto it = std::find_if(b.flames.begin(), b.flames.end(), [&](const Flame& f) { return f.pos == p; });
    if (it != b.flames.end()) {
      it->life = kFlameLifetime;
      it->owner = flame_owner[i];
    } else {
      b.flames.push_back(Flame{p, kFlameLifetime, flame_owner[i]});
    }
  }
  std::sort(b.flames.begin(), b.flames.end(), [&](const Flame& x, const Flame& y) { return x.pos < y.pos; });

  // 8. deaths
  for (int i = 0; i < 2; ++i) {
    Agent& a = b.agents[i];
    if (!a.alive) continue;
    if (const Flame* f = b.flame_at(a.pos)) {
      a.alive = false;
      b.deaths.push_back(Death{i, f->owner});
    }
  }

  b.step += 1;
  TickResult r;
  if (!b.deaths.empty()) {
    r.terminal = true;
    for (int i = 0; i < 2; ++i) r.rewards[i] = b.agents[i].alive ? 1.0 : -1.0;
  } else if (b.step >= b.max_steps) {
    r.terminal = true;
    r.rewards = {-1.0, -1.0};
  }
  return r;
}

// Attributes the end of a finished game from `perspective`'s point of view.
inline EpisodeOutcome classify_outcome(const Board& b, int perspective = 0) {
  if (!b.terminal()) throw std::logic_error("classify_outcome: board is not terminal");
  const int me = perspective, enemy = 1 - perspective;
  const Death* my_death = nullptr;
  const Death* enemy_death = nullptr;
  for (const auto& d : b.deaths) {
    if (d.agent == me) my_death = &d;
    if (d.agent == enemy) enemy_death = &d;
  }
  if (my_death) {
    return {GameResult::loss, my_death->killer == me ? OutcomeCause::our_suicide : OutcomeCause::killed_by_enemy_bomb};
  }
  if (enemy_death) {
    return {GameResult::win,
            enemy_death->killer == me ? OutcomeCause::enemy_killed_by_our_bomb : OutcomeCause::opponent_suicide};
  }
  return {GameResult::tie, OutcomeCause::timeout};
}

// ---------------------------------------------------------------------------
// Board generation

struct BoardOptions {
  int size = kDefaultBoardSize;
  int max_steps = kMaxSteps;
  double rigid_density = 0.15;
  double wood_density = 0.25;
  double powerup_probability = 0.5;

  bool operator==(const BoardOptions&) const = default;
};

// Breadth-first reachability over non-rigid cells.
inline bool connected(const Board& b, Pos from, Pos to) {
  std::vector<bool> seen(b.cells.size(), false);
  std::queue<Pos> q;
  q.push(from);
  seen[b.index(from)] = true;
  while (!q.empty()) {
    const Pos p = q.front();
    q.pop();
    if (p == to) return true;
    for (Action d : kMoves) {
      const Pos n = offset(p, d);
      if (b.in_bounds(n) && b.cell(n) != Cell::rigid && !seen[b.index(n)]) {
        seen[b.index(n)] = true;
        q.push(n);
      }
    }
  }
  return false;
}

inline Board generate_board(const BoardOptions& opt, Rng& rng) {
  if (opt.rigid_density < 0 || opt.wood_density < 0 || opt.rigid_density + opt.wood_density > 1.0)
    throw std::invalid_argument("generate_board: bad densities");
  const int n = opt.size;
  const std::array<Pos, 4> corners{Pos{0, 0}, Pos{0, n - 1}, Pos{n - 1, 0}, Pos{n - 1, n - 1}};
  const size_t c0 = rng.below(4);
  size_t c1 = rng.below(3);
  if (c1 >= c0) ++c1;

  constexpr int kAttempts = 64;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Board b = Board::empty(n, opt.max_steps);
    b.agents[0].pos = corners[c0];
    b.agents[1].pos = corners[c1];
    for (auto& c : b.cells) {
      const double u = rng.uniform();
      c = u < opt.rigid_density ? Cell::rigid : u < opt.rigid_density + opt.wood_density ? Cell::wood : Cell::passage;
    }
    // each agent starts with its corner and the two cells next to it clear
    for (const Agent& a : b.agents) {
      b.set_cell(a.pos, Cell::passage);
      for (Action d : kMoves) {
        const Pos q = offset(a.pos, d);
        if (b.in_bounds(q)) b.set_cell(q, Cell::passage);
      }
    }
    // random monotone corridor between the two agents; rigid cells on it are cleared
    Pos p = b.agents[0].pos;
    const Pos goal = b.agents[1].pos;
    while (p != goal) {
      const int dr = goal.row - p.row, dc = goal.col - p.col;
      const bool vertical = dc == 0 || (dr != 0 && rng.bernoulli(0.5));
      if (vertical)
        p.row += dr > 0 ? 1 : -1;
      else
        p.col += dc > 0 ? 1 : -1;
      if (b.cell(p) == Cell::rigid) b.set_cell(p, Cell::passage);
    }
    if (!connected(b, b.agents[0].pos, b.agents[1].pos)) continue;
    for (size_t i = 0; i < b.cells.size(); ++i) {
      if (b.cells[i] != Cell::wood || !rng.bernoulli(opt.powerup_probability)) continue;
      b.powerups[i] = static_cast<PowerUp>(1 + rng.below(3));
    }
    return b;
  }
  throw EnvironmentError("generate_board: no connected board after retries");
}

// ---------------------------------------------------------------------------
// Observation encoding (see docs/observation_layout.md)

enum Channel : int {
  ch_passage = 0,
  ch_rigid,
  ch_wood,
  ch_pu_extra_bomb,
  ch_pu_blast_radius,
  ch_pu_kick,
  ch_bomb,
  ch_bomb_radius,
  ch_bomb_life,
  ch_flame,
  ch_flame_life,
  ch_self_pos,
  ch_enemy_pos,
  ch_self_ammo,
  ch_self_radius,
  ch_self_kick,
  ch_enemy_ammo,
  ch_enemy_radius,
  ch_enemy_kick,
  ch_step_fraction,
  ch_ones,
  ch_border,
};
static_assert(ch_border + 1 == kNumChannels);

inline constexpr double kCountScale = 10.0;

inline std::vector<double> encode_observation(const Board& b, int perspective = 0) {
  const size_t plane = static_cast<size_t>(b.size * b.size);
  std::vector<double> obs(kNumChannels * plane, 0.0);
  auto at = [&](int ch, size_t i) -> double& { return obs[static_cast<size_t>(ch) * plane + i]; };
  auto fill = [&](int ch, double v) {
    for (size_t i = 0; i < plane; ++i) at(ch, i) = v;
  };

  for (size_t i = 0; i < plane; ++i) {
    switch (b.cells[i]) {
      case Cell::passage: at(ch_passage, i) = 1.0; break;
      case Cell::rigid: at(ch_rigid, i) = 1.0; break;
      case Cell::wood: at(ch_wood, i) = 1.0; break;
    }
    if (b.cells[i] == Cell::passage) {
      switch (b.powerups[i]) {
        case PowerUp::extra_bomb: at(ch_pu_extra_bomb, i) = 1.0; break;
        case PowerUp::blast_radius: at(ch_pu_blast_radius, i) = 1.0; break;
        case PowerUp::kick: at(ch_pu_kick, i) = 1.0; break;
        case PowerUp::none: break;
      }
    }
    const Pos p = b.pos_of(i);
    const int row = p.row, col = p.col;
    if (row == 0 || col == 0 || row == b.size - 1 || col == b.size - 1) at(ch_border, i) = 1.0;
  }
  for (const Bomb& bomb : b.bombs) {
    const size_t i = b.index(bomb.pos);
    at(ch_bomb, i) = 1.0;
    at(ch_bomb_radius, i) = bomb.radius / kCountScale;
    at(ch_bomb_life, i) = static_cast<double>(bomb.timer) / kBombTimer;
  }
  for (const Flame& f : b.flames) {
    const size_t i = b.index(f.pos);
    at(ch_flame, i) = 1.0;
    at(ch_flame_life, i) = static_cast<double>(f.life) / kFlameLifetime;
  }
  const Agent& self = b.agents[perspective];
  const Agent& enemy = b.agents[1 - perspective];
  if (self.alive) at(ch_self_pos, b.index(self.pos)) = 1.0;
  if (enemy.alive) at(ch_enemy_pos, b.index(enemy.pos)) = 1.0;
  fill(ch_self_ammo, self.ammo / kCountScale);
  fill(ch_self_radius, self.blast_radius / kCountScale);
  fill(ch_self_kick, self.can_kick ? 1.0 : 0.0);
  fill(ch_enemy_ammo, enemy.ammo / kCountScale);
  fill(ch_enemy_radius, enemy.blast_radius / kCountScale);
  fill(ch_enemy_kick, enemy.can_kick ? 1.0 : 0.0);
  fill(ch_step_fraction, static_cast<double>(b.step) / b.max_steps);
  fill(ch_ones, 1.0);
  return obs;
}

// ---------------------------------------------------------------------------
// Text serialization (see docs/board_text_format.md)

inline char cell_char(const Board& b, size_t i) {
  switch (b.cells[i]) {
    case Cell::rigid: return '#';
    case Cell::wood: return '+';
    case Cell::passage: break;
  }
  switch (b.powerups[i]) {
    case PowerUp::extra_bomb: return 'a';
    case PowerUp::blast_radius: return 'r';
    case PowerUp::kick: return 'k';
    case PowerUp::none: break;
  }
  return '.';
}

inline std::string_view action_name(Action a) {
  switch (a) {
    case Action::stop: return "none";
    case Action::up: return "up";
    case Action::down: return "down";
    case Action::left: return "left";
    case Action::right: return "right";
    case Action::bomb: return "bomb";
  }
  return "?";
}

inline Action parse_direction(std::string_view s) {
  if (s == "none") return Action::stop;
  if (s == "up") return Action::up;
  if (s == "down") return Action::down;
  if (s == "left") return Action::left;
  if (s == "right") return Action::right;
  throw std::invalid_argument("board text: bad direction '" + std::string(s) + "'");
}

inline std::string_view powerup_name(PowerUp p) {
  switch (p) {
    case PowerUp::extra_bomb: return "extra_bomb";
    case PowerUp::blast_radius: return "blast_radius";
    case PowerUp::kick: return "kick";
    case PowerUp::none: return "none";
  }
  return "?";
}

inline PowerUp parse_powerup(std::string_view s) {
  if (s == "extra_bomb") return PowerUp::extra_bomb;
  if (s == "blast_radius") return PowerUp::blast_radius;
  if (s == "kick") return PowerUp::kick;
  if (s == "none") return PowerUp::none;
  throw std::invalid_argument("board text: bad power-up '" + std::string(s) + "'");
}

inline std::string to_text(const Board& b) {
  std::ostringstream os;
  os << "board size " << b.size << " step " << b.step << " max_steps " << b.max_steps << " next_bomb "
     << b.next_bomb_id << "\n";
  for (int r = 0; r < b.size; ++r) {
    for (int c = 0; c < b.size; ++c) os << cell_char(b, b.index({r, c}));
    os << "\n";
  }
  for (int i = 0; i < 2; ++i) {
    const Agent& a = b.agents[i];
    os << "agent " << i << " pos " << a.pos.row << "," << a.pos.col << " alive " << a.alive << " ammo " << a.ammo
       << " radius " << a.blast_radius << " kick " << a.can_kick << "\n";
  }
  for (const Bomb& bomb : b.bombs)
    os << "bomb " << bomb.id << " pos " << bomb.pos.row << "," << bomb.pos.col << " owner " << bomb.owner << " timer "
       << bomb.timer << " radius " << bomb.radius << " moving " << action_name(bomb.moving) << "\n";
  for (const Flame& f : b.flames)
    os << "flame pos " << f.pos.row << "," << f.pos.col << " life " << f.life << " owner " << f.owner << "\n";
  for (size_t i = 0; i < b.cells.size(); ++i)
    if (b.cells[i] == Cell::wood && b.powerups[i] != PowerUp::none) {
      const Pos p = b.pos_of(i);
      os << "hidden pos " << p.row << "," << p.col << " " << powerup_name(b.powerups[i]) << "\n";
    }
  for (const Death& d : b.deaths) os << "death agent " << d.agent << " killer " << d.killer << "\n";
  return os.str();
}

namespace detail {

inline Pos parse_pos(std::istream& is) {
  std::string tok;
  is >> tok;
  const auto comma = tok.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("board text: bad position '" + tok + "'");
  return {std::stoi(tok.substr(0, comma)), std::stoi(tok.substr(comma + 1))};
}

inline void expect(std::istream& is, std::string_view word) {
  std::string tok;
  is >> tok;
  if (tok != word)
    throw std::invalid_argument("board text: expected '" + std::string(word) + "', got '" + tok + "'");
}

}  // namespace detail

inline Board from_text(std::string_view text) {
  using detail::expect;
  using detail::parse_pos;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("board text: empty");
  Board b;
  {
    std::istringstream h(line);
    int size = 0, step = 0, max_steps = 0, next_bomb = 0;
    expect(h, "board");
    expect(h, "size");
    h >> size;
    expect(h, "step");
    h >> step;
    expect(h, "max_steps");
    h >> max_steps;
    expect(h, "next_bomb");
    h >> next_bomb;
    if (!h) throw std::invalid_argument("board text: bad header");
    b = Board::empty(size, max_steps);
    b.step = step;
    b.next_bomb_id = next_bomb;
  }
  for (int r = 0; r < b.size; ++r) {
    if (!std::getline(in, line) || static_cast<int>(line.size()) != b.size)
      throw std::invalid_argument("board text: bad grid row " + std::to_string(r));
    for (int c = 0; c < b.size; ++c) {
      const size_t i = b.index({r, c});
      switch (line[static_cast<size_t>(c)]) {
        case '.': break;
        case '#': b.cells[i] = Cell::rigid; break;
        case '+': b.cells[i] = Cell::wood; break;
        case 'a': b.powerups[i] = PowerUp::extra_bomb; break;
        case 'r': b.powerups[i] = PowerUp::blast_radius; break;
        case 'k': b.powerups[i] = PowerUp::kick; break;
        default: throw std::invalid_argument("board text: bad cell character");
      }
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "agent") {
      int i = 0, alive = 1, kick = 0;
      ls >> i;
      if (i < 0 || i > 1) throw std::invalid_argument("board text: bad agent index");
      Agent& a = b.agents[i];
      expect(ls, "pos");
      a.pos = parse_pos(ls);
      expect(ls, "alive");
      ls >> alive;
      expect(ls, "ammo");
      ls >> a.ammo;
      expect(ls, "radius");
      ls >> a.blast_radius;
      expect(ls, "kick");
      ls >> kick;
      a.alive = alive != 0;
      a.can_kick = kick != 0;
    } else if (kind == "bomb") {
      Bomb bomb;
      std::string moving;
      ls >> bomb.id;
      expect(ls, "pos");
      bomb.pos = parse_pos(ls);
      expect(ls, "owner");
      ls >> bomb.owner;
      expect(ls, "timer");
      ls >> bomb.timer;
      expect(ls, "radius");
      ls >> bomb.radius;
      expect(ls, "moving");
      ls >> moving;
      bomb.moving = parse_direction(moving);
      b.bombs.push_back(bomb);
    } else if (kind == "flame") {
      Flame f;
      expect(ls, "pos");
      f.pos = parse_pos(ls);
      expect(ls, "life");
      ls >> f.life;
      expect(ls, "owner");
      ls >> f.owner;
      b.flames.push_back(f);
    } else if (kind == "hidden") {
      expect(ls, "pos");
      const Pos p = parse_pos(ls);
      std::string name;
      ls >> name;
      b.powerups[b.index(p)] = parse_powerup(name);
    } else if (kind == "death") {
      Death d;
      expect(ls, "agent");
      ls >> d.agent;
      expect(ls, "killer");
      ls >> d.killer;
      b.deaths.push_back(d);
    } else {
      throw std::invalid_argument("board text: unknown entity '" + kind + "'");
    }
    if (ls.fail()) throw std::invalid_argument("board text: malformed line '" + line + "'");
  }
  std::sort(b.bombs.begin(), b.bombs.end(), [](const Bomb& x, const Bomb& y) { return x.id < y.id; });
  std::sort(b.flames.begin(), b.flames.end(), [](const Flame& x, const Flame& y) { return x.pos < y.pos; });
  return b;
}

// Human-oriented picture: terrain plus agents (0/1), bombs (B) and flames (*).
inline std::string render(const Board& b) {
  std::string out;
  for (int r = 0; r < b.size; ++r) {
    for (int c = 0; c < b.size; ++c) {
      const Pos p{r, c};
      char ch = cell_char(b, b.index(p));
      if (b.flame_at(p)) ch = '*';
      if (b.bomb_at(p)) ch = 'B';
      if (const int a = b.agent_at(p); a >= 0) ch = static_cast<char>('0' + a);
      out += ch;
    }
    out += '\n';
  }
  return out;
}

}  // namespace a3ctp::bomber
