#pragma once

#include <array>
#include <climits>
#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "a3ctp/bomber.hpp"
#include "a3ctp/rng.hpp"

namespace a3ctp::bomber {

// For every cell, the future steps after which it will hold a flame if no one
// kicks or places anything. Bit k of `lethal[cell]` stands for "flame present
// after k more steps" (k >= 1).
class BlastMap {
 public:
  static constexpr int kHorizon = 31;

  explicit BlastMap(const Board& b) : size_(b.size), lethal_(b.cells.size(), 0) {
    for (const Flame& f : b.flames)
      for (int k = 1; k <= f.life - 1; ++k) mark(b.index(f.pos), k);

    // explosion step per bomb, relaxed along chain reactions
    const size_t n = b.bombs.size();
    std::vector<int> when(n);
    std::vector<std::vector<Pos>> reach(n);
    for (size_t i = 0; i < n; ++i) {
      const Bomb& bomb = b.bombs[i];
      when[i] = std::max(1, bomb.timer);
      const Flame* f = b.flame_at(bomb.pos);
      if (f && f->life >= 2) when[i] = 1;
      reach[i] = blast_cells(b, bomb.pos, bomb.radius);
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
          if (i == j || when[i] >= when[j]) continue;
          for (Pos p : reach[i])
            if (p == b.bombs[j].pos) {
              when[j] = when[i];
              changed = true;
              break;
            }
        }
    }
    for (size_t i = 0; i < n; ++i)
      for (Pos p : reach[i])
        for (int k = when[i]; k < when[i] + kFlameLifetime; ++k) mark(b.index(p), k);
  }

  bool lethal_at(Pos p, int k) const {
    return k >= 1 && k <= kHorizon && (lethal_[index(p)] >> k) & 1u;
  }
  // Any flame at some step strictly after `after`.
  bool threatened_after(Pos p, int after) const {
    const uint32_t mask = after >= kHorizon ? 0u : ~((2u << after) - 1u);
    return (lethal_[index(p)] & mask) != 0;
  }
  bool threatened(Pos p) const { return threatened_after(p, 0); }

 private:
  size_t index(Pos p) const { return static_cast<size_t>(p.row * size_ + p.col); }
  void mark(size_t i, int k) {
    if (k >= 1 && k <= kHorizon) lethal_[i] |= 1u << k;
  }

  int size_;
  std::vector<uint32_t> lethal_;
};

// Always stays put.
inline Action static_opponent(const Board&) { return Action::stop; }

namespace detail {

// Fixed enumeration order for tie-breaking.
inline constexpr std::array<Action, 5> kActionOrder = {Action::up, Action::down, Action::left, Action::right,
                                                       Action::stop};

inline bool walkable(const Board& b, int me, Pos p) {
  if (!b.in_bounds(p) || b.cell(p) != Cell::passage) return false;
  if (p == b.agents[me].pos) return true;
  return !b.bomb_at(p) && b.agent_at(p) < 0;
}

inline Action pick(const std::vector<Action>& candidates, Rng& rng) {
  return candidates.size() == 1 ? candidates.front() : candidates[rng.below(candidates.size())];
}

// First actions of the shortest time-expanded escape to a cell that stays
// flame-free, starting at time `t0`. Empty when no escape exists.
inline std::vector<Action> escape_moves(const Board& b, int me, const BlastMap& map, Pos start, int t0) {
  constexpr int kMaxDepth = 16;
  const size_t cells = b.cells.size();
  // visited[t][cell]; first action recorded per state
  std::vector<std::vector<int8_t>> first(kMaxDepth + 1, std::vector<int8_t>(cells, -1));
  std::vector<std::pair<Pos, int>> frontier{{start, t0}};
  std::vector<Action> found;
  for (int depth = 0; depth <= kMaxDepth && !frontier.empty(); ++depth) {
    for (const auto& [p, t] : frontier) {
      if (depth > 0 && !map.threatened_after(p, t)) {
        const Action a = static_cast<Action>(first[depth][b.index(p)]);
        if (std::find(found.begin(), found.end(), a) == found.end()) found.push_back(a);
      }
    }
    if (!found.empty() || depth == kMaxDepth) break;
    if (depth == 0 && !map.threatened_after(start, t0)) return {Action::stop};
    std::vector<std::pair<Pos, int>> next;
    for (const auto& [p, t] : frontier) {
      for (Action a : kActionOrder) {
        const Pos q = offset(p, a);
        if (!walkable(b, me, q) || map.lethal_at(q, t + 1)) continue;
        int8_t& slot = first[depth + 1][b.index(q)];
        if (slot >= 0) continue;
        slot = static_cast<int8_t>(depth == 0 ? static_cast<int>(a) : first[depth][b.index(p)]);
        next.emplace_back(q, t + 1);
      }
    }
    frontier = std::move(next);
  }
  std::vector<Action> ordered;
  for (Action a : kActionOrder)
    if (std::find(found.begin(), found.end(), a) != found.end()) ordered.push_back(a);
  return ordered;
}

inline bool target_in_blast(const Board& b, int me, Pos at, int radius) {
  const Agent& enemy = b.agents[1 - me];
  for (Pos p : blast_cells(b, at, radius)) {
    if (b.cell(p) == Cell::wood) return true;
    if (enemy.alive && enemy.pos == p) return true;
  }
  return false;
}

// Unit-cost Dijkstra from every cell satisfying `is_target`, over walkable
// cells that no pending blast will reach. Returns distance per cell (INT_MAX
// when unreachable).
inline std::vector<int> distance_to_targets(const Board& b, int me, const BlastMap& map,
                                            const std::function<bool(Pos)>& is_target) {
  const size_t cells = b.cells.size();
  std::vector<int> dist(cells, INT_MAX);
  using Item = std::pair<int, size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  auto usable = [&](Pos p) { return walkable(b, me, p) && (p == b.agents[me].pos || !map.threatened(p)); };
  for (size_t i = 0; i < cells; ++i) {
    const Pos p = b.pos_of(i);
    if (usable(p) && is_target(p)) {
      dist[i] = 0;
      pq.emplace(0, i);
    }
  }
  while (!pq.empty()) {
    const auto [d, i] = pq.top();
    pq.pop();
    if (d > dist[i]) continue;
    const Pos p = b.pos_of(i);
    for (Action a : kMoves) {
      const Pos q = offset(p, a);
      if (!usable(q)) continue;
      const size_t j = b.index(q);
      if (d + 1 < dist[j]) {
        dist[j] = d + 1;
        pq.emplace(d + 1, j);
      }
    }
  }
  return dist;
}

inline std::vector<Action> downhill_moves(const Board& b, Pos from, const std::vector<int>& dist) {
  std::vector<Action> out;
  const int here = dist[b.index(from)];
  if (here == INT_MAX || here == 0) return out;
  for (Action a : kMoves) {
    const Pos q = offset(from, a);
    if (b.in_bounds(q) && dist[b.index(q)] == here - 1) out.push_back(a);
  }
  return out;
}

}  // namespace detail

// Baseline opponent. Priorities:
//   1. if a pending blast will reach its cell, take the first step of the
//      shortest escape to a cell no blast reaches
//   2. bomb when wood or the enemy is inside its blast and an escape from the
//      new bomb exists
//   3. walk (Dijkstra, unit cost, avoiding blast zones) towards the nearest
//      power-up, else towards the nearest cell from which wood or the enemy is
//      in blast range
//   4. stay
// Equally good actions are listed in a fixed order and one is drawn with rng.
inline Action rulebased_opponent(const Board& b, int me, Rng& rng) {
  using namespace detail;
  const Agent& self = b.agents[me];
  if (!self.alive) return Action::stop;
  const BlastMap map(b);
  const Pos p = self.pos;

  if (map.threatened(p)) {
    std::vector<Action> moves = escape_moves(b, me, map, p, 0);
    if (moves.empty()) {
      for (Action a : kActionOrder) {
        const Pos q = offset(p, a);
        if (walkable(b, me, q) && !map.lethal_at(q, 1)) moves.push_back(a);
      }
    }
    return moves.empty() ? Action::stop : pick(moves, rng);
  }

  if (self.ammo > 0 && !b.bomb_at(p) && target_in_blast(b, me, p, self.blast_radius)) {
    Board hypothetical = b;
    hypothetical.bombs.push_back(Bomb{hypothetical.next_bomb_id, p, me, kBombTimer, self.blast_radius, Action::stop});
    const BlastMap with_bomb(hypothetical);
    // the agent stays on the bomb cell for the placement step
    if (!escape_moves(hypothetical, me, with_bomb, p, 1).empty()) return Action::bomb;
  }

  auto powerup = [&](Pos q) { return b.visible_powerup(q) != PowerUp::none; };
  std::vector<int> dist = distance_to_targets(b, me, map, powerup);
  if (dist[b.index(p)] == INT_MAX) {
    auto bombing_spot = [&](Pos q) { return target_in_blast(b, me, q, self.blast_radius); };
    dist = distance_to_targets(b, me, map, bombing_spot);
  }
  const std::vector<Action> moves = downhill_moves(b, p, dist);
  return moves.empty() ? Action::stop : pick(moves, rng);
}

enum class OpponentKind { static_agent, rule_based };

inline std::string_view to_string(OpponentKind k) { return k == OpponentKind::static_agent ? "static" : "rule"; }

inline OpponentKind parse_opponent(std::string_view s) {
  if (s == "static") return OpponentKind::static_agent;
  if (s == "rule" || s == "rule-based" || s == "rule_based") return OpponentKind::rule_based;
  throw std::invalid_argument("unknown opponent '" + std::string(s) + "'");
}

inline Action opponent_action(OpponentKind kind, const Board& b, int me, Rng& rng) {
  return kind == OpponentKind::static_agent ? static_opponent(b) : rulebased_opponent(b, me, rng);
}

}  // namespace a3ctp::bomber
