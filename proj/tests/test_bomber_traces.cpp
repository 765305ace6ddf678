// Scripted MiniBomber games checked against hand-traced board text.
#include <gtest/gtest.h>

#include <string>

#include "a3ctp/bomber.hpp"

using namespace a3ctp;
using namespace a3ctp::bomber;

namespace {

Action act(char c) {
  switch (c) {
    case 's': return Action::stop;
    case 'u': return Action::up;
    case 'd': return Action::down;
    case 'l': return Action::left;
    case 'r': return Action::right;
    case 'b': return Action::bomb;
  }
  throw std::invalid_argument("bad action char");
}

// Plays both scripts; returns the last tick.
TickResult play(Board& b, const std::string& a0, const std::string& a1) {
  EXPECT_EQ(a0.size(), a1.size());
  TickResult last;
  for (size_t i = 0; i < a0.size(); ++i) last = step(b, {act(a0[i]), act(a1[i])});
  return last;
}

std::string rep(char c, size_t n) { return std::string(n, c); }

const char* kEmpty5 =
    "board size 5 step 0 max_steps 800 next_bomb 0\n"
    ".....\n.....\n.....\n.....\n.....\n"
    "agent 0 pos 0,0 alive 1 ammo 1 radius 2 kick 0\n"
    "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n";

std::string with_agents(const std::string& a0, const std::string& a1, const std::string& grid = "") {
  std::string g = grid.empty() ? ".....\n.....\n.....\n.....\n.....\n" : grid;
  return "board size 5 step 0 max_steps 800 next_bomb 0\n" + g + "agent 0 pos " + a0 +
         " alive 1 ammo 1 radius 2 kick 0\nagent 1 pos " + a1 + " alive 1 ammo 1 radius 2 kick 0\n";
}

}  // namespace

TEST(BomberTrace, TextRoundTrip) {
  const Board b = from_text(kEmpty5);
  EXPECT_EQ(to_text(b), kEmpty5);
  EXPECT_EQ(from_text(to_text(b)), b);
}

// placed during step 1, explodes during step 11, flames seen after 11 and 12
TEST(BomberTrace, BombTimingAndFlameExpiry) {
  Board b = from_text(kEmpty5);
  play(b, "bddr" + rep('s', 6), rep('s', 10));
  EXPECT_EQ(to_text(b),
            "board size 5 step 10 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 2,1 alive 1 ammo 0 radius 2 kick 0\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n"
            "bomb 0 pos 0,0 owner 0 timer 1 radius 2 moving none\n");
  TickResult t = play(b, "s", "s");
  EXPECT_FALSE(t.terminal);
  EXPECT_EQ(t.rewards[0], 0.0);
  EXPECT_EQ(to_text(b),
            "board size 5 step 11 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 2,1 alive 1 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n"
            "flame pos 0,0 life 2 owner 0\n"
            "flame pos 0,1 life 2 owner 0\n"
            "flame pos 0,2 life 2 owner 0\n"
            "flame pos 1,0 life 2 owner 0\n"
            "flame pos 2,0 life 2 owner 0\n");
  play(b, "s", "s");
  EXPECT_EQ(to_text(b),
            "board size 5 step 12 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 2,1 alive 1 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n"
            "flame pos 0,0 life 1 owner 0\n"
            "flame pos 0,1 life 1 owner 0\n"
            "flame pos 0,2 life 1 owner 0\n"
            "flame pos 1,0 life 1 owner 0\n"
            "flame pos 2,0 life 1 owner 0\n");
  play(b, "s", "s");
  EXPECT_EQ(to_text(b),
            "board size 5 step 13 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 2,1 alive 1 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n");
}

TEST(BomberTrace, WalkingIntoLingeringFlameKills) {
  Board b = from_text(kEmpty5);
  play(b, "bddr" + rep('s', 7), rep('s', 11));
  const TickResult t = play(b, "l", "s");
  EXPECT_TRUE(t.terminal);
  EXPECT_EQ(t.rewards, (std::array<double, 2>{-1.0, 1.0}));
  EXPECT_EQ(to_text(b),
            "board size 5 step 12 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 2,0 alive 0 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n"
            "flame pos 0,0 life 1 owner 0\n"
            "flame pos 0,1 life 1 owner 0\n"
            "flame pos 0,2 life 1 owner 0\n"
            "flame pos 1,0 life 1 owner 0\n"
            "flame pos 2,0 life 1 owner 0\n"
            "death agent 0 killer 0\n");
  EXPECT_EQ(classify_outcome(b, 0), (EpisodeOutcome{GameResult::loss, OutcomeCause::our_suicide}));
}

TEST(BomberTrace, EnemyKilledByOurBomb) {
  Board b = from_text(with_agents("0,0", "0,2"));
  const TickResult t = play(b, "bddr" + rep('s', 7), rep('s', 11));
  EXPECT_TRUE(t.terminal);
  EXPECT_EQ(t.rewards, (std::array<double, 2>{1.0, -1.0}));
  EXPECT_EQ(to_text(b),
            "board size 5 step 11 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 2,1 alive 1 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 0,2 alive 0 ammo 1 radius 2 kick 0\n"
            "flame pos 0,0 life 2 owner 0\n"
            "flame pos 0,1 life 2 owner 0\n"
            "flame pos 0,2 life 2 owner 0\n"
            "flame pos 1,0 life 2 owner 0\n"
            "flame pos 2,0 life 2 owner 0\n"
            "death agent 1 killer 0\n");
  EXPECT_EQ(classify_outcome(b, 0), (EpisodeOutcome{GameResult::win, OutcomeCause::enemy_killed_by_our_bomb}));
  EXPECT_EQ(classify_outcome(b, 1), (EpisodeOutcome{GameResult::loss, OutcomeCause::killed_by_enemy_bomb}));
  EXPECT_THROW(step(b, {Action::stop, Action::stop}), EnvironmentError);
}

TEST(BomberTrace, OurSuicide) {
  Board b = from_text(kEmpty5);
  const TickResult t = play(b, "b" + rep('s', 10), rep('s', 11));
  EXPECT_EQ(t.rewards, (std::array<double, 2>{-1.0, 1.0}));
  EXPECT_EQ(to_text(b),
            "board size 5 step 11 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 0,0 alive 0 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n"
            "flame pos 0,0 life 2 owner 0\n"
            "flame pos 0,1 life 2 owner 0\n"
            "flame pos 0,2 life 2 owner 0\n"
            "flame pos 1,0 life 2 owner 0\n"
            "flame pos 2,0 life 2 owner 0\n"
            "death agent 0 killer 0\n");
  EXPECT_EQ(classify_outcome(b, 0), (EpisodeOutcome{GameResult::loss, OutcomeCause::our_suicide}));
  EXPECT_EQ(classify_outcome(b, 1), (EpisodeOutcome{GameResult::win, OutcomeCause::opponent_suicide}));
}

TEST(BomberTrace, OpponentSuicideIsFalsePositiveWin) {
  Board b = from_text(kEmpty5);
  const TickResult t = play(b, rep('s', 11), "b" + rep('s', 10));
  EXPECT_EQ(t.rewards, (std::array<double, 2>{1.0, -1.0}));
  EXPECT_EQ(to_text(b),
            "board size 5 step 11 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 0,0 alive 1 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 4,4 alive 0 ammo 1 radius 2 kick 0\n"
            "flame pos 2,4 life 2 owner 1\n"
            "flame pos 3,4 life 2 owner 1\n"
            "flame pos 4,2 life 2 owner 1\n"
            "flame pos 4,3 life 2 owner 1\n"
            "flame pos 4,4 life 2 owner 1\n"
            "death agent 1 killer 1\n");
  EXPECT_EQ(classify_outcome(b, 0), (EpisodeOutcome{GameResult::win, OutcomeCause::opponent_suicide}));
}

TEST(BomberTrace, KilledByEnemyBomb) {
  Board b = from_text(with_agents("0,0", "0,2"));
  const TickResult t = play(b, rep('s', 11), "bddr" + rep('s', 7));
  EXPECT_EQ(t.rewards, (std::array<double, 2>{-1.0, 1.0}));
  EXPECT_EQ(to_text(b),
            "board size 5 step 11 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 0,0 alive 0 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 2,3 alive 1 ammo 1 radius 2 kick 0\n"
            "flame pos 0,0 life 2 owner 1\n"
            "flame pos 0,1 life 2 owner 1\n"
            "flame pos 0,2 life 2 owner 1\n"
            "flame pos 0,3 life 2 owner 1\n"
            "flame pos 0,4 life 2 owner 1\n"
            "flame pos 1,2 life 2 owner 1\n"
            "flame pos 2,2 life 2 owner 1\n"
            "death agent 0 killer 1\n");
  EXPECT_EQ(classify_outcome(b, 0), (EpisodeOutcome{GameResult::loss, OutcomeCause::killed_by_enemy_bomb}));
}

TEST(BomberTrace, ChainDetonation) {
  Board b = from_text(with_agents("0,0", "0,3"));
  play(b, "bddd" + rep('s', 6), "lbddd" + rep('s', 5));
  EXPECT_EQ(to_text(b),
            "board size 5 step 10 max_steps 800 next_bomb 2\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 3,0 alive 1 ammo 0 radius 2 kick 0\n"
            "agent 1 pos 3,2 alive 1 ammo 0 radius 2 kick 0\n"
            "bomb 0 pos 0,0 owner 0 timer 1 radius 2 moving none\n"
            "bomb 1 pos 0,2 owner 1 timer 2 radius 2 moving none\n");
  const TickResult t = play(b, "s", "s");
  EXPECT_FALSE(t.terminal);
  EXPECT_EQ(to_text(b),
            "board size 5 step 11 max_steps 800 next_bomb 2\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 3,0 alive 1 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 3,2 alive 1 ammo 1 radius 2 kick 0\n"
            "flame pos 0,0 life 2 owner 0\n"
            "flame pos 0,1 life 2 owner 0\n"
            "flame pos 0,2 life 2 owner 0\n"
            "flame pos 0,3 life 2 owner 1\n"
            "flame pos 0,4 life 2 owner 1\n"
            "flame pos 1,0 life 2 owner 0\n"
            "flame pos 1,2 life 2 owner 1\n"
            "flame pos 2,0 life 2 owner 0\n"
            "flame pos 2,2 life 2 owner 1\n");
}

TEST(BomberTrace, WoodRevealsPowerUpWhichSurvivesTheFlame) {
  Board b = from_text(
      "board size 5 step 0 max_steps 800 next_bomb 0\n"
      "..+..\n.....\n+....\n.....\n.....\n"
      "agent 0 pos 0,0 alive 1 ammo 1 radius 2 kick 0\n"
      "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n"
      "hidden pos 0,2 kick\n");
  EXPECT_EQ(encode_observation(b)[ch_pu_kick * 25 + 2], 0.0);  // still hidden
  play(b, "bdr" + rep('s', 8), rep('s', 11));
  EXPECT_EQ(to_text(b),
            "board size 5 step 11 max_steps 800 next_bomb 1\n"
            "..k..\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 1,1 alive 1 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n"
            "flame pos 0,0 life 2 owner 0\n"
            "flame pos 0,1 life 2 owner 0\n"
            "flame pos 0,2 life 2 owner 0\n"
            "flame pos 1,0 life 2 owner 0\n"
            "flame pos 2,0 life 2 owner 0\n");
  EXPECT_EQ(encode_observation(b)[ch_pu_kick * 25 + 2], 1.0);
  play(b, "ssur", "ssss");
  EXPECT_EQ(to_text(b),
            "board size 5 step 15 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 0,2 alive 1 ammo 1 radius 2 kick 1\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n");
}

TEST(BomberTrace, MovementConflicts) {
  Board b = from_text(with_agents("2,1", "2,3", ".....\n....+\n.....\n.#...\n.....\n"));
  const std::string a0 = "rrrrruuus", a1 = "lslsdurru";
  // hand-traced positions after each step
  const std::vector<std::pair<Pos, Pos>> expected = {
      {{2, 1}, {2, 3}},  // both into (2,2): bounce
      {{2, 2}, {2, 3}},  // free cell
      {{2, 2}, {2, 3}},  // swap: bounce
      {{2, 2}, {2, 3}},  // into a standing agent: blocked
      {{2, 3}, {3, 3}},  // following a leaving agent
      {{1, 3}, {2, 3}},  // into the cell just vacated
      {{0, 3}, {2, 4}},
      {{0, 3}, {2, 4}},  // both off the board: stay
      {{0, 3}, {2, 4}},  // agent 1 into wood: stay
  };
  for (size_t i = 0; i < a0.size(); ++i) {
    step(b, {act(a0[i]), act(a1[i])});
    EXPECT_EQ(b.agents[0].pos, expected[i].first) << "step " << i + 1;
    EXPECT_EQ(b.agents[1].pos, expected[i].second) << "step " << i + 1;
  }
  Board c = from_text(with_agents("2,1", "0,0", ".....\n....+\n.....\n.#...\n.....\n"));
  step(c, {Action::down, Action::stop});
  EXPECT_EQ(c.agents[0].pos, (Pos{2, 1})) << "rigid blocks";
}

TEST(BomberTrace, KickedBombSlidesUntilObstructed) {
  Board b = from_text(
      "board size 5 step 0 max_steps 800 next_bomb 1\n"
      ".....\n.....\n.....\n.....\n.....\n"
      "agent 0 pos 2,0 alive 1 ammo 1 radius 2 kick 1\n"
      "agent 1 pos 4,0 alive 1 ammo 0 radius 2 kick 0\n"
      "bomb 0 pos 2,1 owner 1 timer 5 radius 2 moving none\n");
  const char* head =
      ".....\n.....\n.....\n.....\n.....\n"
      "agent 0 pos 2,1 alive 1 ammo 1 radius 2 kick 1\n";
  play(b, "r", "s");
  EXPECT_EQ(to_text(b), std::string("board size 5 step 1 max_steps 800 next_bomb 1\n") + head +
                            "agent 1 pos 4,0 alive 1 ammo 0 radius 2 kick 0\n"
                            "bomb 0 pos 2,2 owner 1 timer 4 radius 2 moving right\n");
  play(b, "s", "s");
  EXPECT_EQ(to_text(b), std::string("board size 5 step 2 max_steps 800 next_bomb 1\n") + head +
                            "agent 1 pos 4,0 alive 1 ammo 0 radius 2 kick 0\n"
                            "bomb 0 pos 2,3 owner 1 timer 3 radius 2 moving right\n");
  play(b, "ss", "ss");
  EXPECT_EQ(to_text(b), std::string("board size 5 step 4 max_steps 800 next_bomb 1\n") + head +
                            "agent 1 pos 4,0 alive 1 ammo 0 radius 2 kick 0\n"
                            "bomb 0 pos 2,4 owner 1 timer 1 radius 2 moving none\n");
  play(b, "s", "s");
  EXPECT_EQ(to_text(b), std::string("board size 5 step 5 max_steps 800 next_bomb 1\n") + head +
                            "agent 1 pos 4,0 alive 1 ammo 1 radius 2 kick 0\n"
                            "flame pos 0,4 life 2 owner 1\n"
                            "flame pos 1,4 life 2 owner 1\n"
                            "flame pos 2,2 life 2 owner 1\n"
                            "flame pos 2,3 life 2 owner 1\n"
                            "flame pos 2,4 life 2 owner 1\n"
                            "flame pos 3,4 life 2 owner 1\n"
                            "flame pos 4,4 life 2 owner 1\n");
}

TEST(BomberTrace, WithoutKickABombBlocks) {
  Board b = from_text(
      "board size 5 step 0 max_steps 800 next_bomb 1\n"
      ".....\n.....\n.....\n.....\n.....\n"
      "agent 0 pos 2,0 alive 1 ammo 1 radius 2 kick 0\n"
      "agent 1 pos 4,0 alive 1 ammo 0 radius 2 kick 0\n"
      "bomb 0 pos 2,1 owner 1 timer 5 radius 2 moving none\n");
  play(b, "r", "s");
  EXPECT_EQ(b.agents[0].pos, (Pos{2, 0}));
  EXPECT_EQ(b.bombs[0].pos, (Pos{2, 1}));
}

TEST(BomberTrace, PowerUpPickupAndBombRadius) {
  Board b = from_text(
      "board size 5 step 0 max_steps 800 next_bomb 0\n"
      ".ar..\n.....\n.....\n.....\n.....\n"
      "agent 0 pos 0,0 alive 1 ammo 1 radius 2 kick 0\n"
      "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n");
  play(b, "rrblbb", "ssssss");
  EXPECT_EQ(to_text(b),
            "board size 5 step 6 max_steps 800 next_bomb 2\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 0,1 alive 1 ammo 0 radius 3 kick 0\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n"
            "bomb 0 pos 0,2 owner 0 timer 7 radius 3 moving none\n"
            "bomb 1 pos 0,1 owner 0 timer 9 radius 3 moving none\n");
}

TEST(BomberTrace, SimultaneousDeathsFromOurBomb) {
  Board b = from_text(with_agents("0,0", "0,1"));
  const TickResult t = play(b, "b" + rep('s', 10), rep('s', 11));
  EXPECT_EQ(t.rewards, (std::array<double, 2>{-1.0, -1.0}));
  EXPECT_EQ(to_text(b),
            "board size 5 step 11 max_steps 800 next_bomb 1\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 0,0 alive 0 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 0,1 alive 0 ammo 1 radius 2 kick 0\n"
            "flame pos 0,0 life 2 owner 0\n"
            "flame pos 0,1 life 2 owner 0\n"
            "flame pos 0,2 life 2 owner 0\n"
            "flame pos 1,0 life 2 owner 0\n"
            "flame pos 2,0 life 2 owner 0\n"
            "death agent 0 killer 0\n"
            "death agent 1 killer 0\n");
  EXPECT_EQ(classify_outcome(b, 0), (EpisodeOutcome{GameResult::loss, OutcomeCause::our_suicide}));
  EXPECT_EQ(classify_outcome(b, 1), (EpisodeOutcome{GameResult::loss, OutcomeCause::killed_by_enemy_bomb}));
}

TEST(BomberTrace, TieAtStepCap) {
  Board b = from_text(kEmpty5);
  TickResult t;
  for (int i = 0; i < 799; ++i) {
    t = step(b, {Action::stop, Action::stop});
    ASSERT_FALSE(t.terminal) << i;
    ASSERT_EQ(t.rewards[0], 0.0);
  }
  t = step(b, {Action::stop, Action::stop});
  EXPECT_TRUE(t.terminal);
  EXPECT_EQ(t.rewards, (std::array<double, 2>{-1.0, -1.0}));
  EXPECT_EQ(to_text(b),
            "board size 5 step 800 max_steps 800 next_bomb 0\n"
            ".....\n.....\n.....\n.....\n.....\n"
            "agent 0 pos 0,0 alive 1 ammo 1 radius 2 kick 0\n"
            "agent 1 pos 4,4 alive 1 ammo 1 radius 2 kick 0\n");
  EXPECT_EQ(classify_outcome(b, 0), (EpisodeOutcome{GameResult::tie, OutcomeCause::timeout}));
  EXPECT_THROW(step(b, {Action::stop, Action::stop}), EnvironmentError);
}
