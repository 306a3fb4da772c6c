#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "cl/envsim/schedule.hpp"

namespace cl {

// Deterministic gridworld over hand-authored ASCII layouts:
// '#' wall, '.' floor, 'C' coin, 'G' goal, 'S' start.

struct GridLayout {
  int rows = 0;
  int cols = 0;
  std::vector<std::string> cells;
  int start_r = 0, start_c = 0;
  int goal_r = 0, goal_c = 0;
  std::vector<std::pair<int, int>> coins;

  bool wall(int r, int c) const {
    if (r < 0 || r >= rows || c < 0 || c >= cols) return true;
    return cells[r][c] == '#';
  }
  int coin_index(int r, int c) const;
};

GridLayout parse_layout(const std::vector<std::string>& lines);
GridLayout parse_layout_text(const std::string& text);

// *.txt files in the directory, sorted by filename.
std::vector<GridLayout> load_layout_dir(const std::string& dir);

// Default layout set: three 4x11 rooms sharing an always-open top lane.
// Layouts 0 and 1 wall off part of the bottom lane (goal at the right
// end, layout 1 one cell earlier); layout 2 leaves it open.
const std::vector<GridLayout>& builtin_layouts();

struct GridState {
  int r = 0, c = 0;
  std::uint32_t coins_taken = 0;  // bitmask over layout.coins
  int steps = 0;
};

inline constexpr int kGridActions = 4;  // up, down, left, right
inline constexpr double kGridStepPenalty = -0.01;
inline constexpr double kGridCoinReward = 1.0;
inline constexpr double kGridGoalReward = 10.0;

struct GridStepOut {
  GridState next;
  double reward = 0.0;
  bool done = false;
};

// Movement blocked by walls; +1 per coin (consumed), +10 at the goal
// (terminal), -0.01 per step; episode capped at max_episode_len steps.
// The context selects the layout; an invalid index is an error.
GridStepOut step_gridworld(const GridState& state, int action,
                           const ContextVector& context,
                           const std::vector<GridLayout>& layouts,
                           int max_episode_len);

int layout_index_of(const ContextVector& context,
                    const std::vector<GridLayout>& layouts);

// One-hot agent position over the full grid.
std::vector<double> gridworld_observation(const GridState& state,
                                          const GridLayout& layout);

TaskSampler gridworld_task_sampler(int num_layouts);

}  // namespace cl
