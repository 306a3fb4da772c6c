#include "cl/envsim/gridworld.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cl/errors.hpp"

namespace cl {

int GridLayout::coin_index(int r, int c) const {
  for (std::size_t i = 0; i < coins.size(); ++i) {
    if (coins[i].first == r && coins[i].second == c) return static_cast<int>(i);
  }
  return -1;
}

GridLayout parse_layout(const std::vector<std::string>& lines) {
  GridLayout layout;
  layout.rows = static_cast<int>(lines.size());
  if (layout.rows == 0) {
    throw ConfigError(ConfigError::Code::BadEnvironment, "empty grid layout");
  }
  layout.cols = static_cast<int>(lines[0].size());
  bool has_start = false, has_goal = false;
  for (int r = 0; r < layout.rows; ++r) {
    if (static_cast<int>(lines[r].size()) != layout.cols) {
      throw ConfigError(ConfigError::Code::BadEnvironment,
                        "ragged grid layout at row " + std::to_string(r));
    }
    for (int c = 0; c < layout.cols; ++c) {
      switch (lines[r][c]) {
        case '#':
        case '.':
          break;
        case 'S':
          layout.start_r = r;
          layout.start_c = c;
          has_start = true;
          break;
        case 'G':
          layout.goal_r = r;
          layout.goal_c = c;
          has_goal = true;
          break;
        case 'C':
          layout.coins.emplace_back(r, c);
          break;
        default:
          throw ConfigError(ConfigError::Code::BadEnvironment,
                            std::string("unknown layout cell '") + lines[r][c] +
                                "'");
      }
    }
  }
  if (!has_start || !has_goal) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "layout needs both a start (S) and a goal (G)");
  }
  if (layout.coins.size() > 32) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "at most 32 coins per layout");
  }
  layout.cells = lines;
  return layout;
}

GridLayout parse_layout_text(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return parse_layout(lines);
}

std::vector<GridLayout> load_layout_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "layout_dir is not a directory: " + dir);
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "no *.txt layouts in " + dir);
  }
  std::vector<GridLayout> layouts;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::stringstream buffer;
    buffer << in.rdbuf();
    layouts.push_back(parse_layout_text(buffer.str()));
  }
  return layouts;
}

const std::vector<GridLayout>& builtin_layouts() {
  // Two equal-depth tunnels branching at the start; the hidden context
  // decides which tunnel end pays (the other end is plain floor).
  // Layout 0 additionally drops a coin at its tunnel mouth.  With a
  // tight episode cap, committing to the wrong tunnel forfeits the
  // episode.
  static const std::vector<GridLayout> layouts = [] {
    std::vector<GridLayout> out;
    out.push_back(parse_layout_text("#########\n"
                                    "#C.....G#\n"
                                    "#S#######\n"
                                    "#.......#\n"
                                    "#########\n"));
    out.push_back(parse_layout_text("#########\n"
                                    "#......G#\n"
                                    "#S#######\n"
                                    "#.......#\n"
                                    "#########\n"));
    out.push_back(parse_layout_text("#########\n"
                                    "#.......#\n"
                                    "#S#######\n"
                                    "#......G#\n"
                                    "#########\n"));
    return out;
  }();
  return layouts;
}

int layout_index_of(const ContextVector& context,
                    const std::vector<GridLayout>& layouts) {
  const int index = context.task_index
                        ? *context.task_index
                        : static_cast<int>(context.values.empty()
                                               ? 0.0
                                               : context.values[0]);
  if (index < 0 || index >= static_cast<int>(layouts.size())) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "layout index " + std::to_string(index) +
                          " out of range (have " +
                          std::to_string(layouts.size()) + " layouts)");
  }
  return index;
}

GridStepOut step_gridworld(const GridState& state, int action,
                           const ContextVector& context,
                           const std::vector<GridLayout>& layouts,
                           int max_episode_len) {
  const GridLayout& layout = layouts[layout_index_of(context, layouts)];
  static const int dr[kGridActions] = {-1, 1, 0, 0};
  static const int dc[kGridActions] = {0, 0, -1, 1};
  if (action < 0 || action >= kGridActions) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "gridworld action out of range");
  }
  GridStepOut out;
  out.next = state;
  const int nr = state.r + dr[action];
  const int nc = state.c + dc[action];
  if (!layout.wall(nr, nc)) {
    out.next.r = nr;
    out.next.c = nc;
  }
  out.next.steps = state.steps + 1;
  out.reward = kGridStepPenalty;
  const int coin = layout.coin_index(out.next.r, out.next.c);
  if (coin >= 0 && !(state.coins_taken >> coin & 1u)) {
    out.next.coins_taken |= 1u << coin;
    out.reward += kGridCoinReward;
  }
  if (out.next.r == layout.goal_r && out.next.c == layout.goal_c) {
    out.reward += kGridGoalReward;
    out.done = true;
  } else if (out.next.steps >= max_episode_len) {
    out.done = true;
  }
  return out;
}

std::vector<double> gridworld_observation(const GridState& state,
                                          const GridLayout& layout) {
  std::vector<double> x(static_cast<std::size_t>(layout.rows) * layout.cols,
                        0.0);
  x[static_cast<std::size_t>(state.r) * layout.cols + state.c] = 1.0;
  return x;
}

TaskSampler gridworld_task_sampler(int num_layouts) {
  TaskSampler sampler;
  sampler.continuous = false;
  sampler.sample = [num_layouts](int task, Rng&) {
    if (task >= num_layouts) {
      throw ConfigError(ConfigError::Code::BadEnvironment,
                        "more tasks than layouts (" +
                            std::to_string(num_layouts) + ")");
    }
    return std::vector<double>{static_cast<double>(task)};
  };
  return sampler;
}

}  // namespace cl
