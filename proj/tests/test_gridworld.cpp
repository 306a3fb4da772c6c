#include <doctest.h>

#include <algorithm>
#include <map>
#include <vector>

#include "cl/envsim/gridworld.hpp"
#include "cl/errors.hpp"

using namespace cl;

namespace {

// Finite-horizon dynamic program over (cell, coin mask): exhaustive
// search for the best achievable undiscounted return within the cap.
double optimal_return(const GridLayout& layout, int horizon) {
  struct Key {
    int r, c;
    std::uint32_t coins;
    bool operator<(const Key& o) const {
      return std::tie(r, c, coins) < std::tie(o.r, o.c, o.coins);
    }
  };
  // value[t][state] = best return-to-go with t steps remaining
  std::map<Key, double> value;  // t = 0: nothing achievable
  for (int t = 1; t <= horizon; ++t) {
    std::map<Key, double> next_value;
    for (int r = 0; r < layout.rows; ++r) {
      for (int c = 0; c < layout.cols; ++c) {
        if (layout.wall(r, c)) continue;
        const std::uint32_t full =
            (1u << layout.coins.size()) - 1;
        for (std::uint32_t mask = 0; mask <= full; ++mask) {
          double best = -1e100;
          static const int dr[4] = {-1, 1, 0, 0};
          static const int dc[4] = {0, 0, -1, 1};
          for (int a = 0; a < 4; ++a) {
            int nr = r + dr[a], nc = c + dc[a];
            if (layout.wall(nr, nc)) {
              nr = r;
              nc = c;
            }
            double reward = kGridStepPenalty;
            std::uint32_t nmask = mask;
            const int coin = layout.coin_index(nr, nc);
            if (coin >= 0 && !(mask >> coin & 1u)) {
              reward += kGridCoinReward;
              nmask |= 1u << coin;
            }
            double future = 0.0;
            if (nr == layout.goal_r && nc == layout.goal_c) {
              reward += kGridGoalReward;  // terminal
            } else if (t > 1) {
              auto it = value.find({nr, nc, nmask});
              future = it == value.end() ? 0.0 : it->second;
            }
            best = std::max(best, reward + future);
          }
          next_value[{r, c, mask}] = best;
        }
      }
    }
    value = std::move(next_value);
  }
  auto it = value.find({layout.start_r, layout.start_c, 0u});
  return it == value.end() ? 0.0 : it->second;
}

ContextVector layout_context(int index) {
  ContextVector ctx;
  ctx.values = {static_cast<double>(index)};
  ctx.task_index = index;
  return ctx;
}

}  // namespace

TEST_CASE("layout parsing and errors") {
  auto layout = parse_layout_text("#####\n#S.G#\n#####\n");
  CHECK(layout.rows == 3);
  CHECK(layout.cols == 5);
  CHECK(layout.start_r == 1);
  CHECK(layout.start_c == 1);
  CHECK(layout.goal_c == 3);
  CHECK_THROWS_AS(parse_layout_text("###\n#S#\n###\n"), ConfigError);  // no goal
  CHECK_THROWS_AS(parse_layout_text("##\n#S.G#\n##\n"), ConfigError);  // ragged
  CHECK_THROWS_AS(parse_layout_text("#####\n#SXG#\n#####\n"), ConfigError);
}

TEST_CASE("walls block movement and apply the step penalty") {
  const auto& layouts = builtin_layouts();
  GridState s{2, 2, 0, 0};  // next to the wall at (2,3) in layout 0
  auto out = step_gridworld(s, 3 /*right*/, layout_context(0), layouts, 100);
  CHECK(out.next.r == 2);
  CHECK(out.next.c == 2);
  CHECK(out.reward == doctest::Approx(kGridStepPenalty));
  CHECK_FALSE(out.done);
}

TEST_CASE("goal terminates with the bonus") {
  const auto& layouts = builtin_layouts();
  GridState s{2, 8, 0, 0};  // one step left of layout 0's goal at (2,9)
  auto out = step_gridworld(s, 3, layout_context(0), layouts, 100);
  CHECK(out.done);
  CHECK(out.reward == doctest::Approx(kGridGoalReward + kGridStepPenalty));
}

TEST_CASE("coins are consumed once") {
  auto layout = parse_layout_text("#####\n#SCG#\n#####\n");
  std::vector<GridLayout> layouts{layout};
  GridState s{1, 1, 0, 0};
  auto first = step_gridworld(s, 3, layout_context(0), layouts, 100);
  CHECK(first.reward ==
        doctest::Approx(kGridCoinReward + kGridStepPenalty));
  // step back and onto the coin cell again: no double collection
  auto back = step_gridworld(first.next, 2, layout_context(0), layouts, 100);
  auto again = step_gridworld(back.next, 3, layout_context(0), layouts, 100);
  CHECK(again.reward == doctest::Approx(kGridStepPenalty));
}

TEST_CASE("episode cap ends the episode") {
  const auto& layouts = builtin_layouts();
  GridState s{1, 1, 0, 99};
  auto out = step_gridworld(s, 2, layout_context(0), layouts, 100);
  CHECK(out.done);
}

TEST_CASE("invalid layout index is an error") {
  const auto& layouts = builtin_layouts();
  GridState s{1, 1, 0, 0};
  CHECK_THROWS_AS(step_gridworld(s, 0, layout_context(7), layouts, 100),
                  ConfigError);
  CHECK_THROWS_AS(step_gridworld(s, 9, layout_context(0), layouts, 100),
                  ConfigError);
}

TEST_CASE("greedy walk along layout 2 matches the exhaustive-search value") {
  const auto& layouts = builtin_layouts();
  // walk straight right from S to G in the open layout
  GridState s{layouts[2].start_r, layouts[2].start_c, 0, 0};
  double ret = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto out = step_gridworld(s, 3, layout_context(2), layouts, 100);
    ret += out.reward;
    s = out.next;
    if (out.done) break;
  }
  CHECK(ret == doctest::Approx(optimal_return(layouts[2], 100)).epsilon(1e-9));
}

TEST_CASE("exhaustive-search optima for the builtin layouts") {
  const auto& layouts = builtin_layouts();
  REQUIRE(layouts.size() == 3);
  // direct path is 8 moves; the two walled layouts detour through the
  // top lane (10 moves, and 9 to the earlier goal of layout 1)
  CHECK(optimal_return(layouts[0], 100) == doctest::Approx(10.0 - 0.10));
  CHECK(optimal_return(layouts[1], 100) == doctest::Approx(10.0 - 0.09));
  CHECK(optimal_return(layouts[2], 100) == doctest::Approx(10.0 - 0.08));
}

TEST_CASE("coin layout optimum includes the detour when it pays") {
  auto layout = parse_layout_text(
      "#######\n"
      "#..C..#\n"
      "#S...G#\n"
      "#######\n");
  std::vector<GridLayout> layouts{layout};
  // direct: 4 moves = 10 - 0.04; via coin: 6 moves = 11 - 0.06
  CHECK(optimal_return(layout, 100) == doctest::Approx(11.0 - 0.06));
}

TEST_CASE("observation is one-hot at the agent cell") {
  const auto& layouts = builtin_layouts();
  GridState s{2, 5, 0, 0};
  auto x = gridworld_observation(s, layouts[2]);
  CHECK(x.size() == static_cast<std::size_t>(layouts[2].rows * layouts[2].cols));
  double sum = 0.0;
  for (double v : x) sum += v;
  CHECK(sum == 1.0);
  CHECK(x[2 * layouts[2].cols + 5] == 1.0);
}
