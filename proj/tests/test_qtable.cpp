#include <doctest.h>

#include <cmath>

#include "cl/learners/qtable.hpp"

using namespace cl;

namespace {

// Exact value iteration on an enumerable MDP.
struct TinyMdp {
  int states = 0, actions = 0;
  std::vector<std::vector<int>> next;      // [s][a]
  std::vector<std::vector<double>> reward;  // [s][a]

  std::vector<std::vector<double>> value_iteration(double gamma) const {
    std::vector<std::vector<double>> q(states, std::vector<double>(actions, 0));
    for (int sweep = 0; sweep < 10000; ++sweep) {
      double delta = 0.0;
      for (int s = 0; s < states; ++s) {
        for (int a = 0; a < actions; ++a) {
          double best_next = q[next[s][a]][0];
          for (int a2 = 1; a2 < actions; ++a2)
            best_next = std::max(best_next, q[next[s][a]][a2]);
          const double target = reward[s][a] + gamma * best_next;
          delta = std::max(delta, std::abs(target - q[s][a]));
          q[s][a] = target;
        }
      }
      if (delta < 1e-12) break;
    }
    return q;
  }
};

TinyMdp random_mdp(int states, int actions, std::uint64_t seed) {
  TinyMdp mdp;
  mdp.states = states;
  mdp.actions = actions;
  Rng rng(seed);
  mdp.next.assign(states, std::vector<int>(actions));
  mdp.reward.assign(states, std::vector<double>(actions));
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < actions; ++a) {
      mdp.next[s][a] = rng.uniform_int(states);
      mdp.reward[s][a] = rng.uniform(-1.0, 1.0);
    }
  }
  return mdp;
}

}  // namespace

TEST_CASE("q_update closed forms") {
  QTable table(2);
  // terminal target with lr 1
  q_update(table, 5, 0, 1.0, 9, true, 1.0, 0.9);
  CHECK(table.value(5, 0) == doctest::Approx(1.0));
  CHECK(table.visits(5, 0) == 1);
  // lr 0 leaves the table unchanged
  QTable before = table;
  q_update(table, 5, 0, 100.0, 9, false, 0.0, 0.9);
  CHECK(table.value(5, 0) == before.value(5, 0));
  CHECK(table.visits(5, 0) == before.visits(5, 0));
  // bootstrap uses the max over the next state
  QTable t2(2);
  t2.entry(7).q = {0.2, 0.8};
  q_update(t2, 3, 1, 0.5, 7, false, 0.5, 0.9);
  CHECK(t2.value(3, 1) == doctest::Approx(0.5 * (0.5 + 0.9 * 0.8)));
  CHECK_THROWS_AS(q_update(t2, 0, 0, 0, 0, false, 1.5, 0.9),
                  std::invalid_argument);
  CHECK_THROWS_AS(q_update(t2, 0, 0, 0, 0, false, 0.5, 1.0),
                  std::invalid_argument);
}

TEST_CASE("q-learning converges to value iteration on a 2-state mdp") {
  TinyMdp mdp;
  mdp.states = 2;
  mdp.actions = 2;
  mdp.next = {{0, 1}, {0, 1}};
  mdp.reward = {{0.0, 1.0}, {0.5, -0.2}};
  auto expected = mdp.value_iteration(0.9);
  QTable table(2);
  Rng rng(77);
  int s = 0;
  for (int step = 0; step < 10000; ++step) {
    const int a = rng.uniform_int(2);  // persistent exploration
    const int s2 = mdp.next[s][a];
    q_update(table, s, a, mdp.reward[s][a], s2, false, 0.5, 0.9);
    s = s2;
  }
  for (int state = 0; state < 2; ++state) {
    for (int a = 0; a < 2; ++a) {
      CHECK(table.value(state, a) ==
            doctest::Approx(expected[state][a]).epsilon(1e-3));
    }
  }
}

TEST_CASE("q-learning matches value iteration on a 20-state mdp") {
  TinyMdp mdp = random_mdp(20, 3, 123);
  auto expected = mdp.value_iteration(0.95);
  QTable table(3);
  Rng rng(88);
  // persistent exploration: every (s, a) pair keeps being updated
  for (int step = 0; step < 400000; ++step) {
    const int s = rng.uniform_int(20);
    const int a = rng.uniform_int(3);
    q_update(table, s, a, mdp.reward[s][a], mdp.next[s][a], false, 1.0, 0.95);
  }
  double worst = 0.0;
  for (int state = 0; state < 20; ++state) {
    for (int a = 0; a < 3; ++a) {
      worst = std::max(worst,
                       std::abs(table.value(state, a) - expected[state][a]));
    }
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("epsilon greedy behavior") {
  std::vector<double> values{0.1, 0.9, 0.3};
  Rng rng(5);
  // greedy limit: always the unique argmax
  for (int i = 0; i < 100; ++i) CHECK(epsilon_greedy(values, 0.0, rng) == 1);
  // tie between actions 1 and 3 resolves to the lowest index
  std::vector<double> tie{0.0, 0.7, 0.2, 0.7};
  CHECK(epsilon_greedy(tie, 0.0, rng) == 1);
  // eps = 1: uniform within 3 sigma over 10^4 draws
  std::vector<int> counts(3, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[epsilon_greedy(values, 1.0, rng)];
  const double expected = n / 3.0;
  const double sigma = std::sqrt(n * (1.0 / 3.0) * (2.0 / 3.0));
  for (int c : counts) CHECK(std::abs(c - expected) < 3 * sigma);
}

TEST_CASE("unseen states act as zero entries") {
  QTable table(4);
  CHECK(table.value(42, 2) == 0.0);
  CHECK(table.max_value(42) == 0.0);
  CHECK(table.greedy_action(42) == 0);
}

TEST_CASE("bin discretizer packs distinct cells distinctly") {
  QDiscretizer d = cartpole_discretizer();
  CHECK(d.edges.size() == 4);
  for (const auto& e : d.edges) CHECK(e.size() == 5);  // 6 bins per dim
  const auto k1 = d.key({0.0, 0.0, 0.0, 0.0});
  const auto k2 = d.key({0.0, 0.0, 0.12, 0.0});
  const auto k3 = d.key({-2.0, 0.0, 0.0, 0.0});
  CHECK(k1 != k2);
  CHECK(k1 != k3);
  CHECK(d.key({0.0, 0.0, 0.0, 0.0}) == k1);
}

TEST_CASE("one-hot discretizer reads the hot index") {
  QDiscretizer d = onehot_discretizer();
  CHECK(d.key({0, 0, 1, 0}) == 2);
  CHECK(d.key({1, 0, 0, 0}) == 0);
}

TEST_CASE("qtable json round trip") {
  QTable table(3);
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    q_update(table, rng.uniform_int(6), rng.uniform_int(3), rng.normal(),
             rng.uniform_int(6), rng.uniform() < 0.2, 0.5, 0.9);
  }
  QTable back = qtable_from_json(qtable_to_json(table));
  CHECK(back.num_actions == table.num_actions);
  CHECK(back.entries.size() == table.entries.size());
  for (const auto& [key, entry] : table.entries) {
    const QTable::Entry* b = back.find(key);
    REQUIRE(b != nullptr);
    CHECK(b->q == entry.q);
    CHECK(b->visits == entry.visits);
  }
}
