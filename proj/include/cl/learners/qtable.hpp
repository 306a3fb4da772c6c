#pragma once
#include <cstdint>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cl/rng.hpp"

namespace cl {

// Maps an observation vector onto a compact state key.  OneHotIndex
// reads the hot position (gridworld); Bins quantizes each dimension
// against fixed edges (cart-pole).
struct QDiscretizer {
  enum class Kind { OneHotIndex, Bins };
  Kind kind = Kind::OneHotIndex;
  std::vector<std::vector<double>> edges;

  std::uint64_t key(const std::vector<double>& x) const;
};

QDiscretizer onehot_discretizer();
// 6 bins per dimension at fixed quantile edges of the default-task
// state distribution under a random policy.
QDiscretizer cartpole_discretizer();

struct QTable {
  struct Entry {
    std::vector<double> q;
    std::vector<long long> visits;
  };

  int num_actions = 0;
  std::unordered_map<std::uint64_t, Entry> entries;

  explicit QTable(int actions = 0) : num_actions(actions) {}

  Entry& entry(std::uint64_t key);
  const Entry* find(std::uint64_t key) const;
  double value(std::uint64_t key, int action) const;  // 0 when unseen
  double max_value(std::uint64_t key) const;
  int greedy_action(std::uint64_t key) const;  // ties -> lowest action
  long long visits(std::uint64_t key, int action) const;
};

// Q(s,a) += lr * (r + gamma * max_a' Q(s',a') * (1 - done) - Q(s,a));
// increments the visit count.
void q_update(QTable& table, std::uint64_t s, int a, double r,
              std::uint64_t s_next, bool done, double lr, double gamma);

// With probability eps a uniform action, otherwise the argmax with ties
// broken toward the lowest index.
int epsilon_greedy(const std::vector<double>& values, double eps, Rng& rng);
int epsilon_greedy(const QTable& table, std::uint64_t s, double eps, Rng& rng);

// Sorted-key form so serialization is deterministic.
nlohmann::json qtable_to_json(const QTable& table);
QTable qtable_from_json(const nlohmann::json& j);

}  // namespace cl
