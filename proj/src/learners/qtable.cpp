#include "cl/learners/qtable.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cl {

std::uint64_t QDiscretizer::key(const std::vector<double>& x) const {
  if (kind == Kind::OneHotIndex) {
    std::size_t hot = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
      if (x[i] > x[hot]) hot = i;
    return static_cast<std::uint64_t>(hot);
  }
  std::uint64_t key = 0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const auto& e = edges[d];
    std::uint64_t bin = 0;
    while (bin < e.size() && x[d] > e[bin]) ++bin;
    key = key * (e.size() + 1) + bin;
  }
  return key;
}

QDiscretizer onehot_discretizer() { return QDiscretizer{}; }

QDiscretizer cartpole_discretizer() {
  QDiscretizer d;
  d.kind = QDiscretizer::Kind::Bins;
  // sextile edges of (x, x_dot, theta, theta_dot) visited by a random
  // policy on the default task
  d.edges = {
      {-0.065, -0.023, 0.0, 0.023, 0.065},
      {-0.52, -0.17, 0.0, 0.17, 0.52},
      {-0.10, -0.035, 0.0, 0.035, 0.10},
      {-0.78, -0.26, 0.0, 0.26, 0.78},
  };
  return d;
}

QTable::Entry& QTable::entry(std::uint64_t key) {
  auto it = entries.find(key);
  if (it == entries.end()) {
    Entry fresh;
    fresh.q.assign(num_actions, 0.0);
    fresh.visits.assign(num_actions, 0);
    it = entries.emplace(key, std::move(fresh)).first;
  }
  return it->second;
}

const QTable::Entry* QTable::find(std::uint64_t key) const {
  auto it = entries.find(key);
  return it == entries.end() ? nullptr : &it->second;
}

double QTable::value(std::uint64_t key, int action) const {
  const Entry* e = find(key);
  return e ? e->q[action] : 0.0;
}

double QTable::max_value(std::uint64_t key) const {
  const Entry* e = find(key);
  if (!e) return 0.0;
  return *std::max_element(e->q.begin(), e->q.end());
}

int QTable::greedy_action(std::uint64_t key) const {
  const Entry* e = find(key);
  if (!e) return 0;
  int best = 0;
  for (int a = 1; a < num_actions; ++a)
    if (e->q[a] > e->q[best]) best = a;
  return best;
}

long long QTable::visits(std::uint64_t key, int action) const {
  const Entry* e = find(key);
  return e ? e->visits[action] : 0;
}

void q_update(QTable& table, std::uint64_t s, int a, double r,
              std::uint64_t s_next, bool done, double lr, double gamma) {
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma in [0,1)");
  if (lr < 0.0 || lr > 1.0) throw std::invalid_argument("lr in (0,1]");
  if (lr == 0.0) return;  // identity
  const double target =
      r + gamma * table.max_value(s_next) * (done ? 0.0 : 1.0);
  auto& e = table.entry(s);
  e.q[a] += lr * (target - e.q[a]);
  e.visits[a] += 1;
}

int epsilon_greedy(const std::vector<double>& values, double eps, Rng& rng) {
  if (eps > 0.0 && rng.uniform() < eps) {
    return rng.uniform_int(static_cast<int>(values.size()));
  }
  int best = 0;
  for (std::size_t a = 1; a < values.size(); ++a)
    if (values[a] > values[best]) best = static_cast<int>(a);
  return best;
}

int epsilon_greedy(const QTable& table, std::uint64_t s, double eps, Rng& rng) {
  const QTable::Entry* e = table.find(s);
  if (!e) {
    if (eps > 0.0 && rng.uniform() < eps) return rng.uniform_int(table.num_actions);
    return 0;
  }
  return epsilon_greedy(e->q, eps, rng);
}

nlohmann::json qtable_to_json(const QTable& table) {
  std::map<std::uint64_t, const QTable::Entry*> sorted;
  for (const auto& [key, entry] : table.entries) sorted[key] = &entry;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, entry] : sorted) {
    entries.push_back({{"key", key}, {"q", entry->q}, {"visits", entry->visits}});
  }
  return nlohmann::json{{"num_actions", table.num_actions},
                        {"entries", entries}};
}

QTable qtable_from_json(const nlohmann::json& j) {
  QTable table(j.at("num_actions").get<int>());
  for (const auto& item : j.at("entries")) {
    QTable::Entry entry;
    entry.q = item.at("q").get<std::vector<double>>();
    entry.visits = item.at("visits").get<std::vector<long long>>();
    table.entries.emplace(item.at("key").get<std::uint64_t>(), std::move(entry));
  }
  return table;
}

}  // namespace cl
