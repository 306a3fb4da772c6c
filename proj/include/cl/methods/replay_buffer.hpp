#pragma once
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "cl/rng.hpp"

namespace cl {

// Reservoir buffer: every item seen so far is retained with equal
// probability capacity/inserted.
template <typename Item>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity = 0) : capacity_(capacity) {}

  int capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  long long inserted() const { return inserted_; }
  bool empty() const { return items_.empty(); }
  const std::vector<Item>& items() const { return items_; }

  void insert(Item item, Rng& rng) {
    if (capacity_ <= 0) {
      throw std::invalid_argument("replay insert requires capacity > 0");
    }
    if (static_cast<int>(items_.size()) < capacity_) {
      items_.push_back(std::move(item));
    } else {
      const long long j = static_cast<long long>(
          rng.next_u64() % static_cast<std::uint64_t>(inserted_ + 1));
      if (j < capacity_) items_[static_cast<std::size_t>(j)] = std::move(item);
    }
    ++inserted_;
  }

  // Uniform without replacement; n must not exceed the current size.
  std::vector<Item> sample(int n, Rng& rng) const {
    if (items_.empty()) {
      throw std::out_of_range("sampling from an empty replay buffer");
    }
    if (n < 0 || static_cast<std::size_t>(n) > items_.size()) {
      throw std::out_of_range("replay sample larger than buffer");
    }
    std::vector<std::size_t> index(items_.size());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
    std::vector<Item> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
      const std::size_t pick =
          k + static_cast<std::size_t>(
                  rng.uniform_int(static_cast<int>(index.size() - k)));
      std::swap(index[k], index[pick]);
      out.push_back(items_[index[k]]);
    }
    return out;
  }

  void assign(std::vector<Item> items, long long inserted) {
    items_ = std::move(items);
    inserted_ = inserted;
  }

 private:
  int capacity_ = 0;
  long long inserted_ = 0;
  std::vector<Item> items_;
};

}  // namespace cl
