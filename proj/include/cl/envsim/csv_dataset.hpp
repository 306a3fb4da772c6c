#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace cl {

struct Dataset {
  int feature_dim = 0;
  int num_classes = 0;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

// Rows are `label, feat_1..feat_d` with labels 0..K-1.
Dataset load_csv_dataset(const std::string& path);

// Task i holds classes [i*K/n, (i+1)*K/n); per-task row order shuffled
// deterministically by seed.  K must be divisible by n_tasks.
std::vector<Dataset> split_by_class(const Dataset& dataset, int n_tasks,
                                    std::uint64_t seed);

}  // namespace cl
