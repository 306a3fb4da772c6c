#include "cl/envsim/csv_dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cl/errors.hpp"
#include "cl/rng.hpp"

namespace cl {

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "cannot open csv dataset: " + path);
  }
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ConfigError(ConfigError::Code::MalformedField,
                          path + ": malformed cell '" + cell + "' at line " +
                              std::to_string(line_no));
      }
    }
    if (row.size() < 2) {
      throw ConfigError(ConfigError::Code::MalformedField,
                        path + ": row " + std::to_string(line_no) +
                            " needs a label and at least one feature");
    }
    const double label_raw = row[0];
    const int label = static_cast<int>(label_raw);
    if (label < 0 || static_cast<double>(label) != label_raw) {
      throw ConfigError(ConfigError::Code::MalformedField,
                        path + ": label must be a nonnegative integer at line " +
                            std::to_string(line_no));
    }
    const int dim = static_cast<int>(row.size()) - 1;
    if (ds.feature_dim == 0) {
      ds.feature_dim = dim;
    } else if (ds.feature_dim != dim) {
      throw ConfigError(ConfigError::Code::MalformedField,
                        path + ": inconsistent feature count at line " +
                            std::to_string(line_no));
    }
    ds.labels.push_back(label);
    ds.features.emplace_back(row.begin() + 1, row.end());
    ds.num_classes = std::max(ds.num_classes, label + 1);
  }
  if (ds.labels.empty()) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      path + ": dataset is empty");
  }
  return ds;
}

std::vector<Dataset> split_by_class(const Dataset& dataset, int n_tasks,
                                    std::uint64_t seed) {
  if (n_tasks < 1) {
    throw ConfigError(ConfigError::Code::BadEnvironment, "n_tasks must be >= 1");
  }
  if (dataset.num_classes % n_tasks != 0) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "num_classes (" + std::to_string(dataset.num_classes) +
                          ") not divisible by n_tasks (" +
                          std::to_string(n_tasks) + ")");
  }
  const int per_task = dataset.num_classes / n_tasks;
  std::vector<Dataset> tasks(n_tasks);
  for (auto& t : tasks) {
    t.feature_dim = dataset.feature_dim;
    t.num_classes = dataset.num_classes;
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int task = dataset.labels[i] / per_task;
    tasks[task].features.push_back(dataset.features[i]);
    tasks[task].labels.push_back(dataset.labels[i]);
  }
  // deterministic per-task shuffle (Fisher-Yates)
  for (int k = 0; k < n_tasks; ++k) {
    Rng rng = Rng(seed).split("csv_split").split(static_cast<std::uint64_t>(k));
    auto& t = tasks[k];
    for (std::size_t i = t.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(i)));
      std::swap(t.features[i - 1], t.features[j]);
      std::swap(t.labels[i - 1], t.labels[j]);
    }
  }
  return tasks;
}

}  // namespace cl
