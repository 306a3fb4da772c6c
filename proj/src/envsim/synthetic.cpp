#include "cl/envsim/synthetic.hpp"

#include <cmath>

#include "cl/errors.hpp"

namespace cl {

std::vector<double> sample_task_synthetic(int classes, int dim, Rng& rng) {
  if (dim < classes) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "synthetic family needs feature_dim >= classes_per_task");
  }
  // Gram-Schmidt on gaussian draws, then scale so that pairwise
  // prototype distance is exactly 1.
  std::vector<std::vector<double>> protos(classes, std::vector<double>(dim));
  for (int c = 0; c < classes; ++c) {
    for (int d = 0; d < dim; ++d) protos[c][d] = rng.normal();
    for (int prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (int d = 0; d < dim; ++d) dot += protos[c][d] * protos[prev][d];
      for (int d = 0; d < dim; ++d) protos[c][d] -= dot * protos[prev][d];
    }
    double norm = 0.0;
    for (int d = 0; d < dim; ++d) norm += protos[c][d] * protos[c][d];
    norm = std::sqrt(norm);
    if (norm < 1e-9) {
      // degenerate draw; retry with fresh noise
      --c;
      continue;
    }
    for (int d = 0; d < dim; ++d) protos[c][d] /= norm;
  }
  const double scale = 1.0 / std::sqrt(2.0);
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(classes) * dim);
  for (const auto& p : protos) {
    for (double v : p) flat.push_back(v * scale);
  }
  return flat;
}

std::pair<std::vector<double>, int> sample_passive_synthetic(
    const ContextVector& context, int classes, int dim, double sigma,
    Rng& rng) {
  const int cls = rng.uniform_int(classes);
  std::vector<double> x(dim);
  for (int d = 0; d < dim; ++d) {
    x[d] = context.values[static_cast<std::size_t>(cls) * dim + d] +
           sigma * rng.normal();
  }
  return {std::move(x), cls};
}

TaskSampler synthetic_task_sampler(int classes, int dim) {
  TaskSampler sampler;
  sampler.continuous = true;
  sampler.sample = [classes, dim](int, Rng& rng) {
    return sample_task_synthetic(classes, dim, rng);
  };
  return sampler;
}

}  // namespace cl
