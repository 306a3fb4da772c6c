#pragma once
#include <utility>
#include <vector>

#include "cl/envsim/schedule.hpp"
#include "cl/rng.hpp"

namespace cl {

// Gaussian-cluster classification tasks: task k is a set of C class
// prototypes (rows of the context vector) with unit pairwise separation;
// samples are prototype + sigma * standard normal noise.

// C mutually orthogonal prototypes scaled to pairwise distance 1,
// flattened row-major into the context values.
std::vector<double> sample_task_synthetic(int classes, int dim, Rng& rng);

// Draws (x, local class label) for the given task context.
std::pair<std::vector<double>, int> sample_passive_synthetic(
    const ContextVector& context, int classes, int dim, double sigma,
    Rng& rng);

TaskSampler synthetic_task_sampler(int classes, int dim);

}  // namespace cl
