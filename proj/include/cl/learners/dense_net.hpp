#pragma once
#include <string>
#include <vector>

#include <json.hpp>

#include "cl/rng.hpp"

namespace cl {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
};

enum class Activation { Tanh, ReLU };

// Feedforward net with explicit analytic gradients.  Hidden layers use
// the chosen activation; the output layer is linear unless
// activate_output is set (used for shared trunks feeding output heads).
struct DenseNet {
  std::vector<int> sizes;
  Activation activation = Activation::Tanh;
  bool activate_output = false;
  std::vector<Matrix> weights;             // sizes[l] x sizes[l+1]
  std::vector<std::vector<double>> biases;

  static DenseNet init(std::vector<int> sizes, Activation activation, Rng& rng,
                       bool activate_output = false);

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;
};

struct GradientBundle {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  void add_scaled(const GradientBundle& other, double scale);
  void scale(double factor);
  bool finite() const;
};

GradientBundle zeros_like(const DenseNet& net);

struct ForwardCache {
  std::vector<Matrix> activations;  // [0]=input ... [L]=output
};

// Batch of logits (rows = samples).  Throws on an input dimension
// mismatch.
Matrix forward(const DenseNet& net, const Matrix& x_batch);
Matrix forward_cached(const DenseNet& net, const Matrix& x_batch,
                      ForwardCache& cache);

// Gradients of a scalar loss given d(loss)/d(output).
GradientBundle backward_from_delta(const DenseNet& net,
                                   const ForwardCache& cache,
                                   const Matrix& delta_out);

// Row-wise softmax restricted to the label window [mask_lo, mask_hi)
// (whole row when mask_lo < 0).
std::vector<double> softmax_row(const double* logits, int n, int mask_lo = -1,
                                int mask_hi = -1);

struct CeResult {
  double loss = 0.0;
  GradientBundle grads;
};

// Mean softmax cross-entropy with analytic gradients.  Labels must lie
// inside the (possibly masked) output window.
CeResult backward_ce(const DenseNet& net, const Matrix& x_batch,
                     const std::vector<int>& labels, int mask_lo = -1,
                     int mask_hi = -1);

// theta' = theta - lr * g; throws on non-finite gradients.
void sgd_step(DenseNet& net, const GradientBundle& grads, double lr);

// Diagonal empirical Fisher: mean over samples of the squared gradient
// of log p(y_hat | x) at the model's argmax label.
GradientBundle fisher_diagonal(const DenseNet& net, const Matrix& x_batch);

// Flat named-tensor form: name -> {shape, row-major values}.
nlohmann::json net_to_json(const DenseNet& net);
DenseNet net_from_json(const nlohmann::json& j);

}  // namespace cl
