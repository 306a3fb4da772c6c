#include "cl/learners/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cl/errors.hpp"
#include "cl/learners/kernels.hpp"

namespace cl {

DenseNet DenseNet::init(std::vector<int> sizes, Activation activation,
                        Rng& rng, bool activate_output) {
  if (sizes.size() < 2) {
    throw std::invalid_argument("DenseNet needs at least input and output sizes");
  }
  DenseNet net;
  net.sizes = std::move(sizes);
  net.activation = activation;
  net.activate_output = activate_output;
  for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    const int in = net.sizes[l];
    const int out = net.sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(in, out);
    for (double& v : w.v) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    std::vector<double> b(out);
    for (double& v : b) v = rng.uniform(-bound, bound);
    net.biases.push_back(std::move(b));
  }
  return net;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.v.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

void GradientBundle::add_scaled(const GradientBundle& other, double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    kernels::axpy(scale, other.weights[l].data(), weights[l].data(),
                  weights[l].v.size());
    kernels::axpy(scale, other.biases[l].data(), biases[l].data(),
                  biases[l].size());
  }
}

void GradientBundle::scale(double factor) {
  for (auto& w : weights)
    for (double& v : w.v) v *= factor;
  for (auto& b : biases)
    for (double& v : b) v *= factor;
}

bool GradientBundle::finite() const {
  for (const auto& w : weights)
    for (double v : w.v)
      if (!std::isfinite(v)) return false;
  for (const auto& b : biases)
    for (double v : b)
      if (!std::isfinite(v)) return false;
  return true;
}

GradientBundle zeros_like(const DenseNet& net) {
  GradientBundle g;
  for (const auto& w : net.weights) g.weights.emplace_back(w.rows, w.cols);
  for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

namespace {

void apply_activation(const DenseNet& net, Matrix& a) {
  if (net.activation == Activation::Tanh) {
    kernels::tanh_inplace(a.data(), a.v.size());
  } else {
    kernels::relu_inplace(a.data(), a.v.size());
  }
}

bool layer_activated(const DenseNet& net, int layer) {
  return layer + 1 < net.num_layers() || net.activate_output;
}

}  // namespace

Matrix forward_cached(const DenseNet& net, const Matrix& x_batch,
                      ForwardCache& cache) {
  if (x_batch.cols != net.input_dim()) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  cache.activations.clear();
  cache.activations.push_back(x_batch);
  for (int l = 0; l < net.num_layers(); ++l) {
    const Matrix& a = cache.activations.back();
    Matrix z(a.rows, net.sizes[l + 1]);
    kernels::dense_forward(a.data(), a.rows, net.sizes[l], net.weights[l].data(),
                           net.biases[l].data(), net.sizes[l + 1], z.data());
    if (layer_activated(net, l)) apply_activation(net, z);
    cache.activations.push_back(std::move(z));
  }
  return cache.activations.back();
}

Matrix forward(const DenseNet& net, const Matrix& x_batch) {
  ForwardCache cache;
  return forward_cached(net, x_batch, cache);
}

GradientBundle backward_from_delta(const DenseNet& net,
                                   const ForwardCache& cache,
                                   const Matrix& delta_out) {
  GradientBundle grads = zeros_like(net);
  Matrix delta = delta_out;
  for (int l = net.num_layers() - 1; l >= 0; --l) {
    const Matrix& a_in = cache.activations[l];
    const Matrix& a_out = cache.activations[l + 1];
    if (layer_activated(net, l)) {
      // tanh' = 1 - a^2, relu' = [a > 0]; both in terms of the output
      if (net.activation == Activation::Tanh) {
        for (std::size_t i = 0; i < delta.v.size(); ++i)
          delta.v[i] *= 1.0 - a_out.v[i] * a_out.v[i];
      } else {
        for (std::size_t i = 0; i < delta.v.size(); ++i)
          if (a_out.v[i] <= 0.0) delta.v[i] = 0.0;
      }
    }
    kernels::grad_weights(a_in.data(), delta.data(), a_in.rows, a_in.cols,
                          delta.cols, grads.weights[l].data());
    kernels::grad_bias(delta.data(), delta.rows, delta.cols,
                       grads.biases[l].data());
    if (l > 0) {
      Matrix next(delta.rows, a_in.cols);
      kernels::backprop_delta(delta.data(), net.weights[l].data(), delta.rows,
                              a_in.cols, delta.cols, next.data());
      delta = std::move(next);
    }
  }
  return grads;
}

std::vector<double> softmax_row(const double* logits, int n, int mask_lo,
                                int mask_hi) {
  if (mask_lo < 0) {
    mask_lo = 0;
    mask_hi = n;
  }
  std::vector<double> p(n, 0.0);
  double max_logit = logits[mask_lo];
  for (int i = mask_lo; i < mask_hi; ++i) max_logit = std::max(max_logit, logits[i]);
  double z = 0.0;
  for (int i = mask_lo; i < mask_hi; ++i) {
    p[i] = std::exp(logits[i] - max_logit);
    z += p[i];
  }
  for (int i = mask_lo; i < mask_hi; ++i) p[i] /= z;
  return p;
}

CeResult backward_ce(const DenseNet& net, const Matrix& x_batch,
                     const std::vector<int>& labels, int mask_lo,
                     int mask_hi) {
  if (static_cast<int>(labels.size()) != x_batch.rows) {
    throw std::invalid_argument("backward_ce: one label per row required");
  }
  const int out = net.output_dim();
  const int lo = mask_lo < 0 ? 0 : mask_lo;
  const int hi = mask_lo < 0 ? out : mask_hi;
  for (int label : labels) {
    if (label < lo || label >= hi) {
      throw std::out_of_range("backward_ce: label outside the output window");
    }
  }
  ForwardCache cache;
  Matrix logits = forward_cached(net, x_batch, cache);
  Matrix delta(logits.rows, logits.cols);
  double loss = 0.0;
  const double inv_batch = 1.0 / x_batch.rows;
  for (int b = 0; b < logits.rows; ++b) {
    auto p = softmax_row(logits.data() + static_cast<std::size_t>(b) * out, out,
                         mask_lo, mask_hi);
    loss -= std::log(std::max(p[labels[b]], 1e-300));
    for (int i = lo; i < hi; ++i) {
      delta.at(b, i) = (p[i] - (i == labels[b] ? 1.0 : 0.0)) * inv_batch;
    }
  }
  CeResult result;
  result.loss = loss * inv_batch;
  result.grads = backward_from_delta(net, cache, delta);
  return result;
}

void sgd_step(DenseNet& net, const GradientBundle& grads, double lr) {
  if (!grads.finite()) {
    throw RunError("sgd_step: non-finite gradient");
  }
  for (int l = 0; l < net.num_layers(); ++l) {
    kernels::axpy(-lr, grads.weights[l].data(), net.weights[l].data(),
                  net.weights[l].v.size());
    kernels::axpy(-lr, grads.biases[l].data(), net.biases[l].data(),
                  net.biases[l].size());
  }
}

GradientBundle fisher_diagonal(const DenseNet& net, const Matrix& x_batch) {
  if (x_batch.rows == 0) {
    throw std::invalid_argument("fisher_diagonal: empty batch");
  }
  GradientBundle fisher = zeros_like(net);
  const int out = net.output_dim();
  Matrix x_row(1, x_batch.cols);
  for (int b = 0; b < x_batch.rows; ++b) {
    for (int c = 0; c < x_batch.cols; ++c) x_row.at(0, c) = x_batch.at(b, c);
    ForwardCache cache;
    Matrix logits = forward_cached(net, x_row, cache);
    int argmax = 0;
    for (int i = 1; i < out; ++i)
      if (logits.at(0, i) > logits.at(0, argmax)) argmax = i;
    auto p = softmax_row(logits.data(), out);
    Matrix delta(1, out);
    for (int i = 0; i < out; ++i) delta.at(0, i) = p[i] - (i == argmax ? 1.0 : 0.0);
    GradientBundle g = backward_from_delta(net, cache, delta);
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      for (std::size_t i = 0; i < g.weights[l].v.size(); ++i)
        fisher.weights[l].v[i] += g.weights[l].v[i] * g.weights[l].v[i];
      for (std::size_t i = 0; i < g.biases[l].size(); ++i)
        fisher.biases[l][i] += g.biases[l][i] * g.biases[l][i];
    }
  }
  fisher.scale(1.0 / x_batch.rows);
  return fisher;
}

nlohmann::json net_to_json(const DenseNet& net) {
  nlohmann::json tensors;
  for (int l = 0; l < net.num_layers(); ++l) {
    tensors["w" + std::to_string(l)] = {
        {"shape", {net.weights[l].rows, net.weights[l].cols}},
        {"values", net.weights[l].v}};
    tensors["b" + std::to_string(l)] = {
        {"shape", {static_cast<int>(net.biases[l].size())}},
        {"values", net.biases[l]}};
  }
  return nlohmann::json{
      {"sizes", net.sizes},
      {"activation", net.activation == Activation::Tanh ? "tanh" : "relu"},
      {"activate_output", net.activate_output},
      {"tensors", tensors}};
}

DenseNet net_from_json(const nlohmann::json& j) {
  DenseNet net;
  net.sizes = j.at("sizes").get<std::vector<int>>();
  net.activation = j.at("activation").get<std::string>() == "tanh"
                       ? Activation::Tanh
                       : Activation::ReLU;
  net.activate_output = j.at("activate_output").get<bool>();
  const auto& tensors = j.at("tensors");
  for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    Matrix w(net.sizes[l], net.sizes[l + 1]);
    w.v = tensors.at("w" + std::to_string(l)).at("values").get<std::vector<double>>();
    net.weights.push_back(std::move(w));
    net.biases.push_back(tensors.at("b" + std::to_string(l))
                             .at("values")
                             .get<std::vector<double>>());
  }
  return net;
}

}  // namespace cl
