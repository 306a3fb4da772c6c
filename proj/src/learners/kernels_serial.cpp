#include <atomic>
#include <cmath>

#include "cl/learners/kernels.hpp"

namespace cl::kernels {

namespace {
std::atomic<Backend> g_backend{openmp_available() ? Backend::OpenMP
                                                  : Backend::Serial};
}

Backend active_backend() { return g_backend.load(); }
void set_backend(Backend backend) { g_backend.store(backend); }

namespace serial {

void dense_forward(const double* x, int batch, int in_dim, const double* w,
                   const double* bias, int out_dim, double* y) {
  for (int b = 0; b < batch; ++b) {
    const double* row = x + static_cast<std::size_t>(b) * in_dim;
    double* out = y + static_cast<std::size_t>(b) * out_dim;
    for (int o = 0; o < out_dim; ++o) {
      double acc = bias[o];
      for (int i = 0; i < in_dim; ++i) acc += row[i] * w[static_cast<std::size_t>(i) * out_dim + o];
      out[o] = acc;
    }
  }
}

void tanh_inplace(double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] = std::tanh(a[i]);
}

void relu_inplace(double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void grad_weights(const double* a, const double* delta, int batch, int in_dim,
                  int out_dim, double* dw) {
  for (int i = 0; i < in_dim; ++i) {
    for (int o = 0; o < out_dim; ++o) {
      double acc = 0.0;
      for (int b = 0; b < batch; ++b) {
        acc += a[static_cast<std::size_t>(b) * in_dim + i] *
               delta[static_cast<std::size_t>(b) * out_dim + o];
      }
      dw[static_cast<std::size_t>(i) * out_dim + o] = acc;
    }
  }
}

void grad_bias(const double* delta, int batch, int out_dim, double* db) {
  for (int o = 0; o < out_dim; ++o) {
    double acc = 0.0;
    for (int b = 0; b < batch; ++b) acc += delta[static_cast<std::size_t>(b) * out_dim + o];
    db[o] = acc;
  }
}

void backprop_delta(const double* delta, const double* w, int batch,
                    int in_dim, int out_dim, double* dx) {
  for (int b = 0; b < batch; ++b) {
    const double* drow = delta + static_cast<std::size_t>(b) * out_dim;
    double* xrow = dx + static_cast<std::size_t>(b) * in_dim;
    for (int i = 0; i < in_dim; ++i) {
      double acc = 0.0;
      const double* wrow = w + static_cast<std::size_t>(i) * out_dim;
      for (int o = 0; o < out_dim; ++o) acc += drow[o] * wrow[o];
      xrow[i] = acc;
    }
  }
}

void axpy(double alpha, const double* g, double* theta, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) theta[i] += alpha * g[i];
}

}  // namespace serial

#define CL_DISPATCH(fn, ...)                      \
  if (active_backend() == Backend::OpenMP) {      \
    omp::fn(__VA_ARGS__);                         \
  } else {                                        \
    serial::fn(__VA_ARGS__);                      \
  }

void dense_forward(const double* x, int batch, int in_dim, const double* w,
                   const double* bias, int out_dim, double* y) {
  CL_DISPATCH(dense_forward, x, batch, in_dim, w, bias, out_dim, y)
}
void tanh_inplace(double* a, std::size_t n) { CL_DISPATCH(tanh_inplace, a, n) }
void relu_inplace(double* a, std::size_t n) { CL_DISPATCH(relu_inplace, a, n) }
void grad_weights(const double* a, const double* delta, int batch, int in_dim,
                  int out_dim, double* dw) {
  CL_DISPATCH(grad_weights, a, delta, batch, in_dim, out_dim, dw)
}
void grad_bias(const double* delta, int batch, int out_dim, double* db) {
  CL_DISPATCH(grad_bias, delta, batch, out_dim, db)
}
void backprop_delta(const double* delta, const double* w, int batch,
                    int in_dim, int out_dim, double* dx) {
  CL_DISPATCH(backprop_delta, delta, w, batch, in_dim, out_dim, dx)
}
void axpy(double alpha, const double* g, double* theta, std::size_t n) {
  CL_DISPATCH(axpy, alpha, g, theta, n)
}

#undef CL_DISPATCH

}  // namespace cl::kernels
