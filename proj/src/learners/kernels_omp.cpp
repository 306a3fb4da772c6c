#include <cmath>

#include "cl/learners/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cl::kernels {

bool openmp_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

namespace omp {

// Work below this size is not worth a parallel region.
constexpr long long kMinWork = 16384;

void dense_forward(const double* x, int batch, int in_dim, const double* w,
                   const double* bias, int out_dim, double* y) {
  const long long work = 1LL * batch * in_dim * out_dim;
#pragma omp parallel for schedule(static) if (work >= kMinWork)
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
#pragma omp parallel for schedule(static) if (n >= static_cast<std::size_t>(kMinWork))
  for (long long i = 0; i < static_cast<long long>(n); ++i) a[i] = std::tanh(a[i]);
}

void relu_inplace(double* a, std::size_t n) {
#pragma omp parallel for schedule(static) if (n >= static_cast<std::size_t>(kMinWork))
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    a[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void grad_weights(const double* a, const double* delta, int batch, int in_dim,
                  int out_dim, double* dw) {
  // one weight entry per iteration; the inner batch sum keeps serial
  // order so results do not depend on the thread count
  const long long work = 1LL * batch * in_dim * out_dim;
#pragma omp parallel for schedule(static) if (work >= kMinWork)
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
  const long long work = 1LL * batch * out_dim;
#pragma omp parallel for schedule(static) if (work >= kMinWork)
  for (int o = 0; o < out_dim; ++o) {
    double acc = 0.0;
    for (int b = 0; b < batch; ++b) acc += delta[static_cast<std::size_t>(b) * out_dim + o];
    db[o] = acc;
  }
}

void backprop_delta(const double* delta, const double* w, int batch,
                    int in_dim, int out_dim, double* dx) {
  const long long work = 1LL * batch * in_dim * out_dim;
#pragma omp parallel for schedule(static) if (work >= kMinWork)
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
#pragma omp parallel for schedule(static) if (n >= static_cast<std::size_t>(kMinWork))
  for (long long i = 0; i < static_cast<long long>(n); ++i) theta[i] += alpha * g[i];
}

}  // namespace omp

}  // namespace cl::kernels
