#pragma once
#include <cstddef>

namespace cl::kernels {

// Dense-math inner loops behind the learners.  Each kernel exists in a
// serial reference form and an OpenMP form; both produce bit-identical
// results for any thread count because parallel loops range over
// independent outputs and every accumulation keeps a fixed order.

enum class Backend { Serial, OpenMP };

bool openmp_available();
Backend active_backend();
void set_backend(Backend backend);

namespace serial {
// y[b][o] = sum_i x[b][i] * w[i][o] + bias[o]
void dense_forward(const double* x, int batch, int in_dim, const double* w,
                   const double* bias, int out_dim, double* y);
void tanh_inplace(double* a, std::size_t n);
void relu_inplace(double* a, std::size_t n);
// dw[i][o] = sum_b a[b][i] * delta[b][o]
void grad_weights(const double* a, const double* delta, int batch, int in_dim,
                  int out_dim, double* dw);
// db[o] = sum_b delta[b][o]
void grad_bias(const double* delta, int batch, int out_dim, double* db);
// dx[b][i] = sum_o delta[b][o] * w[i][o]
void backprop_delta(const double* delta, const double* w, int batch,
                    int in_dim, int out_dim, double* dx);
// theta[i] += alpha * g[i]
void axpy(double alpha, const double* g, double* theta, std::size_t n);
}  // namespace serial

namespace omp {
void dense_forward(const double* x, int batch, int in_dim, const double* w,
                   const double* bias, int out_dim, double* y);
void tanh_inplace(double* a, std::size_t n);
void relu_inplace(double* a, std::size_t n);
void grad_weights(const double* a, const double* delta, int batch, int in_dim,
                  int out_dim, double* dw);
void grad_bias(const double* delta, int batch, int out_dim, double* db);
void backprop_delta(const double* delta, const double* w, int batch,
                    int in_dim, int out_dim, double* dx);
void axpy(double alpha, const double* g, double* theta, std::size_t n);
}  // namespace omp

// Dispatch to the active backend.
void dense_forward(const double* x, int batch, int in_dim, const double* w,
                   const double* bias, int out_dim, double* y);
void tanh_inplace(double* a, std::size_t n);
void relu_inplace(double* a, std::size_t n);
void grad_weights(const double* a, const double* delta, int batch, int in_dim,
                  int out_dim, double* dw);
void grad_bias(const double* delta, int batch, int out_dim, double* db);
void backprop_delta(const double* delta, const double* w, int batch,
                    int in_dim, int out_dim, double* dx);
void axpy(double alpha, const double* g, double* theta, std::size_t n);

}  // namespace cl::kernels
