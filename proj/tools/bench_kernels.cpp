// Times the serial and OpenMP kernel backends on the dense-math shapes
// the learners actually use, and checks they agree bit-for-bit.
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "cl/learners/kernels.hpp"
#include "cl/rng.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double time_ms(int reps, const std::function<void()>& fn) {
  fn();  // warm up
  const auto t0 = clock_type::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = clock_type::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
  std::printf("openmp available: %s\n",
              cl::kernels::openmp_available() ? "yes" : "no");
  struct Shape {
    int batch, in, out;
  };
  const std::vector<Shape> shapes = {
      {32, 16, 64}, {256, 64, 64}, {1024, 64, 256}, {4096, 128, 128}};
  const int reps = 50;
  std::printf("%8s %6s %6s | %12s %12s %8s | %s\n", "batch", "in", "out",
              "serial(ms)", "openmp(ms)", "speedup", "bit-equal");
  for (const auto& shape : shapes) {
    cl::Rng rng(7);
    std::vector<double> x(static_cast<std::size_t>(shape.batch) * shape.in);
    std::vector<double> w(static_cast<std::size_t>(shape.in) * shape.out);
    std::vector<double> b(shape.out);
    for (auto& v : x) v = rng.normal();
    for (auto& v : w) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    std::vector<double> y_serial(static_cast<std::size_t>(shape.batch) *
                                 shape.out);
    std::vector<double> y_omp(y_serial.size());
    std::vector<double> dw_serial(w.size()), dw_omp(w.size());

    const double t_serial = time_ms(reps, [&] {
      cl::kernels::serial::dense_forward(x.data(), shape.batch, shape.in,
                                         w.data(), b.data(), shape.out,
                                         y_serial.data());
      cl::kernels::serial::grad_weights(x.data(), y_serial.data(), shape.batch,
                                        shape.in, shape.out, dw_serial.data());
    });
    const double t_omp = time_ms(reps, [&] {
      cl::kernels::omp::dense_forward(x.data(), shape.batch, shape.in,
                                      w.data(), b.data(), shape.out,
                                      y_omp.data());
      cl::kernels::omp::grad_weights(x.data(), y_omp.data(), shape.batch,
                                     shape.in, shape.out, dw_omp.data());
    });
    const bool equal = y_serial == y_omp && dw_serial == dw_omp;
    std::printf("%8d %6d %6d | %12.4f %12.4f %8.2fx | %s\n", shape.batch,
                shape.in, shape.out, t_serial, t_omp,
                t_omp > 0 ? t_serial / t_omp : 0.0, equal ? "yes" : "NO");
  }
  return 0;
}
