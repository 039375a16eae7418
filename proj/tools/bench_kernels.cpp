// Times the serial reference kernels against the OpenMP variants.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bimcq/kernels.hpp"
#include "bimcq/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;
using bimcq::Rng;
namespace kernels = bimcq::kernels;

std::vector<double> random_matrix(int rows, int cols, Rng& rng) {
  std::vector<double> m(static_cast<std::size_t>(rows) * cols);
  for (double& x : m) x = rng.uniform(-1.0, 1.0);
  return m;
}

template <typename F>
double time_ms(F&& fn, int reps) {
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void bench_matmul(int n, Rng& rng) {
  const auto a = random_matrix(n, n, rng);
  const auto b = random_matrix(n, n, rng);
  std::vector<double> c(static_cast<std::size_t>(n) * n);
  const int reps = n >= 512 ? 3 : 10;

  const double serial_ms =
      time_ms([&] { kernels::serial::matmul_nn(a.data(), b.data(), c.data(), n, n, n, false); }, reps);
  const double parallel_ms =
      time_ms([&] { kernels::parallel::matmul_nn(a.data(), b.data(), c.data(), n, n, n, false); }, reps);
  std::printf("matmul_nn %4dx%-4d  serial %9.3f ms  parallel %9.3f ms  speedup %.2fx\n", n, n,
              serial_ms, parallel_ms, serial_ms / parallel_ms);
}

void bench_softmax(int rows, int cols, Rng& rng) {
  const auto x = random_matrix(rows, cols, rng);
  std::vector<double> y(x.size());
  const double serial_ms =
      time_ms([&] { kernels::serial::softmax_rows(x.data(), y.data(), rows, cols); }, 10);
  const double parallel_ms =
      time_ms([&] { kernels::parallel::softmax_rows(x.data(), y.data(), rows, cols); }, 10);
  std::printf("softmax %5dx%-4d   serial %9.3f ms  parallel %9.3f ms  speedup %.2fx\n", rows, cols,
              serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel kernels run serially\n");
#endif
  Rng rng(7);
  for (const int n : {64, 128, 256, 512}) bench_matmul(n, rng);
  bench_softmax(2048, 256, rng);
  bench_softmax(16384, 64, rng);
  return 0;
}
