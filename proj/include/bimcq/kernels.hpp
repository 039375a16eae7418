#pragma once

#include <cstddef>

// Dense inner-loop kernels behind the tensor ops. Every kernel exists twice:
// kernels::serial is the reference, kernels::parallel is the OpenMP version.
// Both iterate each output element in the same order, so their results are
// bitwise identical and training stays reproducible regardless of thread
// count. The unprefixed entry points dispatch on problem size.
namespace bimcq::kernels {

namespace serial {
// c[m,n] (+)= a[m,k] * b[k,n]
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
// c[m,n] (+)= a[m,k] * b[n,k]^T
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
// c[m,n] (+)= a[k,m]^T * b[k,n]
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void tanh_forward(const double* x, double* y, std::size_t n);
// row-wise softmax with max subtraction, x and y may alias
void softmax_rows(const double* x, double* y, int rows, int cols);
}  // namespace serial

namespace parallel {
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void tanh_forward(const double* x, double* y, std::size_t n);
void softmax_rows(const double* x, double* y, int rows, int cols);
}  // namespace parallel

// Work below this many fused multiply-adds is not worth a parallel region.
inline constexpr std::size_t kParallelCutoff = 1u << 15;

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void tanh_forward(const double* x, double* y, std::size_t n);
void softmax_rows(const double* x, double* y, int rows, int cols);

}  // namespace bimcq::kernels
