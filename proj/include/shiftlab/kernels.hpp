#pragma once

#include <cstdint>
#include <vector>

// Data-parallel inner loops behind the tensor ops. Every routine has a scalar
// reference implementation and SIMD variants (AVX2+FMA, AVX-512F) selected at
// runtime; all variants compute the same quantities and are equivalence-tested
// against the scalar path. Selection happens once per process and can be
// forced with SHIFTLAB_KERNELS=scalar|avx2|avx512.

namespace shiftlab::kernels {

enum class Isa { scalar, avx2, avx512 };

const char* isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // Row-major GEMM: C = alpha * op(A) * op(B) + beta * C, where op is
  // identity or transpose. lda/ldb/ldc are row strides of the stored
  // (untransposed) matrices.
  void (*gemm)(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
               double alpha, const double* a, int64_t lda, const double* b,
               int64_t ldb, double beta, double* c, int64_t ldc);

  double (*dot)(const double* x, const double* y, int64_t n);
  double (*sum)(const double* x, int64_t n);
  double (*sumsq)(const double* x, int64_t n);
  void (*axpy)(double alpha, const double* x, double* y, int64_t n);  // y += a*x
  void (*scal)(double alpha, double* x, int64_t n);
  void (*vadd)(const double* x, const double* y, double* z, int64_t n);
  void (*vsub)(const double* x, const double* y, double* z, int64_t n);
  void (*vmul)(const double* x, const double* y, double* z, int64_t n);
  void (*relu)(const double* x, double* y, int64_t n);
  // dx += dy on lanes where the forward output y was positive.
  void (*relu_grad)(const double* y, const double* dy, double* dx, int64_t n);
};

// Table chosen for this process (env override applied on first call).
const KernelTable& active();
Isa active_isa();

// Scalar reference table, always available.
const KernelTable& scalar_table();

// Tables runnable on this CPU, scalar first. Used by equivalence tests.
std::vector<const KernelTable*> supported_tables();

// Convolution patch extraction (shared by all backends; memory bound).
// x: [channels, h, w] row-major. cols: [channels*kh*kw, oh*ow] with row
// stride cols_ld, so several images can share one matrix side by side.
int64_t conv_out_extent(int64_t in, int64_t k, int64_t stride, int64_t pad);
void im2col(const double* x, int64_t channels, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t stride, int64_t pad, double* cols,
            int64_t cols_ld);
// Scatter-add transpose of im2col: x += fold(cols).
void col2im_add(const double* cols, int64_t cols_ld, int64_t channels,
                int64_t h, int64_t w, int64_t kh, int64_t kw, int64_t stride,
                int64_t pad, double* x);

}  // namespace shiftlab::kernels
