#include <immintrin.h>

#include "kernels_gemm_common.hpp"
#include "shiftlab/kernels.hpp"

namespace shiftlab::kernels {
namespace {

// 8x16 register tile: 16 zmm accumulators, two B vectors, one A broadcast.
struct Micro512 {
  static constexpr int64_t MR = 8;
  static constexpr int64_t NR = 16;

  template <int ROWS>
  static inline void tile(int64_t kc, const double* ap, const double* bp,
                          double* c, int64_t ldc, __mmask8 m0, __mmask8 m1) {
    __m512d acc0[ROWS], acc1[ROWS];
    for (int r = 0; r < ROWS; ++r) {
      acc0[r] = _mm512_setzero_pd();
      acc1[r] = _mm512_setzero_pd();
    }
    for (int64_t kk = 0; kk < kc; ++kk) {
      const __m512d b0 = _mm512_loadu_pd(bp + kk * NR);
      const __m512d b1 = _mm512_loadu_pd(bp + kk * NR + 8);
      const double* arow = ap + kk * MR;
      for (int r = 0; r < ROWS; ++r) {
        const __m512d av = _mm512_set1_pd(arow[r]);
        acc0[r] = _mm512_fmadd_pd(av, b0, acc0[r]);
        acc1[r] = _mm512_fmadd_pd(av, b1, acc1[r]);
      }
    }
    for (int r = 0; r < ROWS; ++r) {
      double* crow = c + r * ldc;
      const __m512d c0 = _mm512_maskz_loadu_pd(m0, crow);
      _mm512_mask_storeu_pd(crow, m0, _mm512_add_pd(c0, acc0[r]));
      const __m512d c1 = _mm512_maskz_loadu_pd(m1, crow + 8);
      _mm512_mask_storeu_pd(crow + 8, m1, _mm512_add_pd(c1, acc1[r]));
    }
  }

  static void micro(int64_t kc, const double* ap, const double* bp, double* c,
                    int64_t ldc, int64_t mr, int64_t nr) {
    const __mmask8 m0 =
        nr >= 8 ? __mmask8(0xFF) : __mmask8((1u << nr) - 1u);
    const __mmask8 m1 =
        nr >= 16 ? __mmask8(0xFF)
                 : (nr > 8 ? __mmask8((1u << (nr - 8)) - 1u) : __mmask8(0));
    switch (mr) {
      case 8: tile<8>(kc, ap, bp, c, ldc, m0, m1); break;
      case 7: tile<7>(kc, ap, bp, c, ldc, m0, m1); break;
      case 6: tile<6>(kc, ap, bp, c, ldc, m0, m1); break;
      case 5: tile<5>(kc, ap, bp, c, ldc, m0, m1); break;
      case 4: tile<4>(kc, ap, bp, c, ldc, m0, m1); break;
      case 3: tile<3>(kc, ap, bp, c, ldc, m0, m1); break;
      case 2: tile<2>(kc, ap, bp, c, ldc, m0, m1); break;
      default: tile<1>(kc, ap, bp, c, ldc, m0, m1); break;
    }
  }
};

void gemm_avx512(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
                 double alpha, const double* a, int64_t lda, const double* b,
                 int64_t ldb, double beta, double* c, int64_t ldc) {
  detail::GemmDriver<Micro512>::run(trans_a, trans_b, m, n, k, alpha, a, lda,
                                    b, ldb, beta, c, ldc);
}

inline double hsum(__m512d v) { return _mm512_reduce_add_pd(v); }

double dot_avx512(const double* x, const double* y, int64_t n) {
  __m512d acc0 = _mm512_setzero_pd(), acc1 = _mm512_setzero_pd();
  int64_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), acc0);
    acc1 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 8), _mm512_loadu_pd(y + i + 8), acc1);
  }
  double acc = hsum(_mm512_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_avx512(const double* x, int64_t n) {
  __m512d acc0 = _mm512_setzero_pd(), acc1 = _mm512_setzero_pd();
  int64_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm512_add_pd(acc0, _mm512_loadu_pd(x + i));
    acc1 = _mm512_add_pd(acc1, _mm512_loadu_pd(x + i + 8));
  }
  double acc = hsum(_mm512_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double sumsq_avx512(const double* x, int64_t n) {
  __m512d acc0 = _mm512_setzero_pd(), acc1 = _mm512_setzero_pd();
  int64_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m512d v0 = _mm512_loadu_pd(x + i);
    const __m512d v1 = _mm512_loadu_pd(x + i + 8);
    acc0 = _mm512_fmadd_pd(v0, v0, acc0);
    acc1 = _mm512_fmadd_pd(v1, v1, acc1);
  }
  double acc = hsum(_mm512_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_avx512(double alpha, const double* x, double* y, int64_t n) {
  const __m512d av = _mm512_set1_pd(alpha);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm512_storeu_pd(y + i, _mm512_fmadd_pd(av, _mm512_loadu_pd(x + i),
                                            _mm512_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx512(double alpha, double* x, int64_t n) {
  const __m512d av = _mm512_set1_pd(alpha);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm512_storeu_pd(x + i, _mm512_mul_pd(av, _mm512_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void vadd_avx512(const double* x, const double* y, double* z, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm512_storeu_pd(z + i, _mm512_add_pd(_mm512_loadu_pd(x + i),
                                          _mm512_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void vsub_avx512(const double* x, const double* y, double* z, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm512_storeu_pd(z + i, _mm512_sub_pd(_mm512_loadu_pd(x + i),
                                          _mm512_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] - y[i];
}

void vmul_avx512(const double* x, const double* y, double* z, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm512_storeu_pd(z + i, _mm512_mul_pd(_mm512_loadu_pd(x + i),
                                          _mm512_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void relu_avx512(const double* x, double* y, int64_t n) {
  const __m512d zero = _mm512_setzero_pd();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm512_storeu_pd(y + i, _mm512_max_pd(zero, _mm512_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_avx512(const double* y, const double* dy, double* dx, int64_t n) {
  const __m512d zero = _mm512_setzero_pd();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __mmask8 pos =
        _mm512_cmp_pd_mask(_mm512_loadu_pd(y + i), zero, _CMP_GT_OQ);
    const __m512d acc = _mm512_mask_add_pd(_mm512_loadu_pd(dx + i), pos,
                                           _mm512_loadu_pd(dx + i),
                                           _mm512_loadu_pd(dy + i));
    _mm512_storeu_pd(dx + i, acc);
  }
  for (; i < n; ++i) {
    if (y[i] > 0.0) dx[i] += dy[i];
  }
}

}  // namespace

const KernelTable& avx512_table() {
  static const KernelTable table{
      Isa::avx512,  gemm_avx512, dot_avx512,  sum_avx512,
      sumsq_avx512, axpy_avx512, scal_avx512, vadd_avx512,
      vsub_avx512,  vmul_avx512, relu_avx512, relu_grad_avx512,
  };
  return table;
}

}  // namespace shiftlab::kernels
