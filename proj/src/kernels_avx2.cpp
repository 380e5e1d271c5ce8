#include <immintrin.h>

#include "kernels_gemm_common.hpp"
#include "shiftlab/kernels.hpp"

namespace shiftlab::kernels {
namespace {

inline __m256i tail_mask(int64_t rem) {
  alignas(32) static const int64_t bits[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(
      reinterpret_cast<const __m256i*>(bits + 4 - (rem < 0 ? 0 : rem)));
}

// 6x8 register tile: 12 ymm accumulators, two B vectors, one A broadcast.
struct Micro256 {
  static constexpr int64_t MR = 6;
  static constexpr int64_t NR = 8;

  template <int ROWS>
  static inline void tile(int64_t kc, const double* ap, const double* bp,
                          double* c, int64_t ldc, int64_t nr) {
    __m256d acc0[ROWS], acc1[ROWS];
    for (int r = 0; r < ROWS; ++r) {
      acc0[r] = _mm256_setzero_pd();
      acc1[r] = _mm256_setzero_pd();
    }
    for (int64_t kk = 0; kk < kc; ++kk) {
      const __m256d b0 = _mm256_loadu_pd(bp + kk * NR);
      const __m256d b1 = _mm256_loadu_pd(bp + kk * NR + 4);
      const double* arow = ap + kk * MR;
      for (int r = 0; r < ROWS; ++r) {
        const __m256d av = _mm256_set1_pd(arow[r]);
        acc0[r] = _mm256_fmadd_pd(av, b0, acc0[r]);
        acc1[r] = _mm256_fmadd_pd(av, b1, acc1[r]);
      }
    }
    if (nr == NR) {
      for (int r = 0; r < ROWS; ++r) {
        double* crow = c + r * ldc;
        _mm256_storeu_pd(crow, _mm256_add_pd(_mm256_loadu_pd(crow), acc0[r]));
        _mm256_storeu_pd(crow + 4,
                         _mm256_add_pd(_mm256_loadu_pd(crow + 4), acc1[r]));
      }
    } else {
      const __m256i m0 = tail_mask(nr >= 4 ? 4 : nr);
      const __m256i m1 = tail_mask(nr - 4);
      for (int r = 0; r < ROWS; ++r) {
        double* crow = c + r * ldc;
        const __m256d c0 = _mm256_maskload_pd(crow, m0);
        _mm256_maskstore_pd(crow, m0, _mm256_add_pd(c0, acc0[r]));
        if (nr > 4) {
          const __m256d c1 = _mm256_maskload_pd(crow + 4, m1);
          _mm256_maskstore_pd(crow + 4, m1, _mm256_add_pd(c1, acc1[r]));
        }
      }
    }
  }

  static void micro(int64_t kc, const double* ap, const double* bp, double* c,
                    int64_t ldc, int64_t mr, int64_t nr) {
    switch (mr) {
      case 6: tile<6>(kc, ap, bp, c, ldc, nr); break;
      case 5: tile<5>(kc, ap, bp, c, ldc, nr); break;
      case 4: tile<4>(kc, ap, bp, c, ldc, nr); break;
      case 3: tile<3>(kc, ap, bp, c, ldc, nr); break;
      case 2: tile<2>(kc, ap, bp, c, ldc, nr); break;
      default: tile<1>(kc, ap, bp, c, ldc, nr); break;
    }
  }
};

void gemm_avx2(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
               double alpha, const double* a, int64_t lda, const double* b,
               int64_t ldb, double beta, double* c, int64_t ldc) {
  detail::GemmDriver<Micro256>::run(trans_a, trans_b, m, n, k, alpha, a, lda,
                                    b, ldb, beta, c, ldc);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, int64_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_avx2(const double* x, int64_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double sumsq_avx2(const double* x, int64_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d v0 = _mm256_loadu_pd(x + i);
    const __m256d v1 = _mm256_loadu_pd(x + i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, int64_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double alpha, double* x, int64_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void vadd_avx2(const double* x, const double* y, double* z, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i),
                                          _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void vsub_avx2(const double* x, const double* y, double* z, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_sub_pd(_mm256_loadu_pd(x + i),
                                          _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] - y[i];
}

void vmul_avx2(const double* x, const double* y, double* z, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                          _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void relu_avx2(const double* x, double* y, int64_t n) {
  const __m256d zero = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_avx2(const double* y, const double* dy, double* dx, int64_t n) {
  const __m256d zero = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(y + i), zero, _CMP_GT_OQ);
    const __m256d add = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), add));
  }
  for (; i < n; ++i) {
    if (y[i] > 0.0) dx[i] += dy[i];
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      Isa::avx2,  gemm_avx2, dot_avx2,  sum_avx2,  sumsq_avx2, axpy_avx2,
      scal_avx2,  vadd_avx2, vsub_avx2, vmul_avx2, relu_avx2,  relu_grad_avx2,
  };
  return table;
}

}  // namespace shiftlab::kernels
