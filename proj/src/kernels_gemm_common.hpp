#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

// Packed-panel GEMM driver shared by the SIMD backends. The Micro policy
// supplies register-tile sizes and the accumulation microkernel; packing,
// cache blocking and the beta pass are ISA-independent. Panels are
// zero-padded to full MR/NR so microkernels never read ragged edges; C
// stores remain masked/bounded. Pack loops are ordered so the source matrix
// is always walked row-sequentially; block sizes keep the packed B block
// L2-resident and the A micro-panel L1-resident.

namespace shiftlab::kernels::detail {

template <class Micro>
struct GemmDriver {
  static constexpr int64_t MR = Micro::MR;
  static constexpr int64_t NR = Micro::NR;
  static constexpr int64_t KC = 192;
  static constexpr int64_t MC = 128;
  static constexpr int64_t NC = 512;

  // buf holds ceil(mc/MR) panels of [kc x MR], zero-padded rows.
  static void pack_a(bool trans, const double* a, int64_t lda, int64_t ic,
                     int64_t pc, int64_t mc, int64_t kc, double alpha,
                     double* buf) {
    const int64_t panels = (mc + MR - 1) / MR;
    if (!trans) {
      // op(A)(i,p) = a[i][p]: walk each source row once.
      for (int64_t p = 0; p < panels; ++p) {
        double* dst = buf + p * kc * MR;
        const int64_t rows = std::min<int64_t>(MR, mc - p * MR);
        for (int64_t r = 0; r < rows; ++r) {
          const double* src = a + (ic + p * MR + r) * lda + pc;
          for (int64_t kk = 0; kk < kc; ++kk) {
            dst[kk * MR + r] = alpha * src[kk];
          }
        }
        for (int64_t r = rows; r < MR; ++r) {
          for (int64_t kk = 0; kk < kc; ++kk) dst[kk * MR + r] = 0.0;
        }
      }
    } else {
      // op(A)(i,p) = a[p][i]: kk-major so each source row is read once.
      for (int64_t kk = 0; kk < kc; ++kk) {
        const double* src = a + (pc + kk) * lda + ic;
        for (int64_t p = 0; p < panels; ++p) {
          double* dst = buf + p * kc * MR + kk * MR;
          const int64_t rows = std::min<int64_t>(MR, mc - p * MR);
          for (int64_t r = 0; r < rows; ++r) dst[r] = alpha * src[p * MR + r];
          for (int64_t r = rows; r < MR; ++r) dst[r] = 0.0;
        }
      }
    }
  }

  // buf holds ceil(nc/NR) panels of [kc x NR], zero-padded columns.
  static void pack_b(bool trans, const double* b, int64_t ldb, int64_t pc,
                     int64_t jc, int64_t kc, int64_t nc, double* buf) {
    const int64_t panels = (nc + NR - 1) / NR;
    if (!trans) {
      // op(B)(p,j) = b[p][j]: kk-major, one pass over each source row.
      for (int64_t kk = 0; kk < kc; ++kk) {
        const double* src = b + (pc + kk) * ldb + jc;
        int64_t j = 0;
        for (int64_t p = 0; p < panels; ++p) {
          double* dst = buf + p * kc * NR + kk * NR;
          const int64_t cols = std::min<int64_t>(NR, nc - p * NR);
          for (int64_t q = 0; q < cols; ++q) dst[q] = src[j + q];
          for (int64_t q = cols; q < NR; ++q) dst[q] = 0.0;
          j += NR;
        }
      }
    } else {
      // op(B)(p,j) = b[j][p]: per destination column, walk one source row.
      for (int64_t p = 0; p < panels; ++p) {
        double* dst = buf + p * kc * NR;
        const int64_t cols = std::min<int64_t>(NR, nc - p * NR);
        for (int64_t q = 0; q < cols; ++q) {
          const double* src = b + (jc + p * NR + q) * ldb + pc;
          for (int64_t kk = 0; kk < kc; ++kk) dst[kk * NR + q] = src[kk];
        }
        for (int64_t q = cols; q < NR; ++q) {
          for (int64_t kk = 0; kk < kc; ++kk) dst[kk * NR + q] = 0.0;
        }
      }
    }
  }

  static void run(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
                  double alpha, const double* a, int64_t lda, const double* b,
                  int64_t ldb, double beta, double* c, int64_t ldc) {
    if (beta == 0.0) {
      for (int64_t i = 0; i < m; ++i)
        std::memset(c + i * ldc, 0, static_cast<size_t>(n) * sizeof(double));
    } else if (beta != 1.0) {
      for (int64_t i = 0; i < m; ++i) {
        double* crow = c + i * ldc;
        for (int64_t j = 0; j < n; ++j) crow[j] *= beta;
      }
    }
    if (m == 0 || n == 0 || k == 0 || alpha == 0.0) return;

    thread_local std::vector<double> abuf;
    thread_local std::vector<double> bbuf;
    constexpr int64_t kASize = (MC + MR - 1) / MR * MR * KC;
    constexpr int64_t kBSize = (NC + NR - 1) / NR * NR * KC;
    if (static_cast<int64_t>(bbuf.size()) < kBSize) bbuf.resize(kBSize);
    if (static_cast<int64_t>(abuf.size()) < kASize) abuf.resize(kASize);

    for (int64_t jc = 0; jc < n; jc += NC) {
      const int64_t nc = std::min(NC, n - jc);
      for (int64_t pc = 0; pc < k; pc += KC) {
        const int64_t kc = std::min(KC, k - pc);
        pack_b(trans_b, b, ldb, pc, jc, kc, nc, bbuf.data());
        for (int64_t ic = 0; ic < m; ic += MC) {
          const int64_t mc = std::min(MC, m - ic);
          pack_a(trans_a, a, lda, ic, pc, mc, kc, alpha, abuf.data());
          for (int64_t jr = 0; jr < nc; jr += NR) {
            const int64_t nr = std::min(NR, nc - jr);
            const double* bp = bbuf.data() + (jr / NR) * kc * NR;
            for (int64_t ir = 0; ir < mc; ir += MR) {
              const int64_t mr = std::min(MR, mc - ir);
              const double* ap = abuf.data() + (ir / MR) * kc * MR;
              Micro::micro(kc, ap, bp, c + (ic + ir) * ldc + jc + jr, ldc, mr,
                           nr);
            }
          }
        }
      }
    }
  }
};

}  // namespace shiftlab::kernels::detail
