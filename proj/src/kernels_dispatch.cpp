#include <cstdlib>
#include <cstring>
#include <string>

#include "kernels_backends.hpp"
#include "shiftlab/kernels.hpp"

namespace shiftlab::kernels {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::avx512: return __builtin_cpu_supports("avx512f");
  }
  return false;
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar: return &scalar_table();
    case Isa::avx2: return &avx2_table();
    case Isa::avx512: return &avx512_table();
  }
  return nullptr;
}

const KernelTable* select() {
  if (const char* env = std::getenv("SHIFTLAB_KERNELS")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512}) {
      if (want == isa_name(isa) && cpu_has(isa)) return table_for(isa);
    }
    // Unknown or unsupported request falls through to auto selection.
  }
  if (cpu_has(Isa::avx512)) return table_for(Isa::avx512);
  if (cpu_has(Isa::avx2)) return table_for(Isa::avx2);
  return table_for(Isa::scalar);
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::avx512: return "avx512";
  }
  return "?";
}

const KernelTable& active() {
  static const KernelTable* chosen = select();
  return *chosen;
}

Isa active_isa() { return active().isa; }

std::vector<const KernelTable*> supported_tables() {
  std::vector<const KernelTable*> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512}) {
    if (cpu_has(isa)) out.push_back(table_for(isa));
  }
  return out;
}

int64_t conv_out_extent(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

void im2col(const double* x, int64_t channels, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t stride, int64_t pad, double* cols,
            int64_t cols_ld) {
  const int64_t oh = conv_out_extent(h, kh, stride, pad);
  const int64_t ow = conv_out_extent(w, kw, stride, pad);
  for (int64_t c = 0; c < channels; ++c) {
    const double* plane = x + c * h * w;
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        double* row = cols + ((c * kh + ki) * kw + kj) * cols_ld;
        for (int64_t oi = 0; oi < oh; ++oi) {
          const int64_t ii = oi * stride - pad + ki;
          double* dst = row + oi * ow;
          if (ii < 0 || ii >= h) {
            std::memset(dst, 0, static_cast<size_t>(ow) * sizeof(double));
            continue;
          }
          const double* src = plane + ii * w;
          for (int64_t oj = 0; oj < ow; ++oj) {
            const int64_t jj = oj * stride - pad + kj;
            dst[oj] = (jj >= 0 && jj < w) ? src[jj] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, int64_t cols_ld, int64_t channels,
                int64_t h, int64_t w, int64_t kh, int64_t kw, int64_t stride,
                int64_t pad, double* x) {
  const int64_t oh = conv_out_extent(h, kh, stride, pad);
  const int64_t ow = conv_out_extent(w, kw, stride, pad);
  for (int64_t c = 0; c < channels; ++c) {
    double* plane = x + c * h * w;
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        const double* row = cols + ((c * kh + ki) * kw + kj) * cols_ld;
        for (int64_t oi = 0; oi < oh; ++oi) {
          const int64_t ii = oi * stride - pad + ki;
          if (ii < 0 || ii >= h) continue;
          double* dst = plane + ii * w;
          const double* src = row + oi * ow;
          for (int64_t oj = 0; oj < ow; ++oj) {
            const int64_t jj = oj * stride - pad + kj;
            if (jj >= 0 && jj < w) dst[jj] += src[oj];
          }
        }
      }
    }
  }
}

}  // namespace shiftlab::kernels
