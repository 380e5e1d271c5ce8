#pragma once

#include "shiftlab/kernels.hpp"

// Internal: per-ISA tables. Safe to reference on any CPU; only the function
// pointers inside require the matching ISA.

namespace shiftlab::kernels {
const KernelTable& avx2_table();
const KernelTable& avx512_table();
}  // namespace shiftlab::kernels
