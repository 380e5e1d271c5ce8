#pragma once

#include <span>
#include <string>
#include <vector>

#include "shiftlab/tensor.hpp"

namespace shiftlab {

// Flat binary checkpoint. Layout, all integers little-endian unsigned 64-bit:
//   "SLT1" | count | { name_len | name bytes | rank | extents... | f64 data }*
void save_checkpoint(const std::string& path,
                     std::span<const Parameter* const> params);
std::vector<Parameter> load_checkpoint(const std::string& path);

}  // namespace shiftlab
