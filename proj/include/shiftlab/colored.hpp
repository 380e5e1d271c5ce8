#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shiftlab/mnist.hpp"
#include "shiftlab/tensor.hpp"

namespace shiftlab::data {

enum class DatasetKind : uint8_t { cmnist = 0, cs_cmnist = 1 };
const char* kind_name(DatasetKind kind);
DatasetKind kind_from_string(const std::string& name);  // ConfigError

enum class DomainRole : uint8_t { seen = 0, unseen = 1 };

struct DomainSpec {
  int domain_index = 1;  // 1..3
  double bias = 0.0;     // p^e (CMNIST) or theta^e (CS-CMNIST)
  DomainRole role = DomainRole::seen;
  int64_t target_size = 0;
};

struct Rgb {
  double r, g, b;
};

// Per-domain labeled RGB image set. Stored compactly as gray intensities
// plus a color index per image and the palette; images materialize as f64
// tensors in [0,1] with channel value = intensity * palette weight.
struct ColoredDataset {
  DatasetKind kind = DatasetKind::cmnist;
  DomainSpec domain;
  uint64_t seed = 0;
  int num_classes = 2;
  std::vector<uint8_t> gray;         // count * 784
  std::vector<uint8_t> labels;       // Y
  std::vector<uint8_t> gray_labels;  // Y_g (generation metadata)
  std::vector<uint8_t> colors;       // C
  std::vector<int64_t> source_index;  // row in the generation pool
  std::vector<Rgb> palette;

  int64_t count() const { return static_cast<int64_t>(labels.size()); }

  // [n,3,28,28] batch for the given indices.
  Tensor images(std::span<const int64_t> indices) const;

  struct Stats {
    double p_color_eq_label = 0.0;
    double label_flip_rate = 0.0;
  };
  Stats stats() const;
};

// domains[0], domains[1] seen; domains[2] unseen.
struct DomainTriple {
  DatasetKind kind;
  uint64_t seed;
  std::array<ColoredDataset, 3> domains;
};

inline constexpr double kDomainBias[3] = {0.1, 0.2, 0.9};
inline constexpr double kCmnistLabelNoise = 0.25;
inline constexpr int64_t kCmnistSizes[3] = {25000, 25000, 20000};
inline constexpr int64_t kCsCmnistSize = 20000;

// Disjoint partition of the pool; binary labels (digit <= 4 -> 0), label
// noise Bern(0.25), color = label XOR Bern(p^e), red/blue channels.
DomainTriple make_cmnist(const GrayMnist& pool, uint64_t seed);

// Rejection sampling with replacement: propose (image, uniform color),
// accept with probability 1-theta when color == digit label, else theta.
// Ten classes, ten palette colors.
DomainTriple make_cs_cmnist(const GrayMnist& pool, uint64_t seed);

struct SplitIndices {
  std::vector<int64_t> train, val;
};
// Disjoint, exhaustive, deterministic; val size = round(fraction * count).
SplitIndices split_train_val(const ColoredDataset& ds, double fraction,
                             uint64_t seed);

// SLDS binary container (one file per domain).
void save_slds(const std::string& path, const ColoredDataset& ds);
ColoredDataset load_slds(const std::string& path);
std::string slds_filename(DatasetKind kind, uint64_t seed, int domain_index);

// SHIFTLAB_CACHE override or <base>/slds-cache.
std::string default_cache_dir();
// Loads the triple from cache when all three files exist, else generates
// from the pool directory and fills the cache.
DomainTriple load_or_generate(DatasetKind kind, uint64_t seed,
                              const std::string& mnist_dir,
                              const std::string& cache_dir);

}  // namespace shiftlab::data
