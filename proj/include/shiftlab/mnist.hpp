#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace shiftlab::data {

struct GrayMnist {
  int64_t count = 0;
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<uint8_t> images;  // count * rows * cols
  std::vector<uint8_t> labels;  // count entries in [0,9]
};

// Parses an IDX image/label pair (big-endian magics 0x00000803 / 0x00000801),
// raw or gzip-compressed. Throws FormatError naming the byte offset on bad
// magic, truncation, out-of-range labels, or count mismatch between the two
// files.
GrayMnist load_mnist_idx(const std::string& images_path,
                         const std::string& labels_path);

GrayMnist concat(const GrayMnist& a, const GrayMnist& b);

// The four standard files inside a directory, raw or .gz.
struct MnistPaths {
  std::string train_images, train_labels, test_images, test_labels;
};
MnistPaths find_mnist_dir(const std::string& dir);  // ArgumentError if missing
// train + test concatenated (the 70k generation pool).
GrayMnist load_mnist_pool(const std::string& dir);

// Procedural stand-in with MNIST's shapes: ten fixed class glyphs with
// per-sample shift, intensity jitter and pixel noise. Deterministic in seed;
// the glyphs themselves do not depend on the seed.
GrayMnist synth_mnist(int64_t count, uint64_t seed);

// Raw big-endian IDX writers (fixtures and the mnist-synth tool).
void write_idx_images(const std::string& path, const GrayMnist& g);
void write_idx_labels(const std::string& path, const GrayMnist& g);

}  // namespace shiftlab::data
