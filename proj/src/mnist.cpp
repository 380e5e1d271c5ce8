#include "shiftlab/mnist.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "shiftlab/errors.hpp"
#include "shiftlab/rng.hpp"

namespace shiftlab::data {
namespace {

// Reads raw or gzip files through zlib; offsets are uncompressed offsets.
class IdxReader {
 public:
  explicit IdxReader(const std::string& path) : path_(path) {
    f_ = gzopen(path.c_str(), "rb");
    if (!f_) throw ArgumentError("cannot open " + path);
  }
  ~IdxReader() {
    if (f_) gzclose(f_);
  }
  IdxReader(const IdxReader&) = delete;
  IdxReader& operator=(const IdxReader&) = delete;

  void bytes(void* out, int64_t n) {
    const int got = gzread(f_, out, static_cast<unsigned>(n));
    if (got != n) {
      throw FormatError(path_ + ": truncated at offset " +
                        std::to_string(offset_ + std::max(got, 0)) +
                        " (wanted " + std::to_string(n) + " more bytes)");
    }
    offset_ += n;
  }

  uint32_t u32_be() {
    unsigned char b[4];
    bytes(b, 4);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) |
           (uint32_t(b[2]) << 8) | uint32_t(b[3]);
  }

  int64_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  gzFile f_ = nullptr;
  std::string path_;
  int64_t offset_ = 0;
};

constexpr uint32_t kImagesMagic = 0x00000803;  // 2051
constexpr uint32_t kLabelsMagic = 0x00000801;  // 2049
constexpr int64_t kMaxCount = 10'000'000;

std::string hex(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

std::string pick_file(const std::string& dir, const std::string& stem) {
  namespace fs = std::filesystem;
  for (const char* suffix : {"", ".gz"}) {
    const fs::path p = fs::path(dir) / (stem + suffix);
    if (fs::exists(p)) return p.string();
  }
  throw ArgumentError("missing MNIST file " + stem + "[.gz] in " + dir);
}

}  // namespace

GrayMnist load_mnist_idx(const std::string& images_path,
                         const std::string& labels_path) {
  GrayMnist out;
  {
    IdxReader r(images_path);
    const uint32_t magic = r.u32_be();
    if (magic != kImagesMagic) {
      throw FormatError(images_path + ": bad image magic " + hex(magic) +
                        " at offset 0 (expected 0x00000803)");
    }
    out.count = r.u32_be();
    out.rows = r.u32_be();
    out.cols = r.u32_be();
    if (out.count < 0 || out.count > kMaxCount || out.rows <= 0 ||
        out.cols <= 0 || out.rows > 4096 || out.cols > 4096) {
      throw FormatError(images_path + ": implausible header at offset 4");
    }
    out.images.resize(static_cast<size_t>(out.count) * out.rows * out.cols);
    r.bytes(out.images.data(), static_cast<int64_t>(out.images.size()));
  }
  {
    IdxReader r(labels_path);
    const uint32_t magic = r.u32_be();
    if (magic != kLabelsMagic) {
      throw FormatError(labels_path + ": bad label magic " + hex(magic) +
                        " at offset 0 (expected 0x00000801)");
    }
    const int64_t n = r.u32_be();
    if (n != out.count) {
      throw FormatError(labels_path + ": label count " + std::to_string(n) +
                        " at offset 4 does not match image count " +
                        std::to_string(out.count));
    }
    out.labels.resize(static_cast<size_t>(n));
    r.bytes(out.labels.data(), n);
    for (int64_t i = 0; i < n; ++i) {
      if (out.labels[i] > 9) {
        throw FormatError(labels_path + ": label " +
                          std::to_string(int(out.labels[i])) + " at offset " +
                          std::to_string(8 + i) + " outside [0,9]");
      }
    }
  }
  return out;
}

GrayMnist concat(const GrayMnist& a, const GrayMnist& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ArgumentError("concat: image shapes differ");
  }
  GrayMnist out;
  out.count = a.count + b.count;
  out.rows = a.rows;
  out.cols = a.cols;
  out.images.reserve(a.images.size() + b.images.size());
  out.images.insert(out.images.end(), a.images.begin(), a.images.end());
  out.images.insert(out.images.end(), b.images.begin(), b.images.end());
  out.labels.reserve(a.labels.size() + b.labels.size());
  out.labels.insert(out.labels.end(), a.labels.begin(), a.labels.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

MnistPaths find_mnist_dir(const std::string& dir) {
  return MnistPaths{
      pick_file(dir, "train-images-idx3-ubyte"),
      pick_file(dir, "train-labels-idx1-ubyte"),
      pick_file(dir, "t10k-images-idx3-ubyte"),
      pick_file(dir, "t10k-labels-idx1-ubyte"),
  };
}

GrayMnist load_mnist_pool(const std::string& dir) {
  const MnistPaths p = find_mnist_dir(dir);
  return concat(load_mnist_idx(p.train_images, p.train_labels),
                load_mnist_idx(p.test_images, p.test_labels));
}

// ---------------------------------------------------------------------------
// Synthetic stand-in. Each sample mixes a fixed class glyph with per-sample
// clutter drawn from the same texture family, plus translation, contrast
// jitter and pixel noise. The clutter share keeps the class component from
// being a trivially matchable template: networks separate it from the
// per-sample structure only over many steps, while a global color cue stays
// readable immediately — the regime the colored benchmarks need.
// ---------------------------------------------------------------------------
namespace {

constexpr int kImg = 28;
constexpr int kLattice = 6;
constexpr int kMaxShift = 4;
constexpr double kGlyphShareLo = 0.55;
constexpr double kGlyphShareHi = 0.75;
constexpr double kContrastLo = 0.70;
constexpr double kPixelNoise = 0.18;

// smoothed random blob on the 28x28 canvas from a coarse lattice
void render_blob(Philox& rng, double* out, int margin) {
  double lattice[kLattice][kLattice];
  for (auto& row : lattice) {
    for (double& v : row) v = rng.normal();
  }
  const int inner = kImg - 2 * margin;
  double lo = 1e30, hi = -1e30;
  for (int y = 0; y < inner; ++y) {
    for (int x = 0; x < inner; ++x) {
      const double fy = double(y) / (inner - 1) * (kLattice - 1);
      const double fx = double(x) / (inner - 1) * (kLattice - 1);
      const int y0 = std::min(int(fy), kLattice - 2);
      const int x0 = std::min(int(fx), kLattice - 2);
      const double wy = fy - y0, wx = fx - x0;
      const double v = lattice[y0][x0] * (1 - wy) * (1 - wx) +
                       lattice[y0 + 1][x0] * wy * (1 - wx) +
                       lattice[y0][x0 + 1] * (1 - wy) * wx +
                       lattice[y0 + 1][x0 + 1] * wy * wx;
      out[(y + margin) * kImg + (x + margin)] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  for (int y = 0; y < inner; ++y) {
    for (int x = 0; x < inner; ++x) {
      double& v = out[(y + margin) * kImg + (x + margin)];
      v = (v - lo) / (hi - lo);
      v = v * v;  // dark background, bright strokes
    }
  }
}

std::vector<double> make_glyph(int cls) {
  Philox rng = Philox(0x5EED5EEDull).stream("synth-glyph").stream(cls);
  std::vector<double> img(kImg * kImg, 0.0);
  render_blob(rng, img.data(), kMaxShift);
  return img;
}

}  // namespace

GrayMnist synth_mnist(int64_t count, uint64_t seed) {
  if (count < 1) throw ArgumentError("synth_mnist: count must be >= 1");
  static const std::vector<std::vector<double>> glyphs = [] {
    std::vector<std::vector<double>> g;
    for (int c = 0; c < 10; ++c) g.push_back(make_glyph(c));
    return g;
  }();

  GrayMnist out;
  out.count = count;
  out.rows = kImg;
  out.cols = kImg;
  out.images.resize(static_cast<size_t>(count) * kImg * kImg);
  out.labels.resize(static_cast<size_t>(count));

  Philox rng = Philox(seed).stream("synth-mnist");
  std::vector<double> clutter(kImg * kImg);
  for (int64_t i = 0; i < count; ++i) {
    const int cls = static_cast<int>(rng.below(10));
    out.labels[i] = static_cast<uint8_t>(cls);
    const int dy = static_cast<int>(rng.below(2 * kMaxShift + 1)) - kMaxShift;
    const int dx = static_cast<int>(rng.below(2 * kMaxShift + 1)) - kMaxShift;
    const double share =
        kGlyphShareLo + (kGlyphShareHi - kGlyphShareLo) * rng.next_double();
    const double gain = kContrastLo + (1.0 - kContrastLo) * rng.next_double();
    std::fill(clutter.begin(), clutter.end(), 0.0);
    render_blob(rng, clutter.data(), 0);
    uint8_t* dst = out.images.data() + i * kImg * kImg;
    const std::vector<double>& glyph = glyphs[cls];
    for (int y = 0; y < kImg; ++y) {
      for (int x = 0; x < kImg; ++x) {
        const int sy = y - dy, sx = x - dx;
        double shape = 0.0;
        if (sy >= 0 && sy < kImg && sx >= 0 && sx < kImg) {
          shape = glyph[sy * kImg + sx];
        }
        double v = gain * (share * shape +
                           (1.0 - share) * clutter[y * kImg + x]);
        v += kPixelNoise * rng.normal();
        v = std::clamp(v, 0.0, 1.0);
        dst[y * kImg + x] = static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return out;
}

namespace {

void write_u32_be(std::FILE* f, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  std::fwrite(b, 1, 4, f);
}

}  // namespace

void write_idx_images(const std::string& path, const GrayMnist& g) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ArgumentError("cannot open " + path + " for write");
  write_u32_be(f, kImagesMagic);
  write_u32_be(f, static_cast<uint32_t>(g.count));
  write_u32_be(f, static_cast<uint32_t>(g.rows));
  write_u32_be(f, static_cast<uint32_t>(g.cols));
  std::fwrite(g.images.data(), 1, g.images.size(), f);
  if (std::fclose(f) != 0) throw ArgumentError("short write to " + path);
}

void write_idx_labels(const std::string& path, const GrayMnist& g) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ArgumentError("cannot open " + path + " for write");
  write_u32_be(f, kLabelsMagic);
  write_u32_be(f, static_cast<uint32_t>(g.count));
  std::fwrite(g.labels.data(), 1, g.labels.size(), f);
  if (std::fclose(f) != 0) throw ArgumentError("short write to " + path);
}

}  // namespace shiftlab::data
