#include "shiftlab/colored.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <numeric>

#include "shiftlab/errors.hpp"
#include "shiftlab/rng.hpp"

namespace shiftlab::data {
namespace {

constexpr int64_t kPixels = 28 * 28;

const std::vector<Rgb>& cmnist_palette() {
  static const std::vector<Rgb> p = {{1, 0, 0}, {0, 0, 1}};  // red, blue
  return p;
}

// Ten fixed, well-separated colors; class c always renders with palette[c].
const std::vector<Rgb>& cs_cmnist_palette() {
  static const std::vector<Rgb> p = {
      {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {1.0, 1.0, 0.0},
      {1.0, 0.0, 1.0}, {0.0, 1.0, 1.0}, {1.0, 0.5, 0.0}, {0.5, 0.0, 1.0},
      {0.0, 1.0, 0.5}, {1.0, 1.0, 1.0},
  };
  return p;
}

void require_pool(const GrayMnist& pool, int64_t needed) {
  if (pool.rows != 28 || pool.cols != 28) {
    throw ArgumentError("generation pool must be 28x28, got " +
                        std::to_string(pool.rows) + "x" +
                        std::to_string(pool.cols));
  }
  if (pool.count < needed) {
    throw ArgumentError("generation pool has " + std::to_string(pool.count) +
                        " images, needs " + std::to_string(needed));
  }
}

void copy_gray(const GrayMnist& pool, int64_t src, ColoredDataset& ds,
               int64_t dst) {
  std::memcpy(ds.gray.data() + dst * kPixels,
              pool.images.data() + src * kPixels, kPixels);
}

}  // namespace

const char* kind_name(DatasetKind kind) {
  return kind == DatasetKind::cmnist ? "cmnist" : "cs-cmnist";
}

DatasetKind kind_from_string(const std::string& name) {
  if (name == "cmnist") return DatasetKind::cmnist;
  if (name == "cs-cmnist") return DatasetKind::cs_cmnist;
  throw ConfigError("unknown dataset kind '" + name +
                    "' (want cmnist or cs-cmnist)");
}

Tensor ColoredDataset::images(std::span<const int64_t> indices) const {
  const int64_t n = static_cast<int64_t>(indices.size());
  Tensor out({n, 3, 28, 28});
  for (int64_t i = 0; i < n; ++i) {
    const int64_t src = indices[i];
    if (src < 0 || src >= count()) {
      throw IndexError("image index " + std::to_string(src) +
                       " outside dataset of " + std::to_string(count()));
    }
    const uint8_t* g = gray.data() + src * kPixels;
    const Rgb& c = palette[colors[src]];
    const double w[3] = {c.r, c.g, c.b};
    for (int ch = 0; ch < 3; ++ch) {
      double* dst = out.data() + (i * 3 + ch) * kPixels;
      if (w[ch] == 0.0) continue;  // tensor starts zeroed
      for (int64_t p = 0; p < kPixels; ++p) {
        dst[p] = w[ch] * (g[p] / 255.0);
      }
    }
  }
  return out;
}

ColoredDataset::Stats ColoredDataset::stats() const {
  Stats s;
  const int64_t n = count();
  int64_t eq = 0, flip = 0;
  for (int64_t i = 0; i < n; ++i) {
    eq += colors[i] == labels[i];
    flip += labels[i] != gray_labels[i];
  }
  s.p_color_eq_label = double(eq) / double(n);
  s.label_flip_rate = double(flip) / double(n);
  return s;
}

DomainTriple make_cmnist(const GrayMnist& pool, uint64_t seed) {
  const int64_t total = kCmnistSizes[0] + kCmnistSizes[1] + kCmnistSizes[2];
  require_pool(pool, total);
  const Philox master = Philox(seed).stream("cmnist");

  // Disjoint partition: one shuffle, three consecutive slices.
  std::vector<int64_t> perm(pool.count);
  std::iota(perm.begin(), perm.end(), 0);
  Philox shuffle_rng = master.stream("partition");
  for (int64_t i = pool.count - 1; i > 0; --i) {
    std::swap(perm[i], perm[shuffle_rng.below(i + 1)]);
  }

  DomainTriple triple{DatasetKind::cmnist, seed, {}};
  int64_t cursor = 0;
  for (int e = 0; e < 3; ++e) {
    ColoredDataset& ds = triple.domains[e];
    ds.kind = DatasetKind::cmnist;
    ds.seed = seed;
    ds.num_classes = 2;
    ds.palette = cmnist_palette();
    ds.domain = {e + 1, kDomainBias[e],
                 e == 2 ? DomainRole::unseen : DomainRole::seen,
                 kCmnistSizes[e]};
    const int64_t n = kCmnistSizes[e];
    ds.gray.resize(n * kPixels);
    ds.labels.resize(n);
    ds.gray_labels.resize(n);
    ds.colors.resize(n);
    ds.source_index.resize(n);
    Philox rng = master.stream("domain").stream(uint64_t(e + 1));
    for (int64_t i = 0; i < n; ++i) {
      const int64_t src = perm[cursor++];
      ds.source_index[i] = src;
      const uint8_t yg = pool.labels[src] <= 4 ? 0 : 1;
      const uint8_t y = yg ^ uint8_t(rng.bernoulli(kCmnistLabelNoise));
      const uint8_t c = y ^ uint8_t(rng.bernoulli(kDomainBias[e]));
      ds.gray_labels[i] = yg;
      ds.labels[i] = y;
      ds.colors[i] = c;
      copy_gray(pool, src, ds, i);
    }
  }
  return triple;
}

DomainTriple make_cs_cmnist(const GrayMnist& pool, uint64_t seed) {
  require_pool(pool, 1);
  const Philox master = Philox(seed).stream("cs-cmnist");

  DomainTriple triple{DatasetKind::cs_cmnist, seed, {}};
  for (int e = 0; e < 3; ++e) {
    ColoredDataset& ds = triple.domains[e];
    ds.kind = DatasetKind::cs_cmnist;
    ds.seed = seed;
    ds.num_classes = 10;
    ds.palette = cs_cmnist_palette();
    ds.domain = {e + 1, kDomainBias[e],
                 e == 2 ? DomainRole::unseen : DomainRole::seen,
                 kCsCmnistSize};
    const double theta = kDomainBias[e];
    const int64_t n = kCsCmnistSize;
    ds.gray.resize(n * kPixels);
    ds.labels.resize(n);
    ds.gray_labels.resize(n);
    ds.colors.resize(n);
    ds.source_index.resize(n);
    Philox rng = master.stream("domain").stream(uint64_t(e + 1));
    int64_t accepted = 0;
    while (accepted < n) {
      // proposals draw with replacement; images may repeat across proposals
      const int64_t src = static_cast<int64_t>(rng.below(pool.count));
      const uint8_t color = static_cast<uint8_t>(rng.below(10));
      const uint8_t yg = pool.labels[src];
      const double p_accept = color == yg ? 1.0 - theta : theta;
      if (!rng.bernoulli(p_accept)) continue;
      ds.gray_labels[accepted] = yg;
      ds.labels[accepted] = yg;
      ds.colors[accepted] = color;
      ds.source_index[accepted] = src;
      copy_gray(pool, src, ds, accepted);
      ++accepted;
    }
  }
  return triple;
}

SplitIndices split_train_val(const ColoredDataset& ds, double fraction,
                             uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ArgumentError("split fraction must be in (0,1), got " +
                        std::to_string(fraction));
  }
  const int64_t n = ds.count();
  const int64_t val_n = std::llround(fraction * double(n));
  if (val_n == 0 || val_n == n) {
    throw ArgumentError("degenerate split: " + std::to_string(val_n) + "/" +
                        std::to_string(n - val_n));
  }
  std::vector<int64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Philox rng =
      Philox(seed).stream("split").stream(uint64_t(ds.domain.domain_index));
  for (int64_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.below(i + 1)]);
  }
  SplitIndices out;
  out.val.assign(perm.begin(), perm.begin() + val_n);
  out.train.assign(perm.begin() + val_n, perm.end());
  return out;
}

// ---------------------------------------------------------------------------
// SLDS container. Layout, little-endian:
//   "SLDS" | u32 version | u8 kind | u8 domain_index | u8 role |
//   u8 num_classes | f64 bias | u64 seed | u64 count | u64 palette_count |
//   palette f64 triples | labels u8[count] | gray_labels u8[count] |
//   colors u8[count] | source_index i64[count] | gray u8[count*784]
// ---------------------------------------------------------------------------
namespace {

constexpr char kSldsMagic[4] = {'S', 'L', 'D', 'S'};
constexpr uint32_t kSldsVersion = 1;

struct CFile {
  std::FILE* f = nullptr;
  ~CFile() {
    if (f) std::fclose(f);
  }
};

void put(std::FILE* f, const void* p, size_t n, const std::string& path) {
  if (std::fwrite(p, 1, n, f) != n) {
    throw ArgumentError("short write to " + path);
  }
}

template <typename T>
void put_pod(std::FILE* f, T v, const std::string& path) {
  put(f, &v, sizeof(T), path);
}

struct SldsReader {
  std::FILE* f;
  std::string path;
  int64_t offset = 0;

  void get(void* p, size_t n) {
    if (std::fread(p, 1, n, f) != n) {
      throw FormatError(path + ": truncated at offset " +
                        std::to_string(offset));
    }
    offset += static_cast<int64_t>(n);
  }
  template <typename T>
  T pod() {
    T v;
    get(&v, sizeof(T));
    return v;
  }
};

}  // namespace

void save_slds(const std::string& path, const ColoredDataset& ds) {
  const std::string tmp = path + ".tmp";
  {
    CFile file{std::fopen(tmp.c_str(), "wb")};
    if (!file.f) throw ArgumentError("cannot open " + tmp + " for write");
    std::FILE* f = file.f;
    put(f, kSldsMagic, 4, tmp);
    put_pod(f, kSldsVersion, tmp);
    put_pod(f, uint8_t(ds.kind), tmp);
    put_pod(f, uint8_t(ds.domain.domain_index), tmp);
    put_pod(f, uint8_t(ds.domain.role), tmp);
    put_pod(f, uint8_t(ds.num_classes), tmp);
    put_pod(f, ds.domain.bias, tmp);
    put_pod(f, uint64_t(ds.seed), tmp);
    put_pod(f, uint64_t(ds.count()), tmp);
    put_pod(f, uint64_t(ds.palette.size()), tmp);
    for (const Rgb& c : ds.palette) {
      put_pod(f, c.r, tmp);
      put_pod(f, c.g, tmp);
      put_pod(f, c.b, tmp);
    }
    put(f, ds.labels.data(), ds.labels.size(), tmp);
    put(f, ds.gray_labels.data(), ds.gray_labels.size(), tmp);
    put(f, ds.colors.data(), ds.colors.size(), tmp);
    put(f, ds.source_index.data(),
        ds.source_index.size() * sizeof(int64_t), tmp);
    put(f, ds.gray.data(), ds.gray.size(), tmp);
  }
  std::filesystem::rename(tmp, path);
}

ColoredDataset load_slds(const std::string& path) {
  CFile file{std::fopen(path.c_str(), "rb")};
  if (!file.f) throw ArgumentError("cannot open " + path);
  SldsReader r{file.f, path};
  char magic[4];
  r.get(magic, 4);
  if (std::memcmp(magic, kSldsMagic, 4) != 0) {
    throw FormatError(path + ": bad magic at offset 0");
  }
  const uint32_t version = r.pod<uint32_t>();
  if (version != kSldsVersion) {
    throw FormatError(path + ": unsupported version " +
                      std::to_string(version) + " at offset 4");
  }
  ColoredDataset ds;
  ds.kind = static_cast<DatasetKind>(r.pod<uint8_t>());
  ds.domain.domain_index = r.pod<uint8_t>();
  ds.domain.role = static_cast<DomainRole>(r.pod<uint8_t>());
  ds.num_classes = r.pod<uint8_t>();
  ds.domain.bias = r.pod<double>();
  ds.seed = r.pod<uint64_t>();
  const uint64_t count = r.pod<uint64_t>();
  if (count > 10'000'000) {
    throw FormatError(path + ": implausible count at offset " +
                      std::to_string(r.offset - 8));
  }
  ds.domain.target_size = static_cast<int64_t>(count);
  const uint64_t ncolors = r.pod<uint64_t>();
  if (ncolors > 256) {
    throw FormatError(path + ": implausible palette size at offset " +
                      std::to_string(r.offset - 8));
  }
  ds.palette.resize(ncolors);
  for (Rgb& c : ds.palette) {
    c.r = r.pod<double>();
    c.g = r.pod<double>();
    c.b = r.pod<double>();
  }
  ds.labels.resize(count);
  r.get(ds.labels.data(), count);
  ds.gray_labels.resize(count);
  r.get(ds.gray_labels.data(), count);
  ds.colors.resize(count);
  r.get(ds.colors.data(), count);
  ds.source_index.resize(count);
  r.get(ds.source_index.data(), count * sizeof(int64_t));
  ds.gray.resize(count * kPixels);
  r.get(ds.gray.data(), ds.gray.size());
  for (int64_t i = 0; i < static_cast<int64_t>(count); ++i) {
    if (ds.colors[i] >= ncolors) {
      throw FormatError(path + ": color index out of palette range");
    }
  }
  return ds;
}

std::string slds_filename(DatasetKind kind, uint64_t seed, int domain_index) {
  return std::string(kind_name(kind)) + "-seed" + std::to_string(seed) +
         "-domain" + std::to_string(domain_index) + ".slds";
}

std::string default_cache_dir() {
  if (const char* env = std::getenv("SHIFTLAB_CACHE")) return env;
  return "slds-cache";
}

DomainTriple load_or_generate(DatasetKind kind, uint64_t seed,
                              const std::string& mnist_dir,
                              const std::string& cache_dir) {
  namespace fs = std::filesystem;
  std::array<std::string, 3> paths;
  bool all_cached = true;
  for (int e = 0; e < 3; ++e) {
    paths[e] = (fs::path(cache_dir) / slds_filename(kind, seed, e + 1)).string();
    all_cached = all_cached && fs::exists(paths[e]);
  }
  DomainTriple triple;
  if (all_cached) {
    triple.kind = kind;
    triple.seed = seed;
    for (int e = 0; e < 3; ++e) triple.domains[e] = load_slds(paths[e]);
    return triple;
  }
  const GrayMnist pool = load_mnist_pool(mnist_dir);
  triple = kind == DatasetKind::cmnist ? make_cmnist(pool, seed)
                                       : make_cs_cmnist(pool, seed);
  fs::create_directories(cache_dir);
  for (int e = 0; e < 3; ++e) save_slds(paths[e], triple.domains[e]);
  return triple;
}

}  // namespace shiftlab::data
