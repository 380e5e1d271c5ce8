#include "shiftlab/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>

#include "shiftlab/errors.hpp"

namespace shiftlab {
namespace {

constexpr char kMagic[4] = {'S', 'L', 'T', '1'};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void write_bytes(std::FILE* f, const void* p, size_t n, const std::string& path) {
  if (std::fwrite(p, 1, n, f) != n) {
    throw FormatError("checkpoint: short write to " + path);
  }
}

void write_u64(std::FILE* f, uint64_t v, const std::string& path) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(f, b, 8, path);
}

class Reader {
 public:
  Reader(std::FILE* f, std::string path) : f_(f), path_(std::move(path)) {}

  void bytes(void* p, size_t n) {
    if (std::fread(p, 1, n, f_) != n) {
      throw FormatError("checkpoint " + path_ + ": truncated at offset " +
                        std::to_string(offset_));
    }
    offset_ += static_cast<int64_t>(n);
  }

  uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }

  int64_t offset() const { return offset_; }

 private:
  std::FILE* f_;
  std::string path_;
  int64_t offset_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path,
                     std::span<const Parameter* const> params) {
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw ArgumentError("checkpoint: cannot open " + path + " for write");
  write_bytes(f.get(), kMagic, 4, path);
  write_u64(f.get(), params.size(), path);
  for (const Parameter* p : params) {
    write_u64(f.get(), p->name.size(), path);
    write_bytes(f.get(), p->name.data(), p->name.size(), path);
    write_u64(f.get(), p->value.rank(), path);
    for (const int64_t e : p->value.shape()) {
      write_u64(f.get(), static_cast<uint64_t>(e), path);
    }
    write_bytes(f.get(), p->value.data(),
                static_cast<size_t>(p->value.numel()) * sizeof(double), path);
  }
}

std::vector<Parameter> load_checkpoint(const std::string& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ArgumentError("checkpoint: cannot open " + path);
  Reader r(f.get(), path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("checkpoint " + path + ": bad magic at offset 0");
  }
  const uint64_t count = r.u64();
  std::vector<Parameter> out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    const uint64_t name_len = r.u64();
    if (name_len > (1u << 20)) {
      throw FormatError("checkpoint " + path + ": implausible name length at offset " +
                        std::to_string(r.offset() - 8));
    }
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    const uint64_t rank = r.u64();
    if (rank > 16) {
      throw FormatError("checkpoint " + path + ": implausible rank at offset " +
                        std::to_string(r.offset() - 8));
    }
    std::vector<int64_t> shape(rank);
    for (uint64_t a = 0; a < rank; ++a) {
      shape[a] = static_cast<int64_t>(r.u64());
    }
    Tensor value(shape);
    r.bytes(value.data(), static_cast<size_t>(value.numel()) * sizeof(double));
    out.emplace_back(std::move(name), std::move(value));
  }
  return out;
}

}  // namespace shiftlab
