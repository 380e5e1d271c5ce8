// Writes a synthetic IDX image/label set with MNIST's file layout, for
// machines without the real files. Ten fixed glyph classes; deterministic
// in --seed.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "shiftlab/mnist.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic MNIST-format fixture generator"};
  std::string out_dir;
  uint64_t seed = 0;
  int64_t train_count = 60000;
  int64_t test_count = 10000;
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--train-count", train_count, "training set size");
  app.add_option("--test-count", test_count, "test set size");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    using namespace shiftlab::data;
    const GrayMnist train = synth_mnist(train_count, seed);
    const GrayMnist test = synth_mnist(test_count, seed + 1);
    write_idx_images((fs::path(out_dir) / "train-images-idx3-ubyte").string(),
                     train);
    write_idx_labels((fs::path(out_dir) / "train-labels-idx1-ubyte").string(),
                     train);
    write_idx_images((fs::path(out_dir) / "t10k-images-idx3-ubyte").string(),
                     test);
    write_idx_labels((fs::path(out_dir) / "t10k-labels-idx1-ubyte").string(),
                     test);
    std::printf("wrote %lld train + %lld test images to %s\n",
                static_cast<long long>(train_count),
                static_cast<long long>(test_count), out_dir.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
