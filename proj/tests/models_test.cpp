#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "shiftlab/checkpoint.hpp"
#include "shiftlab/models.hpp"
#include "shiftlab/optimizer.hpp"
#include "shiftlab/rng.hpp"

using namespace shiftlab;
using namespace shiftlab::models;

namespace {

Tensor random_batch(int64_t n, Philox& rng) {
  Tensor t({n, 3, 28, 28});
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.next_double();
  return t;
}

}  // namespace

TEST_CASE("cs-cmnist net: shapes and determinism") {
  Philox rng(1);
  Model m = build_cs_cmnist_net(Philox(5));
  Graph g;
  const auto [z, logits] = m.forward(g, g.input(random_batch(8, rng)));
  CHECK(g.value(z).shape() == std::vector<int64_t>{8, 64});
  CHECK(g.value(logits).shape() == std::vector<int64_t>{8, 10});

  Philox rng2(1);
  Model m2 = build_cs_cmnist_net(Philox(5));
  Graph g2;
  const auto [z2, logits2] = m2.forward(g2, g2.input(random_batch(8, rng2)));
  (void)z2;
  bool same = true;
  for (int64_t i = 0; i < g.value(logits).numel(); ++i) {
    same = same && g.value(logits).data()[i] == g2.value(logits2).data()[i];
  }
  CHECK(same);
}

TEST_CASE("cs-cmnist net: parameter count matches the stated shapes") {
  Model m = build_cs_cmnist_net(Philox(0));
  // conv 3->256 (3x3): 256*3*9 + 256; 256->128: 128*256*9 + 128;
  // 128->64: 64*128*9 + 64; head: 10*64 + 10
  const int64_t expected = (256 * 3 * 9 + 256) + (128 * 256 * 9 + 128) +
                           (64 * 128 * 9 + 64) + (10 * 64 + 10);
  CHECK(expected == 376650);
  CHECK(m.parameter_count() == expected);
  CHECK(m.featurizer.feature_dim == 64);
}

TEST_CASE("cmnist convnet: shapes and gradient flow") {
  Philox rng(2);
  Model m = build_cmnist_convnet(Philox(6));
  Graph g;
  const auto [z, logits] = m.forward(g, g.input(random_batch(8, rng)));
  CHECK(g.value(z).shape() == std::vector<int64_t>{8, 128});
  CHECK(g.value(logits).shape() == std::vector<int64_t>{8, 2});

  // one training step populates a nonzero gradient for every parameter
  m.zero_grads();
  g.backward(g.softmax_cross_entropy(logits, {0, 1, 0, 1, 1, 0, 1, 0}));
  for (Parameter* p : m.parameters()) {
    CAPTURE(p->name);
    CHECK(p->grad_ready);
    double maxabs = 0.0;
    for (int64_t i = 0; i < p->grad.numel(); ++i) {
      maxabs = std::max(maxabs, std::abs(p->grad.data()[i]));
    }
    CHECK(maxabs > 0.0);
  }
  sgd_step(m.parameters(), 0.1, 1, {600, 0.1});
}

TEST_CASE("first-layer pre-activations track the sqrt(2) init scaling") {
  Model m = build_cs_cmnist_net(Philox(7));
  Philox rng(3);
  Tensor x({64, 3, 28, 28});
  for (int64_t i = 0; i < x.numel(); ++i) x.data()[i] = rng.normal();
  Graph g;
  const NodeId y = g.conv2d(g.input(x), g.param(m.featurizer.blocks[0].weight),
                            m.featurizer.blocks[0].spec.stride,
                            m.featurizer.blocks[0].spec.pad);
  const Tensor& v = g.value(y);
  double sum = 0.0, sumsq = 0.0;
  for (int64_t i = 0; i < v.numel(); ++i) {
    sum += v.data()[i];
    sumsq += v.data()[i] * v.data()[i];
  }
  const double mean = sum / double(v.numel());
  const double std = std::sqrt(sumsq / double(v.numel()) - mean * mean);
  const double predicted = std::sqrt(2.0);
  CHECK(std > 0.7 * predicted);
  CHECK(std < 1.3 * predicted);
}

TEST_CASE("feature outputs stay finite on [0,1] inputs") {
  Philox rng(4);
  Model m = build_cs_cmnist_net(Philox(8));
  Graph g;
  const auto [z, logits] = m.forward(g, g.input(random_batch(4, rng)));
  CHECK(g.value(z).all_finite());
  CHECK(g.value(logits).all_finite());
}

TEST_CASE("model parameters round trip through the checkpoint format") {
  Model m = build_cs_cmnist_net(Philox(9));
  std::vector<const Parameter*> view;
  for (Parameter* p : m.parameters()) view.push_back(p);
  const std::string path = "models_test.slt1";
  save_checkpoint(path, view);
  const std::vector<Parameter> loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == view.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].name == view[i]->name);
    CHECK(loaded[i].value.shape() == view[i]->value.shape());
    bool same = true;
    for (int64_t j = 0; j < loaded[i].value.numel(); ++j) {
      same = same && loaded[i].value.data()[j] == view[i]->value.data()[j];
    }
    CHECK(same);
  }
  std::remove(path.c_str());
}
