#include "shiftlab/models.hpp"

#include <cmath>

namespace shiftlab::models {
namespace {

// Zero-mean Gaussian, std = sqrt(2 / fan_in); biases zero.
Tensor gaussian_init(std::vector<int64_t> shape, int64_t fan_in, Philox& rng) {
  Tensor t(std::move(shape));
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (int64_t i = 0; i < t.numel(); ++i) {
    t.data()[i] = std * rng.normal();
  }
  return t;
}

Featurizer::Block make_block(const ConvSpec& spec, int index, Philox& rng) {
  const int64_t fan_in = spec.in_ch * spec.kernel * spec.kernel;
  const std::string tag = "conv" + std::to_string(index);
  return Featurizer::Block{
      spec,
      Parameter(tag + ".weight",
                gaussian_init({spec.out_ch, spec.in_ch, spec.kernel,
                               spec.kernel},
                              fan_in, rng)),
      Parameter(tag + ".bias", Tensor({spec.out_ch})),
  };
}

Model build(std::vector<ConvSpec> specs, int64_t classes, const Philox& seed_rng) {
  Philox rng = seed_rng.stream("model-init");
  Model m;
  int index = 0;
  for (const ConvSpec& spec : specs) {
    m.featurizer.blocks.push_back(make_block(spec, ++index, rng));
  }
  m.featurizer.feature_dim = specs.back().out_ch;
  m.head.weight = Parameter(
      "head.weight",
      gaussian_init({classes, m.featurizer.feature_dim},
                    m.featurizer.feature_dim, rng));
  m.head.bias = Parameter("head.bias", Tensor({classes}));
  return m;
}

}  // namespace

NodeId Featurizer::forward(Graph& g, NodeId x) {
  NodeId cur = x;
  for (Block& block : blocks) {
    cur = g.conv2d(cur, g.param(block.weight), block.spec.stride,
                   block.spec.pad);
    cur = g.bias_channels(cur, g.param(block.bias));
    cur = g.relu(cur);
  }
  return g.global_mean_pool(cur);
}

NodeId ClassifierHead::forward(Graph& g, NodeId features) {
  return g.dense(features, g.param(weight), g.param(bias));
}

std::pair<NodeId, NodeId> Model::forward(Graph& g, NodeId x) {
  const NodeId z = featurizer.forward(g, x);
  return {z, head.forward(g, z)};
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (Featurizer::Block& b : featurizer.blocks) {
    out.push_back(&b.weight);
    out.push_back(&b.bias);
  }
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

int64_t Model::parameter_count() const {
  int64_t n = 0;
  for (const Featurizer::Block& b : featurizer.blocks) {
    n += b.weight.value.numel() + b.bias.value.numel();
  }
  return n + head.weight.value.numel() + head.bias.value.numel();
}

void Model::zero_grads() {
  for (Parameter* p : parameters()) p->zero_grad();
}

Model build_cs_cmnist_net(const Philox& init_rng) {
  return build(
      {
          {3, 256, 3, 2, 0},
          {256, 128, 3, 2, 0},
          {128, 64, 3, 2, 0},
      },
      10, init_rng);
}

Model build_cmnist_convnet(const Philox& init_rng) {
  return build(
      {
          {3, 64, 3, 2, 0},
          {64, 128, 3, 2, 0},
          {128, 128, 3, 2, 0},
          {128, 128, 3, 1, 1},
      },
      2, init_rng);
}

}  // namespace shiftlab::models
