#pragma once

#include <cstdint>
#include <vector>

#include "shiftlab/graph.hpp"
#include "shiftlab/rng.hpp"
#include "shiftlab/tensor.hpp"

namespace shiftlab::models {

struct ConvSpec {
  int64_t in_ch, out_ch, kernel, stride, pad;
};

// Representation function f: conv/relu blocks ending in a global mean pool.
struct Featurizer {
  struct Block {
    ConvSpec spec;
    Parameter weight;
    Parameter bias;
  };
  std::vector<Block> blocks;
  int64_t feature_dim = 0;

  NodeId forward(Graph& g, NodeId x);  // [N,3,H,W] -> [N, feature_dim]
};

// Classifier g: one dense layer feature_dim -> classes.
struct ClassifierHead {
  Parameter weight;
  Parameter bias;

  NodeId forward(Graph& g, NodeId features);
};

struct Model {
  Featurizer featurizer;
  ClassifierHead head;

  std::pair<NodeId, NodeId> forward(Graph& g, NodeId x);  // (features, logits)
  std::vector<Parameter*> parameters();
  int64_t parameter_count() const;
  void zero_grads();
};

// 3 -> 256 -> 128 -> 64 (3x3, stride 2) + global mean pool; head 64 -> 10.
Model build_cs_cmnist_net(const Philox& init_rng);

// 3 -> 64 -> 128 -> 128 -> 128 (3x3; stride 2,2,2,1) + global mean pool;
// head 128 -> 2.
Model build_cmnist_convnet(const Philox& init_rng);

}  // namespace shiftlab::models
