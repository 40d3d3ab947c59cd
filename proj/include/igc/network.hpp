#pragma once

#include "igc/blocks.hpp"

namespace igc {

// Executable classification network: stem conv + BN + ReLU, a chain of
// blocks, global average pooling and a linear classifier.
struct Network {
  NetworkSpec spec;
  ConvLayer stem;
  BatchNormLayer stem_bn;
  std::vector<Block> blocks;  // flattened repeats
  Matrix fc_weight;           // (num_classes, last width)
  std::vector<double> fc_bias;
};

Network build_network(const NetworkSpec& spec, u64 seed,
                      const BuildOptions& options = {});

struct NetCache {
  Mode mode = Mode::Train;
  ConvCache stem_conv;
  BNCache stem_bn;
  ReluCache stem_relu;
  std::vector<BlockCache> blocks;
  Tensor4 pre_pool;
  Matrix pooled;  // (n, width)
};

struct NetForward {
  Matrix logits;  // (n, num_classes)
  NetCache cache;
};
NetForward forward(const Network& net, const Tensor4& x, Mode mode);

struct NetGrads {
  ConvGrads stem;
  BatchNormGradsL stem_bn;
  std::vector<BlockGrads> blocks;
  Matrix dfc_weight;
  std::vector<double> dfc_bias;
};
NetGrads backward(const Network& net, const Matrix& dlogits,
                  const NetCache& cache);

void apply_bn_updates(Network& net, const NetCache& cache);

// Trainable tensors in a fixed traversal order; `decay` marks tensors that
// take weight decay (conv weights, BN scale, fc weight).
struct ParamRef {
  std::vector<double>* value;
  bool decay;
};
std::vector<ParamRef> param_refs(Network& net);

// Gradient tensors in the same traversal order as param_refs.
std::vector<const std::vector<double>*> grad_refs(const NetGrads& grads);

i64 total_param_values(const Network& net);

}  // namespace igc
