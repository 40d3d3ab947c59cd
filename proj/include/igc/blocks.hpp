#pragma once

#include <variant>
#include <vector>

#include "igc/complementary.hpp"
#include "igc/linalg.hpp"
#include "igc/rng.hpp"
#include "igc/sparse.hpp"
#include "igc/specs.hpp"

namespace igc {

struct ConvLayer {
  KernelStage stage;
  i64 stride = 1;
  i64 pad = 0;
};

struct BatchNormLayer {
  BatchNormParams params;
  BatchNormState state;
  double eps = 1e-5;
  double momentum = 0.1;
};

struct PermuteLayer {
  Permutation perm;
};

struct ReluLayer {};

using Layer = std::variant<ConvLayer, BatchNormLayer, PermuteLayer, ReluLayer>;

enum class BlockOrder { Inverted, ChannelwiseFirst };

struct BuildOptions {
  // Diagnostic hook: keep grouped stages but drop the interleaving, skipping
  // the complementarity validation. Produces a structurally sparse composed
  // kernel on purpose.
  bool identity_permutations = false;
  BlockOrder order = BlockOrder::Inverted;
};

struct Block {
  BlockSpec spec;
  std::vector<Layer> layers;
};

// Shape-level recipe shared by the builder and the cost model.
struct StagePlan {
  StageKind kind;
  i64 in = 0, out = 0, groups = 1, spatial = 1, stride = 1;
};
std::vector<StagePlan> plan_block(const BlockSpec& spec,
                                  BlockOrder order = BlockOrder::Inverted);

Block build(const BlockSpec& spec, Rng& rng, const BuildOptions& options = {});

struct ConvCache {
  Tensor4 input;
};
struct BNCache {
  Tensor4 input;
  std::vector<double> mean, inv_std;
  BatchNormState updated;
};
struct ReluCache {
  Tensor4 input;
};
using LayerCache = std::variant<ConvCache, BNCache, ReluCache, std::monostate>;

struct BlockCache {
  const Block* owner = nullptr;
  Mode mode = Mode::Train;
  Tensor4 input;
  std::vector<LayerCache> layers;
};

struct BlockForward {
  Tensor4 output;
  BlockCache cache;
};
BlockForward forward(const Block& block, const Tensor4& input, Mode mode);

struct ConvGrads {
  std::vector<Matrix> dblocks;  // one per group, matching KernelStage::blocks
};
struct BatchNormGradsL {
  std::vector<double> dgamma, dbeta;
};
using LayerGrads = std::variant<ConvGrads, BatchNormGradsL, std::monostate>;

struct BlockGrads {
  std::vector<LayerGrads> layers;
};
struct BlockBackward {
  Tensor4 dinput;
  BlockGrads grads;
};
BlockBackward backward(const Block& block, const Tensor4& upstream,
                       const BlockCache& cache);

// Commits the running BN statistics recorded by a train-mode forward.
void apply_bn_updates(Block& block, const BlockCache& cache);

// Channel connectivity chain of the whole block (channel-wise stages included
// as identity links).
ComposedKernel composed_kernel(const Block& block);

// Numeric product of the block's pointwise stages and permutations; the
// channel-wise spatial stage is excluded from the product.
Matrix equivalent_dense_pointwise(const Block& block);

}  // namespace igc
