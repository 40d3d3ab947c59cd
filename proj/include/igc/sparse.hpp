#pragma once

#include <variant>
#include <vector>

#include "igc/matrix.hpp"
#include "igc/tensor.hpp"

namespace igc {

enum class StageKind { GroupedPointwise, GroupedSpatial, ChannelwiseSpatial };

// One factor of a composed kernel: a grouped (block-diagonal) or channel-wise
// weight matrix. Only the per-group blocks are stored; structural zeros are
// implicit. Block g is (out_channels/groups) x ((in_channels/groups)*spatial_size).
struct KernelStage {
  StageKind kind = StageKind::GroupedPointwise;
  i64 in_channels = 0;
  i64 out_channels = 0;
  i64 groups = 1;
  i64 spatial_size = 1;  // K taps per channel; 1 for pointwise
  std::vector<Matrix> blocks;

  static KernelStage zeros(StageKind kind, i64 in_channels, i64 out_channels,
                           i64 groups, i64 spatial_size);
  void validate() const;
};

// Bijective channel reindexing. indices[src] = dst.
struct Permutation {
  std::vector<i64> indices;

  i64 size() const { return static_cast<i64>(indices.size()); }
  static Permutation identity(i64 n);
  Permutation inverse() const;
  bool is_identity() const;
  void validate() const;

  // Reorders the channel axis: out channel indices[c] = in channel c.
  Tensor4 apply(const Tensor4& x) const;
};

using ComposedStage = std::variant<KernelStage, Permutation>;

// Ordered factor chain; stages[0] is applied to the input first.
struct ComposedKernel {
  std::vector<ComposedStage> stages;
  i64 in_channels = 0;
  i64 out_channels = 0;

  void validate() const;  // checks the dimension chain
};

// Dense (out, in*spatial) layout with explicit structural zeros.
Matrix materialize(const KernelStage& stage);

// Execution layout used by conv2d: (out, (in/groups)*spatial).
Matrix stage_weight(const KernelStage& stage);

// Block-shuffle channel permutation: with S = channels/(groups_before*groups_after),
// channel (g*groups_after + m)*S + o moves to (m*groups_before + g)*S + o. Every
// destination branch of the following convolution receives exactly S channels
// from each source branch.
Permutation interleave_permutation(i64 groups_before, i64 groups_after,
                                   i64 channels);

// Channel-granularity connectivity of one stage (channel-wise spatial stages
// contribute identity).
SupportMatrix stage_support(const ComposedStage& stage);

// Boolean product of per-stage supports: entry (o, i) is true iff output
// channel o has any path to input channel i.
SupportMatrix compose_support(const ComposedKernel& kernel);

Matrix permutation_matrix(const Permutation& p);

// Numeric product of materialized stages; pointwise chains only.
Matrix compose_dense(const ComposedKernel& kernel);

// Structurally nonzero entries of the stage.
i64 param_count(const KernelStage& stage);

}  // namespace igc
