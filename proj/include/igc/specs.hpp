#pragma once

#include <string>
#include <vector>

#include "igc/common.hpp"
#include "igc/errors.hpp"

namespace igc {

enum class Family { IGCV1, IGCV2, IGCV3, MNV1, MNV2 };

// Where ReLU sits relative to the block's convolutions.
// AfterFirstAndMiddle: after every conv except the last (MobileNetV2 layout).
// AfterMiddle: after the middle conv only (IGCV3 default layout).
// AfterLast: after the last conv only.
// None: linear block, no ReLU anywhere.
enum class ReluPlacement { AfterFirstAndMiddle, AfterMiddle, AfterLast, None };

const char* family_name(Family f);
const char* relu_placement_name(ReluPlacement p);

struct BlockSpec {
  Family family = Family::IGCV3;
  i64 in_channels = 0;
  i64 out_channels = 0;
  double expansion = 6.0;  // C_int = expansion * in_channels (IGCV3/MNV2)
  i64 spatial_kernel = 9;  // K taps, e.g. 9 for 3x3
  i64 stride = 1;
  i64 g1 = 1;
  i64 g2 = 1;
  i64 cs = 0;  // super-channel count; 0 means g1*g2
  ReluPlacement relu_placement = ReluPlacement::AfterMiddle;
  bool skip = false;

  i64 effective_cs() const { return cs > 0 ? cs : g1 * g2; }
  i64 internal_channels() const;
  i64 kernel_side() const;  // sqrt(spatial_kernel), validated odd
  void validate() const;
};

struct StemSpec {
  i64 out_channels = 0;
  i64 spatial_kernel = 9;
  i64 stride = 1;
};

struct StageSpec {
  BlockSpec block;
  i64 repeat = 1;
};

struct NetworkSpec {
  i64 input_channels = 3;
  i64 input_h = 8;
  i64 input_w = 8;
  StemSpec stem;
  std::vector<StageSpec> stages;
  i64 num_classes = 10;

  void validate() const;
};

// One BlockSpec per physical block: repeats after the first run at stride 1
// with in == out and keep the stage's skip request where legal.
std::vector<BlockSpec> flatten_blocks(const NetworkSpec& net);

enum class Schedule { StepDecay, Exponential };

struct TrainConfig {
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  Schedule schedule = Schedule::StepDecay;
  std::vector<i64> milestones;  // step-decay epochs
  double factor = 0.1;          // step-decay multiplier
  double gamma = 0.98;          // exponential per-epoch multiplier
  i64 epochs = 60;
  i64 batch_size = 8;
  u64 seed = 1;

  void validate() const;
};

}  // namespace igc
