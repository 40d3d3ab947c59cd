#include "igc/specs.hpp"

#include <cmath>
#include <numeric>

namespace igc {

const char* family_name(Family f) {
  switch (f) {
    case Family::IGCV1: return "igcv1";
    case Family::IGCV2: return "igcv2";
    case Family::IGCV3: return "igcv3";
    case Family::MNV1: return "mnv1";
    case Family::MNV2: return "mnv2";
  }
  return "?";
}

const char* relu_placement_name(ReluPlacement p) {
  switch (p) {
    case ReluPlacement::AfterFirstAndMiddle: return "after_first_and_middle";
    case ReluPlacement::AfterMiddle: return "after_middle";
    case ReluPlacement::AfterLast: return "after_last";
    case ReluPlacement::None: return "none";
  }
  return "?";
}

i64 BlockSpec::kernel_side() const {
  const i64 side = static_cast<i64>(std::llround(std::sqrt(static_cast<double>(spatial_kernel))));
  if (side * side != spatial_kernel || side % 2 == 0)
    throw ConfigError("spatial_kernel: " + std::to_string(spatial_kernel) +
                      " is not the square of an odd side");
  return side;
}

i64 BlockSpec::internal_channels() const {
  const i64 divisor = std::max<i64>(effective_cs(), 1);
  const i64 cint = round_to_multiple(expansion * static_cast<double>(in_channels),
                                     divisor);
  if (cint <= 0)
    throw ConfigError("expansion: internal width collapses to zero");
  return cint;
}

void BlockSpec::validate() const {
  if (in_channels < 1 || out_channels < 1)
    throw ConfigError("in_channels/out_channels must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (g1 < 1 || g2 < 1) throw ConfigError("g1/g2 must be >= 1");
  if (expansion <= 0.0) throw ConfigError("expansion must be > 0");
  (void)kernel_side();
  if (skip && (stride != 1 || in_channels != out_channels))
    throw ConfigError("skip requires stride == 1 and in_channels == out_channels");
  switch (family) {
    case Family::MNV1:
    case Family::MNV2:
      if (g1 != 1 || g2 != 1)
        throw ConfigError(std::string(family_name(family)) +
                          " requires g1 == g2 == 1");
      break;
    case Family::IGCV1:
    case Family::IGCV2:
    case Family::IGCV3: {
      const i64 common = std::gcd(in_channels, out_channels);
      if (common % (g1 * g2) != 0)
        throw ConfigError("g1*g2 = " + std::to_string(g1 * g2) +
                          " must divide gcd(in_channels, out_channels) = " +
                          std::to_string(common));
      break;
    }
  }
  if (cs != 0 && cs < 1) throw ConfigError("cs must be >= 1 (or 0 for auto)");
}

void NetworkSpec::validate() const {
  if (input_channels < 1 || input_h < 1 || input_w < 1)
    throw ConfigError("network input dimensions must be >= 1");
  if (stem.out_channels < 1) throw ConfigError("stem_channels must be >= 1");
  if (stem.stride < 1) throw ConfigError("stem_stride must be >= 1");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (stages.empty()) throw ConfigError("no blocks");
  i64 width = stem.out_channels;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].repeat < 1)
      throw ConfigError("stage " + std::to_string(i) + ": repeat must be >= 1");
    const BlockSpec& b = stages[i].block;
    if (b.in_channels != width)
      throw ConfigError("stage " + std::to_string(i) + ": in_channels " +
                        std::to_string(b.in_channels) +
                        " does not chain from previous width " +
                        std::to_string(width));
    // stage-level skip is a request, honored only where legal
    BlockSpec legal = b;
    legal.skip = b.skip && b.stride == 1 && b.in_channels == b.out_channels;
    legal.validate();
    width = b.out_channels;
  }
}

std::vector<BlockSpec> flatten_blocks(const NetworkSpec& net) {
  net.validate();
  std::vector<BlockSpec> out;
  for (const StageSpec& st : net.stages) {
    for (i64 r = 0; r < st.repeat; ++r) {
      BlockSpec b = st.block;
      if (r > 0) {
        b.in_channels = st.block.out_channels;
        b.stride = 1;
      }
      b.skip = b.skip && b.stride == 1 && b.in_channels == b.out_channels;
      b.validate();
      out.push_back(b);
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (lr0 <= 0.0) throw ConfigError("lr0 must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ConfigError("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (schedule == Schedule::StepDecay) {
    for (size_t i = 1; i < milestones.size(); ++i)
      if (milestones[i] <= milestones[i - 1])
        throw ConfigError("milestones must be strictly increasing");
    if (factor <= 0.0) throw ConfigError("factor must be > 0");
  } else {
    if (gamma <= 0.0) throw ConfigError("gamma must be > 0");
  }
}

}  // namespace igc
