#include "igc/cost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "igc/linalg.hpp"

namespace igc {

namespace {

i64 stage_param_count(const StagePlan& p) {
  switch (p.kind) {
    case StageKind::GroupedPointwise:
      return p.in * p.out / p.groups;
    case StageKind::GroupedSpatial:
      return (p.in / p.groups) * p.out * p.spatial;
    case StageKind::ChannelwiseSpatial:
      return p.out * p.spatial;
  }
  return 0;
}

i64 plan_side_of(const StagePlan& p) {
  return p.kind == StageKind::GroupedPointwise
             ? 1
             : static_cast<i64>(std::llround(std::sqrt(static_cast<double>(p.spatial))));
}

}  // namespace

CostReport count_params(const NetworkSpec& net) {
  net.validate();
  CostReport rep;

  i64 h = net.input_h, w = net.input_w;
  const i64 stem_side = static_cast<i64>(std::llround(
      std::sqrt(static_cast<double>(net.stem.spatial_kernel))));
  h = conv_out_extent(h, stem_side, net.stem.stride, (stem_side - 1) / 2);
  w = conv_out_extent(w, stem_side, net.stem.stride, (stem_side - 1) / 2);
  CostRow stem_row;
  stem_row.name = "stem";
  stem_row.params_conv =
      net.input_channels * net.stem.out_channels * net.stem.spatial_kernel;
  stem_row.params_bn = 2 * net.stem.out_channels;
  stem_row.params = stem_row.params_conv + stem_row.params_bn;
  stem_row.madds = static_cast<u64>(stem_row.params_conv) *
                   static_cast<u64>(h) * static_cast<u64>(w);
  rep.rows.push_back(stem_row);

  const std::vector<BlockSpec> blocks = flatten_blocks(net);
  for (size_t bi = 0; bi < blocks.size(); ++bi) {
    CostRow row;
    row.name = "block" + std::to_string(bi) + "." +
               family_name(blocks[bi].family);
    for (const StagePlan& p : plan_block(blocks[bi])) {
      const i64 side = plan_side_of(p);
      const i64 oh = conv_out_extent(h, side, p.stride, (side - 1) / 2);
      const i64 ow = conv_out_extent(w, side, p.stride, (side - 1) / 2);
      row.params_conv += stage_param_count(p);
      row.params_bn += 2 * p.out;
      row.madds += static_cast<u64>(stage_param_count(p)) *
                   static_cast<u64>(oh) * static_cast<u64>(ow);
      h = oh;
      w = ow;
    }
    row.params = row.params_conv + row.params_bn;
    rep.rows.push_back(row);
  }

  for (const CostRow& row : rep.rows) {
    rep.params_backbone += row.params;
    rep.madds += row.madds;
  }
  const i64 feat =
      blocks.empty() ? net.stem.out_channels : blocks.back().out_channels;
  rep.params_classifier = feat * net.num_classes + net.num_classes;
  return rep;
}

u64 count_madds(const NetworkSpec& net) { return count_params(net).madds; }

namespace {

// Divisor a channel width must keep after scaling: the cs of every block
// touching that width (stem width counts as the first block's input).
i64 width_divisor(const NetworkSpec& net, size_t boundary) {
  // boundary b is the width between stage b-1 and stage b; boundary 0 is the
  // stem output width.
  i64 d = 1;
  if (boundary < net.stages.size())
    d = std::lcm(d, net.stages[boundary].block.effective_cs());
  if (boundary > 0)
    d = std::lcm(d, net.stages[boundary - 1].block.effective_cs());
  return d;
}

}  // namespace

namespace {

// Width scaling with divisibility-preserving rounding; the input spec may be
// pre-divisibility (the wider-variant search feeds one in).
NetworkSpec scale_widths(const NetworkSpec& net, double alpha) {
  if (alpha <= 0.0) throw ConfigError("width multiplier must be > 0");
  NetworkSpec scaled = net;
  i64 width = round_to_multiple(alpha * static_cast<double>(net.stem.out_channels),
                                width_divisor(net, 0));
  if (width <= 0) throw ConfigError("width multiplier collapses stem width to 0");
  scaled.stem.out_channels = width;
  for (size_t i = 0; i < net.stages.size(); ++i) {
    scaled.stages[i].block.in_channels = width;
    width = round_to_multiple(
        alpha * static_cast<double>(net.stages[i].block.out_channels),
        width_divisor(net, i + 1));
    if (width <= 0)
      throw ConfigError("width multiplier collapses stage " + std::to_string(i) +
                        " width to 0");
    scaled.stages[i].block.out_channels = width;
    BlockSpec& b = scaled.stages[i].block;
    b.skip = b.skip && b.stride == 1 && b.in_channels == b.out_channels;
  }
  scaled.validate();
  return scaled;
}

}  // namespace

NetworkSpec apply_width_multiplier(const NetworkSpec& net, double alpha) {
  net.validate();
  return scale_widths(net, alpha);
}

NetworkSpec build_igcv3_network(Igcv3Variant variant, const NetworkSpec& base) {
  base.validate();
  for (const StageSpec& st : base.stages)
    if (st.block.family != Family::MNV2)
      throw ConfigError("build_igcv3_network expects an MNV2-style base spec");
  const i64 target = count_params(base).params_backbone;
  const double tol = 0.05;

  if (variant == Igcv3Variant::Deeper) {
    NetworkSpec deep = base;
    for (StageSpec& st : deep.stages) {
      st.block.family = Family::IGCV3;
      st.block.g1 = 2;
      st.block.g2 = 2;
      st.block.cs = 0;
    }
    deep.validate();
    i64 params = count_params(deep).params_backbone;
    // grow repeats greedily, always taking the stage that closes the gap most
    while (params < target) {
      i64 best_stage = -1;
      i64 best_after = params;
      for (size_t i = 0; i < deep.stages.size(); ++i) {
        NetworkSpec probe = deep;
        probe.stages[i].repeat += 1;
        const i64 p = count_params(probe).params_backbone;
        if (best_stage < 0 ||
            std::llabs(p - target) < std::llabs(best_after - target)) {
          best_stage = static_cast<i64>(i);
          best_after = p;
        }
      }
      if (std::llabs(best_after - target) >= std::llabs(params - target)) break;
      deep.stages[static_cast<size_t>(best_stage)].repeat += 1;
      params = best_after;
    }
    if (std::llabs(params - target) >
        static_cast<i64>(tol * static_cast<double>(target)))
      throw ConfigError(
          "deeper variant: no repeat count lands within 5% of " +
          std::to_string(target) + "; nearest feasible " + std::to_string(params));
    return deep;
  }

  // wider: same depth, g1 = g2 = 4, scan a width multiplier
  NetworkSpec wide = base;
  for (StageSpec& st : wide.stages) {
    st.block.family = Family::IGCV3;
    st.block.g1 = 4;
    st.block.g2 = 4;
    st.block.cs = 0;
  }
  double best_alpha = 0.0;
  i64 best_params = -1;
  for (i64 step = 100; step <= 400; ++step) {
    const double alpha = static_cast<double>(step) / 100.0;
    NetworkSpec probe;
    try {
      probe = scale_widths(wide, alpha);
    } catch (const ConfigError&) {
      continue;
    }
    const i64 p = count_params(probe).params_backbone;
    if (best_params < 0 ||
        std::llabs(p - target) < std::llabs(best_params - target)) {
      best_params = p;
      best_alpha = alpha;
    }
  }
  if (best_params < 0 ||
      std::llabs(best_params - target) >
          static_cast<i64>(tol * static_cast<double>(target)))
    throw ConfigError("wider variant: no width scaling lands within 5% of " +
                      std::to_string(target) + "; nearest feasible " +
                      std::to_string(best_params));
  return scale_widths(wide, best_alpha);
}

}  // namespace igc
