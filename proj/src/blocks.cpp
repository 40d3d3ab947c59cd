#include "igc/blocks.hpp"

#include <cmath>
#include <string>

#include "igc/kernels.hpp"

namespace igc {

namespace {

// spatial side for a plan stage (1 for pointwise)
i64 plan_side(const StagePlan& p) {
  if (p.kind == StageKind::GroupedPointwise) return 1;
  const i64 side = static_cast<i64>(std::llround(std::sqrt(static_cast<double>(p.spatial))));
  return side;
}

bool relu_after(ReluPlacement placement, i64 idx, i64 nconvs) {
  switch (placement) {
    case ReluPlacement::None:
      return false;
    case ReluPlacement::AfterFirstAndMiddle:
      return idx != nconvs - 1;
    case ReluPlacement::AfterMiddle:
      return nconvs == 2 ? idx == 0 : (idx > 0 && idx < nconvs - 1);
    case ReluPlacement::AfterLast:
      return idx == nconvs - 1;
  }
  return false;
}

// Index (into the plan) of the first grouped non-channelwise stage, i.e. the
// stage whose output gets interleaved. -1 when the family has no permutation.
i64 perm_after_stage(const BlockSpec& spec, const std::vector<StagePlan>& plan) {
  if (spec.family == Family::MNV1 || spec.family == Family::MNV2) return -1;
  for (size_t i = 0; i < plan.size(); ++i)
    if (plan[i].kind != StageKind::ChannelwiseSpatial)
      return static_cast<i64>(i);
  return -1;
}

}  // namespace

std::vector<StagePlan> plan_block(const BlockSpec& spec, BlockOrder order) {
  spec.validate();
  const i64 in = spec.in_channels;
  const i64 out = spec.out_channels;
  const i64 k = spec.spatial_kernel;
  std::vector<StagePlan> plan;
  switch (spec.family) {
    case Family::IGCV3:
    case Family::MNV2: {
      const i64 cint = spec.internal_channels();
      if (order == BlockOrder::Inverted) {
        plan.push_back({StageKind::GroupedPointwise, in, cint, spec.g1, 1, 1});
        plan.push_back({StageKind::ChannelwiseSpatial, cint, cint, cint, k, spec.stride});
        plan.push_back({StageKind::GroupedPointwise, cint, out, spec.g2, 1, 1});
      } else {
        plan.push_back({StageKind::ChannelwiseSpatial, in, in, in, k, spec.stride});
        plan.push_back({StageKind::GroupedPointwise, in, cint, spec.g1, 1, 1});
        plan.push_back({StageKind::GroupedPointwise, cint, out, spec.g2, 1, 1});
      }
      break;
    }
    case Family::IGCV1:
      plan.push_back({StageKind::GroupedSpatial, in, in, spec.g1, k, spec.stride});
      plan.push_back({StageKind::GroupedPointwise, in, out, spec.g2, 1, 1});
      break;
    case Family::IGCV2:
      plan.push_back({StageKind::ChannelwiseSpatial, in, in, in, k, spec.stride});
      plan.push_back({StageKind::GroupedPointwise, in, in, spec.g1, 1, 1});
      plan.push_back({StageKind::GroupedPointwise, in, out, spec.g2, 1, 1});
      break;
    case Family::MNV1:
      plan.push_back({StageKind::ChannelwiseSpatial, in, in, in, k, spec.stride});
      plan.push_back({StageKind::GroupedPointwise, in, out, 1, 1, 1});
      break;
  }
  return plan;
}

namespace {

KernelStage init_stage(const StagePlan& p, Rng& rng) {
  KernelStage s = KernelStage::zeros(p.kind, p.in, p.out, p.groups, p.spatial);
  const double fan_in =
      static_cast<double>((p.in / s.groups) * p.spatial);
  const double stddev = std::sqrt(2.0 / fan_in);
  for (Matrix& b : s.blocks)
    for (double& v : b.data) v = rng.normal() * stddev;
  return s;
}

BatchNormLayer make_bn(i64 channels) {
  BatchNormLayer bn;
  bn.params = BatchNormParams::identity(channels);
  bn.state = BatchNormState::fresh(channels);
  return bn;
}

// Super-granularity image of a channel permutation; throws when the
// permutation does not move whole super-channels.
Permutation super_perm(const Permutation& chan_perm, i64 cs) {
  const i64 channels = chan_perm.size();
  if (channels % cs != 0)
    throw ConfigError("cs does not divide the permuted channel count");
  const i64 span = channels / cs;
  Permutation sp;
  sp.indices.resize(static_cast<size_t>(cs));
  for (i64 s = 0; s < cs; ++s) {
    const i64 dst0 = chan_perm.indices[static_cast<size_t>(s * span)];
    if (dst0 % span != 0)
      throw ComplementarityError("permutation does not respect super-channels");
    for (i64 o = 1; o < span; ++o)
      if (chan_perm.indices[static_cast<size_t>(s * span + o)] != dst0 + o)
        throw ComplementarityError("permutation does not respect super-channels");
    sp.indices[static_cast<size_t>(s)] = dst0 / span;
  }
  return sp;
}

}  // namespace

Block build(const BlockSpec& spec, Rng& rng, const BuildOptions& options) {
  spec.validate();
  const std::vector<StagePlan> plan = plan_block(spec, options.order);
  const i64 nconvs = static_cast<i64>(plan.size());
  const i64 perm_stage = perm_after_stage(spec, plan);
  const bool interleaved = perm_stage >= 0 && spec.g1 * spec.g2 > 1;

  Permutation perm;
  if (interleaved && !options.identity_permutations) {
    const i64 perm_channels = plan[static_cast<size_t>(perm_stage)].out;
    const i64 cs = spec.effective_cs();
    if (perm_channels % cs != 0 || spec.in_channels % cs != 0 ||
        spec.out_channels % cs != 0)
      throw ConfigError("cs = " + std::to_string(cs) +
                        " must divide the input, output and intermediate widths");
    perm = interleave_permutation(spec.g1, spec.g2, perm_channels);
    // validate the constructed pair on super-channels
    if (cs % spec.g1 != 0 || cs % spec.g2 != 0)
      throw ComplementarityError(
          "block " + std::string(family_name(spec.family)) + ": cs = " +
          std::to_string(cs) + " cannot balance g1 = " + std::to_string(spec.g1) +
          " and g2 = " + std::to_string(spec.g2) + " branches");
    const BranchAssignment first = contiguous_branches(cs, spec.g1);
    const BranchAssignment second = permuted_branches(super_perm(perm, cs), spec.g2);
    const SuperChannelPartition part =
        SuperChannelPartition::contiguous(perm_channels, cs);
    if (!check_loose(part, first, second))
      throw ComplementarityError(
          "block " + std::string(family_name(spec.family)) + ": grouped stages " +
          std::to_string(perm_stage) + " (g1=" + std::to_string(spec.g1) +
          ") and " + std::to_string(nconvs - 1) + " (g2=" + std::to_string(spec.g2) +
          ") violate the loose complementary condition at cs = " + std::to_string(cs));
  }

  Block block;
  block.spec = spec;
  for (i64 i = 0; i < nconvs; ++i) {
    const StagePlan& p = plan[static_cast<size_t>(i)];
    const i64 side = plan_side(p);
    ConvLayer conv;
    conv.stage = init_stage(p, rng);
    conv.stride = p.stride;
    conv.pad = (side - 1) / 2;
    block.layers.emplace_back(std::move(conv));
    block.layers.emplace_back(make_bn(p.out));
    if (relu_after(spec.relu_placement, i, nconvs))
      block.layers.emplace_back(ReluLayer{});
    if (i == perm_stage && interleaved && !options.identity_permutations &&
        !perm.is_identity())
      block.layers.emplace_back(PermuteLayer{perm});
  }
  return block;
}

BlockForward forward(const Block& block, const Tensor4& input, Mode mode) {
  if (input.c != block.spec.in_channels)
    throw ShapeError("block forward: input has " + std::to_string(input.c) +
                     " channels, block expects " +
                     std::to_string(block.spec.in_channels));
  BlockForward r;
  r.cache.owner = &block;
  r.cache.mode = mode;
  r.cache.input = input;
  Tensor4 x = input;
  for (const Layer& layer : block.layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      r.cache.layers.emplace_back(ConvCache{x});
      const i64 side = conv->stage.kind == StageKind::GroupedPointwise
                           ? 1
                           : static_cast<i64>(std::llround(std::sqrt(
                                 static_cast<double>(conv->stage.spatial_size))));
      x = conv2d(x, stage_weight(conv->stage), side, side, conv->stride,
                 conv->pad, conv->stage.groups);
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      BatchNormResult res =
          batchnorm(x, bn->params, bn->state, mode, bn->eps, bn->momentum);
      r.cache.layers.emplace_back(
          BNCache{x, res.mean, res.inv_std, std::move(res.updated)});
      x = std::move(res.y);
    } else if (const auto* pl = std::get_if<PermuteLayer>(&layer)) {
      r.cache.layers.emplace_back(std::monostate{});
      x = pl->perm.apply(x);
    } else {
      r.cache.layers.emplace_back(ReluCache{x});
      x = relu(x);
    }
  }
  if (block.spec.skip) {
    Tensor4 sum(x.n, x.c, x.h, x.w);
    kernels::active().add(static_cast<size_t>(x.size()), x.data.data(),
                          input.data.data(), sum.data.data());
    x = std::move(sum);
  }
  r.output = std::move(x);
  return r;
}

BlockBackward backward(const Block& block, const Tensor4& upstream,
                       const BlockCache& cache) {
  if (cache.owner != &block)
    throw ContractError("stale cache: produced by a different block");
  if (cache.mode != Mode::Train)
    throw ContractError("backward requires a cache from a train-mode forward");
  if (cache.layers.size() != block.layers.size())
    throw ContractError("stale cache: layer count mismatch");
  if (upstream.c != block.spec.out_channels)
    throw ShapeError("block backward: upstream channel mismatch");

  BlockBackward r;
  r.grads.layers.resize(block.layers.size());
  Tensor4 d = upstream;
  for (i64 i = static_cast<i64>(block.layers.size()) - 1; i >= 0; --i) {
    const Layer& layer = block.layers[static_cast<size_t>(i)];
    const LayerCache& lc = cache.layers[static_cast<size_t>(i)];
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      const auto& cc = std::get<ConvCache>(lc);
      const i64 side = conv->stage.kind == StageKind::GroupedPointwise
                           ? 1
                           : static_cast<i64>(std::llround(std::sqrt(
                                 static_cast<double>(conv->stage.spatial_size))));
      Conv2dGrads g = conv2d_backward(cc.input, stage_weight(conv->stage), d,
                                      side, side, conv->stride, conv->pad,
                                      conv->stage.groups);
      ConvGrads cg;
      const i64 br = conv->stage.out_channels / conv->stage.groups;
      for (i64 gi = 0; gi < conv->stage.groups; ++gi) {
        Matrix blockGrad(br, g.dweight.cols);
        for (i64 rr = 0; rr < br; ++rr)
          for (i64 cc2 = 0; cc2 < g.dweight.cols; ++cc2)
            blockGrad.at(rr, cc2) = g.dweight.at(gi * br + rr, cc2);
        cg.dblocks.push_back(std::move(blockGrad));
      }
      r.grads.layers[static_cast<size_t>(i)] = std::move(cg);
      d = std::move(g.dinput);
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      const auto& bc = std::get<BNCache>(lc);
      BatchNormResult fwd;
      fwd.mean = bc.mean;
      fwd.inv_std = bc.inv_std;
      BatchNormGrads g =
          batchnorm_backward(bc.input, d, bn->params, fwd, Mode::Train);
      r.grads.layers[static_cast<size_t>(i)] =
          BatchNormGradsL{std::move(g.dgamma), std::move(g.dbeta)};
      d = std::move(g.dx);
    } else if (const auto* pl = std::get_if<PermuteLayer>(&layer)) {
      r.grads.layers[static_cast<size_t>(i)] = std::monostate{};
      d = pl->perm.inverse().apply(d);
    } else {
      const auto& rc = std::get<ReluCache>(lc);
      d = relu_backward(rc.input, d);
      r.grads.layers[static_cast<size_t>(i)] = std::monostate{};
    }
  }
  if (block.spec.skip) {
    Tensor4 sum(d.n, d.c, d.h, d.w);
    kernels::active().add(static_cast<size_t>(d.size()), d.data.data(),
                          upstream.data.data(), sum.data.data());
    d = std::move(sum);
  }
  r.dinput = std::move(d);
  return r;
}

void apply_bn_updates(Block& block, const BlockCache& cache) {
  if (cache.owner != &block)
    throw ContractError("stale cache: produced by a different block");
  if (cache.mode != Mode::Train) return;
  for (size_t i = 0; i < block.layers.size(); ++i)
    if (auto* bn = std::get_if<BatchNormLayer>(&block.layers[i]))
      bn->state = std::get<BNCache>(cache.layers[i]).updated;
}

ComposedKernel composed_kernel(const Block& block) {
  ComposedKernel ck;
  ck.in_channels = block.spec.in_channels;
  ck.out_channels = block.spec.out_channels;
  for (const Layer& layer : block.layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&layer))
      ck.stages.emplace_back(conv->stage);
    else if (const auto* pl = std::get_if<PermuteLayer>(&layer))
      ck.stages.emplace_back(pl->perm);
  }
  ck.validate();
  return ck;
}

Matrix equivalent_dense_pointwise(const Block& block) {
  ComposedKernel ck;
  ck.in_channels = block.spec.in_channels;
  ck.out_channels = block.spec.out_channels;
  for (const Layer& layer : block.layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      if (conv->stage.kind == StageKind::ChannelwiseSpatial) continue;
      if (conv->stage.kind == StageKind::GroupedSpatial)
        throw CompositionError(
            "equivalent_dense_pointwise: grouped spatial stage cannot be "
            "collapsed into the pointwise product");
      ck.stages.emplace_back(conv->stage);
    } else if (const auto* pl = std::get_if<PermuteLayer>(&layer)) {
      ck.stages.emplace_back(pl->perm);
    }
  }
  return compose_dense(ck);
}

}  // namespace igc
