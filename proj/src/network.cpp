#include "igc/network.hpp"

#include <cmath>

namespace igc {

Network build_network(const NetworkSpec& spec, u64 seed,
                      const BuildOptions& options) {
  spec.validate();
  Rng rng(seed);
  Network net;
  net.spec = spec;

  const i64 side = static_cast<i64>(std::llround(
      std::sqrt(static_cast<double>(spec.stem.spatial_kernel))));
  if (side * side != spec.stem.spatial_kernel || side % 2 == 0)
    throw ConfigError("stem spatial_kernel is not the square of an odd side");
  KernelStage stem_stage = KernelStage::zeros(
      StageKind::GroupedSpatial, spec.input_channels, spec.stem.out_channels, 1,
      spec.stem.spatial_kernel);
  const double stddev = std::sqrt(
      2.0 / static_cast<double>(spec.input_channels * spec.stem.spatial_kernel));
  for (Matrix& b : stem_stage.blocks)
    for (double& v : b.data) v = rng.normal() * stddev;
  net.stem = ConvLayer{std::move(stem_stage), spec.stem.stride, (side - 1) / 2};
  net.stem_bn.params = BatchNormParams::identity(spec.stem.out_channels);
  net.stem_bn.state = BatchNormState::fresh(spec.stem.out_channels);

  for (const BlockSpec& bs : flatten_blocks(spec))
    net.blocks.push_back(build(bs, rng, options));

  const i64 feat = net.blocks.empty() ? spec.stem.out_channels
                                      : net.blocks.back().spec.out_channels;
  net.fc_weight = Matrix(spec.num_classes, feat);
  const double fc_std = std::sqrt(2.0 / static_cast<double>(feat));
  for (double& v : net.fc_weight.data) v = rng.normal() * fc_std;
  net.fc_bias.assign(static_cast<size_t>(spec.num_classes), 0.0);
  return net;
}

NetForward forward(const Network& net, const Tensor4& x, Mode mode) {
  if (x.c != net.spec.input_channels)
    throw ShapeError("network forward: input channel mismatch");
  NetForward r;
  r.cache.mode = mode;

  r.cache.stem_conv.input = x;
  const i64 side = static_cast<i64>(std::llround(
      std::sqrt(static_cast<double>(net.stem.stage.spatial_size))));
  Tensor4 cur = conv2d(x, stage_weight(net.stem.stage), side, side,
                       net.stem.stride, net.stem.pad, 1);
  BatchNormResult bn = batchnorm(cur, net.stem_bn.params, net.stem_bn.state,
                                 mode, net.stem_bn.eps, net.stem_bn.momentum);
  r.cache.stem_bn =
      BNCache{std::move(cur), bn.mean, bn.inv_std, std::move(bn.updated)};
  r.cache.stem_relu.input = bn.y;
  cur = relu(bn.y);

  for (const Block& block : net.blocks) {
    BlockForward bf = forward(block, cur, mode);
    r.cache.blocks.push_back(std::move(bf.cache));
    cur = std::move(bf.output);
  }

  r.cache.pre_pool = cur;
  const i64 plane = cur.plane();
  Matrix pooled(cur.n, cur.c);
  for (i64 bi = 0; bi < cur.n; ++bi)
    for (i64 c = 0; c < cur.c; ++c) {
      const double* p = cur.channel(bi, c);
      double s = 0.0;
      for (i64 i = 0; i < plane; ++i) s += p[i];
      pooled.at(bi, c) = s / static_cast<double>(plane);
    }
  r.cache.pooled = pooled;

  const Matrix wT = transpose(net.fc_weight);
  r.logits = matmul(pooled, wT);
  for (i64 bi = 0; bi < r.logits.rows; ++bi)
    for (i64 c = 0; c < r.logits.cols; ++c)
      r.logits.at(bi, c) += net.fc_bias[static_cast<size_t>(c)];
  return r;
}

NetGrads backward(const Network& net, const Matrix& dlogits,
                  const NetCache& cache) {
  if (cache.mode != Mode::Train)
    throw ContractError("backward requires a cache from a train-mode forward");
  if (cache.blocks.size() != net.blocks.size())
    throw ContractError("stale cache: block count mismatch");
  NetGrads g;

  // classifier
  const Matrix dlT = transpose(dlogits);
  g.dfc_weight = matmul(dlT, cache.pooled);  // (classes, width)
  g.dfc_bias.assign(static_cast<size_t>(dlogits.cols), 0.0);
  for (i64 bi = 0; bi < dlogits.rows; ++bi)
    for (i64 c = 0; c < dlogits.cols; ++c)
      g.dfc_bias[static_cast<size_t>(c)] += dlogits.at(bi, c);
  Matrix dpooled = matmul(dlogits, net.fc_weight);  // (n, width)

  const Tensor4& pre = cache.pre_pool;
  Tensor4 d(pre.n, pre.c, pre.h, pre.w);
  const i64 plane = pre.plane();
  for (i64 bi = 0; bi < pre.n; ++bi)
    for (i64 c = 0; c < pre.c; ++c) {
      const double v = dpooled.at(bi, c) / static_cast<double>(plane);
      double* p = d.channel(bi, c);
      for (i64 i = 0; i < plane; ++i) p[i] = v;
    }

  g.blocks.resize(net.blocks.size());
  for (i64 i = static_cast<i64>(net.blocks.size()) - 1; i >= 0; --i) {
    BlockBackward bb = backward(net.blocks[static_cast<size_t>(i)], d,
                                cache.blocks[static_cast<size_t>(i)]);
    g.blocks[static_cast<size_t>(i)] = std::move(bb.grads);
    d = std::move(bb.dinput);
  }

  d = relu_backward(cache.stem_relu.input, d);
  BatchNormResult fwd;
  fwd.mean = cache.stem_bn.mean;
  fwd.inv_std = cache.stem_bn.inv_std;
  BatchNormGrads bng = batchnorm_backward(cache.stem_bn.input, d,
                                          net.stem_bn.params, fwd, Mode::Train);
  g.stem_bn = BatchNormGradsL{std::move(bng.dgamma), std::move(bng.dbeta)};
  d = std::move(bng.dx);

  const i64 side = static_cast<i64>(std::llround(
      std::sqrt(static_cast<double>(net.stem.stage.spatial_size))));
  Conv2dGrads cg =
      conv2d_backward(cache.stem_conv.input, stage_weight(net.stem.stage), d,
                      side, side, net.stem.stride, net.stem.pad, 1);
  g.stem.dblocks.push_back(std::move(cg.dweight));
  return g;
}

void apply_bn_updates(Network& net, const NetCache& cache) {
  if (cache.mode != Mode::Train) return;
  net.stem_bn.state = cache.stem_bn.updated;
  for (size_t i = 0; i < net.blocks.size(); ++i)
    apply_bn_updates(net.blocks[i], cache.blocks[i]);
}

std::vector<ParamRef> param_refs(Network& net) {
  std::vector<ParamRef> refs;
  refs.push_back({&net.stem.stage.blocks[0].data, true});
  refs.push_back({&net.stem_bn.params.gamma, true});
  refs.push_back({&net.stem_bn.params.beta, false});
  for (Block& block : net.blocks)
    for (Layer& layer : block.layers) {
      if (auto* conv = std::get_if<ConvLayer>(&layer)) {
        for (Matrix& b : conv->stage.blocks) refs.push_back({&b.data, true});
      } else if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
        refs.push_back({&bn->params.gamma, true});
        refs.push_back({&bn->params.beta, false});
      }
    }
  refs.push_back({&net.fc_weight.data, true});
  refs.push_back({&net.fc_bias, false});
  return refs;
}

std::vector<const std::vector<double>*> grad_refs(const NetGrads& grads) {
  std::vector<const std::vector<double>*> refs;
  refs.push_back(&grads.stem.dblocks[0].data);
  refs.push_back(&grads.stem_bn.dgamma);
  refs.push_back(&grads.stem_bn.dbeta);
  for (const BlockGrads& bg : grads.blocks)
    for (const LayerGrads& lg : bg.layers) {
      if (const auto* cg = std::get_if<ConvGrads>(&lg)) {
        for (const Matrix& b : cg->dblocks) refs.push_back(&b.data);
      } else if (const auto* bng = std::get_if<BatchNormGradsL>(&lg)) {
        refs.push_back(&bng->dgamma);
        refs.push_back(&bng->dbeta);
      }
    }
  refs.push_back(&grads.dfc_weight.data);
  refs.push_back(&grads.dfc_bias);
  return refs;
}

i64 total_param_values(const Network& net) {
  i64 n = 0;
  for (const ParamRef& r : param_refs(const_cast<Network&>(net)))
    n += static_cast<i64>(r.value->size());
  return n;
}

}  // namespace igc
