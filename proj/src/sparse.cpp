#include "igc/sparse.hpp"

#include <numeric>
#include <string>

#include "igc/linalg.hpp"

namespace igc {

KernelStage KernelStage::zeros(StageKind kind, i64 in_channels, i64 out_channels,
                               i64 groups, i64 spatial_size) {
  KernelStage s;
  s.kind = kind;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.groups = groups;
  s.spatial_size = spatial_size;
  if (kind == StageKind::ChannelwiseSpatial) s.groups = in_channels;
  if (kind == StageKind::GroupedPointwise) s.spatial_size = 1;
  s.validate();
  const i64 br = s.out_channels / s.groups;
  const i64 bc = (s.in_channels / s.groups) * s.spatial_size;
  s.blocks.assign(static_cast<size_t>(s.groups), Matrix(br, bc));
  return s;
}

void KernelStage::validate() const {
  if (in_channels <= 0 || out_channels <= 0 || groups <= 0 || spatial_size <= 0)
    throw ConfigError("kernel stage: dimensions must be positive");
  if (in_channels % groups != 0 || out_channels % groups != 0)
    throw ConfigError("kernel stage: channels (" + std::to_string(in_channels) +
                      "->" + std::to_string(out_channels) +
                      ") not divisible by groups " + std::to_string(groups));
  if (kind == StageKind::ChannelwiseSpatial &&
      (groups != in_channels || in_channels != out_channels))
    throw ConfigError("channelwise stage requires groups == in == out channels");
  if (kind == StageKind::GroupedPointwise && spatial_size != 1)
    throw ConfigError("pointwise stage requires spatial_size == 1");
  if (!blocks.empty()) {
    if (static_cast<i64>(blocks.size()) != groups)
      throw ShapeError("kernel stage: block count != groups");
    const i64 br = out_channels / groups;
    const i64 bc = (in_channels / groups) * spatial_size;
    for (const Matrix& b : blocks)
      if (b.rows != br || b.cols != bc)
        throw ShapeError("kernel stage: block is " + std::to_string(b.rows) +
                         "x" + std::to_string(b.cols) + ", expected " +
                         std::to_string(br) + "x" + std::to_string(bc));
  }
}

Permutation Permutation::identity(i64 n) {
  Permutation p;
  p.indices.resize(static_cast<size_t>(n));
  std::iota(p.indices.begin(), p.indices.end(), 0);
  return p;
}

Permutation Permutation::inverse() const {
  Permutation inv;
  inv.indices.assign(indices.size(), 0);
  for (i64 src = 0; src < size(); ++src)
    inv.indices[static_cast<size_t>(indices[static_cast<size_t>(src)])] = src;
  return inv;
}

bool Permutation::is_identity() const {
  for (i64 i = 0; i < size(); ++i)
    if (indices[static_cast<size_t>(i)] != i) return false;
  return true;
}

void Permutation::validate() const {
  std::vector<bool> seen(indices.size(), false);
  for (i64 dst : indices) {
    if (dst < 0 || dst >= size() || seen[static_cast<size_t>(dst)])
      throw ConfigError("permutation: indices are not a bijection");
    seen[static_cast<size_t>(dst)] = true;
  }
}

Tensor4 Permutation::apply(const Tensor4& x) const {
  if (x.c != size()) throw ShapeError("permutation: channel count mismatch");
  Tensor4 y(x.n, x.c, x.h, x.w);
  const i64 plane = x.plane();
  for (i64 bi = 0; bi < x.n; ++bi)
    for (i64 c = 0; c < x.c; ++c) {
      const double* src = x.channel(bi, c);
      double* dst = y.channel(bi, indices[static_cast<size_t>(c)]);
      for (i64 i = 0; i < plane; ++i) dst[i] = src[i];
    }
  return y;
}

namespace {

i64 stage_in(const ComposedStage& s) {
  if (const auto* k = std::get_if<KernelStage>(&s)) return k->in_channels;
  return std::get<Permutation>(s).size();
}

i64 stage_out(const ComposedStage& s) {
  if (const auto* k = std::get_if<KernelStage>(&s)) return k->out_channels;
  return std::get<Permutation>(s).size();
}

}  // namespace

void ComposedKernel::validate() const {
  if (stages.empty()) throw ConfigError("composed kernel: no stages");
  i64 cur = in_channels;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (stage_in(stages[i]) != cur)
      throw ShapeError("composed kernel: stage " + std::to_string(i) +
                       " expects " + std::to_string(stage_in(stages[i])) +
                       " channels, chain carries " + std::to_string(cur));
    cur = stage_out(stages[i]);
  }
  if (cur != out_channels)
    throw ShapeError("composed kernel: chain ends at " + std::to_string(cur) +
                     " channels, declared " + std::to_string(out_channels));
}

Matrix materialize(const KernelStage& stage) {
  stage.validate();
  Matrix m(stage.out_channels, stage.in_channels * stage.spatial_size);
  const i64 br = stage.out_channels / stage.groups;
  const i64 cin_g = stage.in_channels / stage.groups;
  for (i64 g = 0; g < stage.groups; ++g) {
    const Matrix& b = stage.blocks[static_cast<size_t>(g)];
    for (i64 r = 0; r < br; ++r)
      for (i64 lc = 0; lc < cin_g; ++lc)
        for (i64 t = 0; t < stage.spatial_size; ++t)
          m.at(g * br + r, (g * cin_g + lc) * stage.spatial_size + t) =
              b.at(r, lc * stage.spatial_size + t);
  }
  return m;
}

Matrix stage_weight(const KernelStage& stage) {
  stage.validate();
  const i64 br = stage.out_channels / stage.groups;
  const i64 bc = (stage.in_channels / stage.groups) * stage.spatial_size;
  Matrix w(stage.out_channels, bc);
  for (i64 g = 0; g < stage.groups; ++g) {
    const Matrix& b = stage.blocks[static_cast<size_t>(g)];
    for (i64 r = 0; r < br; ++r)
      for (i64 c = 0; c < bc; ++c) w.at(g * br + r, c) = b.at(r, c);
  }
  return w;
}

Permutation interleave_permutation(i64 groups_before, i64 groups_after,
                                   i64 channels) {
  if (groups_before < 1 || groups_after < 1 || channels < 1)
    throw ConfigError("interleave_permutation: counts must be positive");
  if (channels % (groups_before * groups_after) != 0)
    throw ConfigError("interleave_permutation: channels " +
                      std::to_string(channels) + " not divisible by " +
                      std::to_string(groups_before) + "*" +
                      std::to_string(groups_after));
  const i64 span = channels / (groups_before * groups_after);
  Permutation p;
  p.indices.resize(static_cast<size_t>(channels));
  for (i64 g = 0; g < groups_before; ++g)
    for (i64 m = 0; m < groups_after; ++m)
      for (i64 o = 0; o < span; ++o)
        p.indices[static_cast<size_t>((g * groups_after + m) * span + o)] =
            (m * groups_before + g) * span + o;
  return p;
}

SupportMatrix stage_support(const ComposedStage& stage) {
  if (const auto* p = std::get_if<Permutation>(&stage)) {
    SupportMatrix s(p->size(), p->size());
    for (i64 src = 0; src < p->size(); ++src)
      s.at(p->indices[static_cast<size_t>(src)], src) = 1;
    return s;
  }
  const KernelStage& k = std::get<KernelStage>(stage);
  SupportMatrix s(k.out_channels, k.in_channels);
  if (k.kind == StageKind::ChannelwiseSpatial) {
    for (i64 c = 0; c < k.in_channels; ++c) s.at(c, c) = 1;
    return s;
  }
  const i64 br = k.out_channels / k.groups;
  const i64 bc = k.in_channels / k.groups;
  for (i64 g = 0; g < k.groups; ++g)
    for (i64 r = 0; r < br; ++r)
      for (i64 c = 0; c < bc; ++c) s.at(g * br + r, g * bc + c) = 1;
  return s;
}

namespace {

SupportMatrix bool_matmul(const SupportMatrix& a, const SupportMatrix& b) {
  SupportMatrix out(a.rows, b.cols);
  for (i64 r = 0; r < a.rows; ++r)
    for (i64 k = 0; k < a.cols; ++k) {
      if (!a.at(r, k)) continue;
      for (i64 c = 0; c < b.cols; ++c)
        if (b.at(k, c)) out.at(r, c) = 1;
    }
  return out;
}

}  // namespace

SupportMatrix compose_support(const ComposedKernel& kernel) {
  kernel.validate();
  SupportMatrix total = stage_support(kernel.stages.front());
  for (size_t i = 1; i < kernel.stages.size(); ++i)
    total = bool_matmul(stage_support(kernel.stages[i]), total);
  return total;
}

Matrix permutation_matrix(const Permutation& p) {
  Matrix m(p.size(), p.size());
  for (i64 src = 0; src < p.size(); ++src)
    m.at(p.indices[static_cast<size_t>(src)], src) = 1.0;
  return m;
}

Matrix compose_dense(const ComposedKernel& kernel) {
  kernel.validate();
  for (const ComposedStage& s : kernel.stages)
    if (const auto* k = std::get_if<KernelStage>(&s))
      if (k->spatial_size != 1 || k->kind != StageKind::GroupedPointwise)
        throw CompositionError(
            "compose_dense: spatial stage present; a numeric collapse across "
            "spatial taps is undefined");
  Matrix total = std::holds_alternative<Permutation>(kernel.stages.front())
                     ? permutation_matrix(std::get<Permutation>(kernel.stages.front()))
                     : materialize(std::get<KernelStage>(kernel.stages.front()));
  for (size_t i = 1; i < kernel.stages.size(); ++i) {
    const Matrix m = std::holds_alternative<Permutation>(kernel.stages[i])
                         ? permutation_matrix(std::get<Permutation>(kernel.stages[i]))
                         : materialize(std::get<KernelStage>(kernel.stages[i]));
    total = matmul(m, total);
  }
  return total;
}

i64 param_count(const KernelStage& stage) {
  stage.validate();
  switch (stage.kind) {
    case StageKind::GroupedPointwise:
      return stage.in_channels * stage.out_channels / stage.groups;
    case StageKind::GroupedSpatial:
      return (stage.in_channels / stage.groups) * stage.out_channels *
             stage.spatial_size;
    case StageKind::ChannelwiseSpatial:
      return stage.out_channels * stage.spatial_size;
  }
  return 0;
}

}  // namespace igc
