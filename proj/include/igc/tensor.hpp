#pragma once

#include <vector>

#include "igc/common.hpp"
#include "igc/errors.hpp"

namespace igc {

// 4-D activation tensor, fixed (batch, channel, row, column) layout.
struct Tensor4 {
  i64 n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(i64 n_, i64 c_, i64 h_, i64 w_)
      : n(n_), c(c_), h(h_), w(w_), data(checked_size(n_, c_, h_, w_), 0.0) {}

  static size_t checked_size(i64 n_, i64 c_, i64 h_, i64 w_) {
    if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0)
      throw ShapeError("negative tensor dimension");
    return static_cast<size_t>(n_) * static_cast<size_t>(c_) *
           static_cast<size_t>(h_) * static_cast<size_t>(w_);
  }

  i64 size() const { return n * c * h * w; }
  i64 plane() const { return h * w; }

  double& at(i64 in, i64 ic, i64 iy, i64 ix) {
    return data[static_cast<size_t>(((in * c + ic) * h + iy) * w + ix)];
  }
  double at(i64 in, i64 ic, i64 iy, i64 ix) const {
    return data[static_cast<size_t>(((in * c + ic) * h + iy) * w + ix)];
  }
  double* channel(i64 in, i64 ic) {
    return data.data() + (in * c + ic) * h * w;
  }
  const double* channel(i64 in, i64 ic) const {
    return data.data() + (in * c + ic) * h * w;
  }

  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

}  // namespace igc
