#pragma once

#include <functional>
#include <vector>

#include "igc/matrix.hpp"
#include "igc/tensor.hpp"

namespace igc {

Matrix matmul(const Matrix& a, const Matrix& b);

// Output spatial extent of a convolution along one axis.
i64 conv_out_extent(i64 in, i64 kernel, i64 stride, i64 pad);

// Unrolls channels [c0, c0+cc) of batch item `bi` into a
// (cc*kh*kw) x (oh*ow) patch matrix. Zero padding.
Matrix im2col(const Tensor4& x, i64 bi, i64 c0, i64 cc, i64 kh, i64 kw,
              i64 stride, i64 pad);

// Grouped 2-D convolution; weight is (out_channels, (in_channels/groups)*kh*kw)
// with rows of group g occupying the contiguous band [g*out/groups, ...).
Tensor4 conv2d(const Tensor4& input, const Matrix& weight, i64 kh, i64 kw,
               i64 stride, i64 pad, i64 groups);

struct Conv2dGrads {
  Tensor4 dinput;
  Matrix dweight;
};
Conv2dGrads conv2d_backward(const Tensor4& input, const Matrix& weight,
                            const Tensor4& upstream, i64 kh, i64 kw,
                            i64 stride, i64 pad, i64 groups);

Tensor4 relu(const Tensor4& x);
Tensor4 relu_backward(const Tensor4& x, const Tensor4& upstream);

enum class Mode { Train, Eval };

struct BatchNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  static BatchNormParams identity(i64 channels);
};

struct BatchNormState {
  std::vector<double> mean;
  std::vector<double> var;
  static BatchNormState fresh(i64 channels);  // mean 0, var 1
};

struct BatchNormResult {
  Tensor4 y;
  BatchNormState updated;        // new running stats (train mode)
  std::vector<double> mean;      // statistics used for normalization
  std::vector<double> inv_std;
};

// Train mode normalizes with batch statistics over (n, h, w) and returns the
// advanced running state; eval mode normalizes with `state` and returns it
// untouched. The input state is never mutated.
BatchNormResult batchnorm(const Tensor4& x, const BatchNormParams& params,
                          const BatchNormState& state, Mode mode, double eps,
                          double momentum_bn);

struct BatchNormGrads {
  Tensor4 dx;
  std::vector<double> dgamma;
  std::vector<double> dbeta;
};
BatchNormGrads batchnorm_backward(const Tensor4& x, const Tensor4& upstream,
                                  const BatchNormParams& params,
                                  const BatchNormResult& fwd, Mode mode);

// Central differences, one column per coordinate of x.
Matrix finite_difference_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    const std::vector<double>& x, double eps);

}  // namespace igc
