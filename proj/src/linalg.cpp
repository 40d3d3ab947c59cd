#include "igc/linalg.hpp"

#include <cmath>
#include <string>

#include "igc/kernels.hpp"

namespace igc {

namespace {

std::string shape_str(i64 r, i64 c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void check_finite(const double* p, i64 n, const char* what) {
  for (i64 i = 0; i < n; ++i)
    if (!std::isfinite(p[i]))
      throw NumericError(std::string("non-finite value in ") + what);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw ShapeError("matmul: inner dimensions disagree, " +
                     shape_str(a.rows, a.cols) + " x " + shape_str(b.rows, b.cols));
  Matrix c(a.rows, b.cols);
  kernels::active().gemm(static_cast<size_t>(a.rows), static_cast<size_t>(b.cols),
                         static_cast<size_t>(a.cols), a.data.data(),
                         b.data.data(), c.data.data(), false);
  return c;
}

i64 conv_out_extent(i64 in, i64 kernel, i64 stride, i64 pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

Matrix im2col(const Tensor4& x, i64 bi, i64 c0, i64 cc, i64 kh, i64 kw,
              i64 stride, i64 pad) {
  const i64 oh = conv_out_extent(x.h, kh, stride, pad);
  const i64 ow = conv_out_extent(x.w, kw, stride, pad);
  Matrix col(cc * kh * kw, oh * ow);
  for (i64 ch = 0; ch < cc; ++ch) {
    const double* plane = x.channel(bi, c0 + ch);
    for (i64 ky = 0; ky < kh; ++ky) {
      for (i64 kx = 0; kx < kw; ++kx) {
        double* crow = col.row((ch * kh + ky) * kw + kx);
        for (i64 oy = 0; oy < oh; ++oy) {
          const i64 iy = oy * stride - pad + ky;
          for (i64 ox = 0; ox < ow; ++ox) {
            const i64 ix = ox * stride - pad + kx;
            const bool inside = iy >= 0 && iy < x.h && ix >= 0 && ix < x.w;
            crow[oy * ow + ox] = inside ? plane[iy * x.w + ix] : 0.0;
          }
        }
      }
    }
  }
  return col;
}

namespace {

void col2im(const Matrix& col, Tensor4& x, i64 bi, i64 c0, i64 cc, i64 kh,
            i64 kw, i64 stride, i64 pad) {
  const i64 oh = conv_out_extent(x.h, kh, stride, pad);
  const i64 ow = conv_out_extent(x.w, kw, stride, pad);
  for (i64 ch = 0; ch < cc; ++ch) {
    double* plane = x.channel(bi, c0 + ch);
    for (i64 ky = 0; ky < kh; ++ky) {
      for (i64 kx = 0; kx < kw; ++kx) {
        const double* crow = col.row((ch * kh + ky) * kw + kx);
        for (i64 oy = 0; oy < oh; ++oy) {
          const i64 iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= x.h) continue;
          for (i64 ox = 0; ox < ow; ++ox) {
            const i64 ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= x.w) continue;
            plane[iy * x.w + ix] += crow[oy * ow + ox];
          }
        }
      }
    }
  }
}

void check_conv_args(const Tensor4& input, const Matrix& weight, i64 kh, i64 kw,
                     i64 stride, i64 pad, i64 groups) {
  if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
  if (pad < 0) throw ConfigError("conv2d: pad must be >= 0");
  if (groups < 1) throw ConfigError("conv2d: groups must be >= 1");
  if (input.c % groups != 0)
    throw ConfigError("conv2d: input channels " + std::to_string(input.c) +
                      " not divisible by groups " + std::to_string(groups));
  if (weight.rows % groups != 0)
    throw ConfigError("conv2d: output channels " + std::to_string(weight.rows) +
                      " not divisible by groups " + std::to_string(groups));
  const i64 expect_cols = (input.c / groups) * kh * kw;
  if (weight.cols != expect_cols)
    throw ShapeError("conv2d: weight is " + shape_str(weight.rows, weight.cols) +
                     ", expected " + shape_str(weight.rows, expect_cols));
  if (input.h + 2 * pad < kh || input.w + 2 * pad < kw)
    throw ShapeError("conv2d: kernel " + std::to_string(kh) + "x" +
                     std::to_string(kw) + " larger than padded input " +
                     std::to_string(input.h + 2 * pad) + "x" +
                     std::to_string(input.w + 2 * pad));
}

}  // namespace

Tensor4 conv2d(const Tensor4& input, const Matrix& weight, i64 kh, i64 kw,
               i64 stride, i64 pad, i64 groups) {
  check_conv_args(input, weight, kh, kw, stride, pad, groups);
  const i64 cout = weight.rows;
  const i64 cin_g = input.c / groups;
  const i64 cout_g = cout / groups;
  const i64 oh = conv_out_extent(input.h, kh, stride, pad);
  const i64 ow = conv_out_extent(input.w, kw, stride, pad);
  Tensor4 out(input.n, cout, oh, ow);
  const auto& k = kernels::active();
  for (i64 bi = 0; bi < input.n; ++bi) {
    for (i64 g = 0; g < groups; ++g) {
      const Matrix col = im2col(input, bi, g * cin_g, cin_g, kh, kw, stride, pad);
      k.gemm(static_cast<size_t>(cout_g), static_cast<size_t>(oh * ow),
             static_cast<size_t>(col.rows), weight.row(g * cout_g),
             col.data.data(), out.channel(bi, g * cout_g), false);
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor4& input, const Matrix& weight,
                            const Tensor4& upstream, i64 kh, i64 kw, i64 stride,
                            i64 pad, i64 groups) {
  check_conv_args(input, weight, kh, kw, stride, pad, groups);
  const i64 cout = weight.rows;
  const i64 cin_g = input.c / groups;
  const i64 cout_g = cout / groups;
  const i64 oh = conv_out_extent(input.h, kh, stride, pad);
  const i64 ow = conv_out_extent(input.w, kw, stride, pad);
  if (upstream.n != input.n || upstream.c != cout || upstream.h != oh ||
      upstream.w != ow)
    throw ShapeError("conv2d_backward: upstream shape mismatch");

  Conv2dGrads grads{Tensor4(input.n, input.c, input.h, input.w),
                    Matrix(weight.rows, weight.cols)};
  const auto& k = kernels::active();
  Matrix dcol(cin_g * kh * kw, oh * ow);
  for (i64 bi = 0; bi < input.n; ++bi) {
    for (i64 g = 0; g < groups; ++g) {
      const Matrix col = im2col(input, bi, g * cin_g, cin_g, kh, kw, stride, pad);
      const Matrix colT = transpose(col);
      // dW_g += dY_g * col^T
      k.gemm(static_cast<size_t>(cout_g), static_cast<size_t>(col.rows),
             static_cast<size_t>(oh * ow), upstream.channel(bi, g * cout_g),
             colT.data.data(), grads.dweight.row(g * cout_g), true);
      // dcol = W_g^T * dY_g
      Matrix wT(col.rows, cout_g);
      for (i64 r = 0; r < cout_g; ++r)
        for (i64 c = 0; c < col.rows; ++c)
          wT.at(c, r) = weight.at(g * cout_g + r, c);
      k.gemm(static_cast<size_t>(col.rows), static_cast<size_t>(oh * ow),
             static_cast<size_t>(cout_g), wT.data.data(),
             upstream.channel(bi, g * cout_g), dcol.data.data(), false);
      col2im(dcol, grads.dinput, bi, g * cin_g, cin_g, kh, kw, stride, pad);
    }
  }
  return grads;
}

Tensor4 relu(const Tensor4& x) {
  Tensor4 y(x.n, x.c, x.h, x.w);
  kernels::active().relu(static_cast<size_t>(x.size()), x.data.data(),
                         y.data.data());
  return y;
}

Tensor4 relu_backward(const Tensor4& x, const Tensor4& upstream) {
  if (!x.same_shape(upstream))
    throw ShapeError("relu_backward: shape mismatch");
  Tensor4 y(x.n, x.c, x.h, x.w);
  kernels::active().relu_backward(static_cast<size_t>(x.size()), x.data.data(),
                                  upstream.data.data(), y.data.data());
  return y;
}

BatchNormParams BatchNormParams::identity(i64 channels) {
  BatchNormParams p;
  p.gamma.assign(static_cast<size_t>(channels), 1.0);
  p.beta.assign(static_cast<size_t>(channels), 0.0);
  return p;
}

BatchNormState BatchNormState::fresh(i64 channels) {
  BatchNormState s;
  s.mean.assign(static_cast<size_t>(channels), 0.0);
  s.var.assign(static_cast<size_t>(channels), 1.0);
  return s;
}

BatchNormResult batchnorm(const Tensor4& x, const BatchNormParams& params,
                          const BatchNormState& state, Mode mode, double eps,
                          double momentum_bn) {
  const i64 c = x.c;
  if (static_cast<i64>(params.gamma.size()) != c ||
      static_cast<i64>(params.beta.size()) != c ||
      static_cast<i64>(state.mean.size()) != c ||
      static_cast<i64>(state.var.size()) != c)
    throw ShapeError("batchnorm: parameter/state length != channel count");
  if (eps <= 0.0) throw ConfigError("batchnorm: eps must be > 0");
  const i64 m = x.n * x.h * x.w;
  if (m == 0) throw ShapeError("batchnorm: empty input (n*h*w == 0)");

  BatchNormResult r;
  r.y = Tensor4(x.n, x.c, x.h, x.w);
  r.updated = state;
  r.mean.assign(static_cast<size_t>(c), 0.0);
  r.inv_std.assign(static_cast<size_t>(c), 0.0);

  const auto& k = kernels::active();
  const i64 plane = x.plane();
  for (i64 ch = 0; ch < c; ++ch) {
    double mu, var;
    if (mode == Mode::Train) {
      double sum = 0.0, sumsq = 0.0;
      for (i64 bi = 0; bi < x.n; ++bi) {
        double s, ss;
        k.sum_sumsq(static_cast<size_t>(plane), x.channel(bi, ch), &s, &ss);
        sum += s;
        sumsq += ss;
      }
      mu = sum / static_cast<double>(m);
      var = sumsq / static_cast<double>(m) - mu * mu;
      if (var < 0.0) var = 0.0;  // guard rounding on constant channels
      // running stats keep the unbiased variance
      const double unbiased =
          m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
      r.updated.mean[static_cast<size_t>(ch)] =
          (1.0 - momentum_bn) * state.mean[static_cast<size_t>(ch)] +
          momentum_bn * mu;
      r.updated.var[static_cast<size_t>(ch)] =
          (1.0 - momentum_bn) * state.var[static_cast<size_t>(ch)] +
          momentum_bn * unbiased;
    } else {
      mu = state.mean[static_cast<size_t>(ch)];
      var = state.var[static_cast<size_t>(ch)];
    }
    const double inv = 1.0 / std::sqrt(var + eps);
    r.mean[static_cast<size_t>(ch)] = mu;
    r.inv_std[static_cast<size_t>(ch)] = inv;
    const double a = params.gamma[static_cast<size_t>(ch)] * inv;
    const double b = params.beta[static_cast<size_t>(ch)] - mu * a;
    for (i64 bi = 0; bi < x.n; ++bi)
      k.scale_shift(static_cast<size_t>(plane), x.channel(bi, ch), a, b,
                    r.y.channel(bi, ch));
  }
  check_finite(r.y.data.data(), r.y.size(), "batchnorm output");
  return r;
}

BatchNormGrads batchnorm_backward(const Tensor4& x, const Tensor4& upstream,
                                  const BatchNormParams& params,
                                  const BatchNormResult& fwd, Mode mode) {
  if (!x.same_shape(upstream))
    throw ShapeError("batchnorm_backward: shape mismatch");
  const i64 c = x.c;
  const i64 m = x.n * x.h * x.w;
  BatchNormGrads g;
  g.dx = Tensor4(x.n, x.c, x.h, x.w);
  g.dgamma.assign(static_cast<size_t>(c), 0.0);
  g.dbeta.assign(static_cast<size_t>(c), 0.0);
  const i64 plane = x.plane();
  for (i64 ch = 0; ch < c; ++ch) {
    const double mu = fwd.mean[static_cast<size_t>(ch)];
    const double inv = fwd.inv_std[static_cast<size_t>(ch)];
    const double gamma = params.gamma[static_cast<size_t>(ch)];
    double dg = 0.0, db = 0.0;
    for (i64 bi = 0; bi < x.n; ++bi) {
      const double* xp = x.channel(bi, ch);
      const double* up = upstream.channel(bi, ch);
      for (i64 i = 0; i < plane; ++i) {
        db += up[i];
        dg += up[i] * (xp[i] - mu) * inv;
      }
    }
    g.dgamma[static_cast<size_t>(ch)] = dg;
    g.dbeta[static_cast<size_t>(ch)] = db;
    if (mode == Mode::Train) {
      const double scale = gamma * inv / static_cast<double>(m);
      for (i64 bi = 0; bi < x.n; ++bi) {
        const double* xp = x.channel(bi, ch);
        const double* up = upstream.channel(bi, ch);
        double* dxp = g.dx.channel(bi, ch);
        for (i64 i = 0; i < plane; ++i) {
          const double xhat = (xp[i] - mu) * inv;
          dxp[i] = scale * (static_cast<double>(m) * up[i] - db - xhat * dg);
        }
      }
    } else {
      // eval mode is a fixed affine map per channel
      const double a = gamma * inv;
      for (i64 bi = 0; bi < x.n; ++bi) {
        const double* up = upstream.channel(bi, ch);
        double* dxp = g.dx.channel(bi, ch);
        for (i64 i = 0; i < plane; ++i) dxp[i] = a * up[i];
      }
    }
  }
  return g;
}

Matrix finite_difference_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    const std::vector<double>& x, double eps) {
  if (eps <= 0.0) throw ConfigError("finite_difference_jacobian: eps must be > 0");
  std::vector<double> probe = x;
  const std::vector<double> base = f(x);
  Matrix jac(static_cast<i64>(base.size()), static_cast<i64>(x.size()));
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const std::vector<double> hi = f(probe);
    probe[i] = x[i] - eps;
    const std::vector<double> lo = f(probe);
    probe[i] = x[i];
    if (hi.size() != base.size() || lo.size() != base.size())
      throw ContractError("finite_difference_jacobian: f output size varies");
    for (size_t r = 0; r < base.size(); ++r) {
      const double d = (hi[r] - lo[r]) / (2.0 * eps);
      if (!std::isfinite(d))
        throw NumericError("finite_difference_jacobian: non-finite difference");
      jac.at(static_cast<i64>(r), static_cast<i64>(i)) = d;
    }
  }
  return jac;
}

}  // namespace igc
