// diffgraph/kernels.cc

// Copyright 2026  lipembed authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "diffgraph/kernels.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace lipembed {

namespace {

typedef Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
    RowMatrix;
typedef Eigen::Map<RowMatrix> RowMap;
typedef Eigen::Map<const RowMatrix> ConstRowMap;
typedef Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>> StridedRowMap;
typedef Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>
    ConstStridedRowMap;

struct ConvGeometry {
  std::size_t n, c, t, h, w;     // input
  std::size_t o, kt, kh, kw;     // kernel
  std::size_t ot, oh, ow;        // output
  std::array<std::size_t, 3> stride, pad;

  std::size_t patch() const { return c * kt * kh * kw; }
  std::size_t plane() const { return oh * ow; }
};

std::size_t OutExtent(std::size_t in, std::size_t k, std::size_t stride,
                      std::size_t pad, const char *axis) {
  if (stride == 0) LE_ERR << "Zero stride on " << axis << " axis";
  if (in + 2 * pad < k)
    LE_ERR << "Kernel extent " << k << " exceeds padded input extent "
           << in + 2 * pad << " on " << axis << " axis";
  return (in + 2 * pad - k) / stride + 1;
}

ConvGeometry MakeGeometry(const Shape &input, const Shape &kernel,
                          const Conv3dOptions &opts) {
  if (input.size() != 5 && input.size() != 4)
    LE_ERR << "conv3d expects input [N,C,T,H,W] or [C,T,H,W], got "
           << ShapeString(input);
  if (kernel.size() != 5)
    LE_ERR << "conv3d expects kernel [O,C,kt,kh,kw], got "
           << ShapeString(kernel);
  const std::size_t off = input.size() == 5 ? 1 : 0;
  ConvGeometry g;
  g.n = off ? input[0] : 1;
  g.c = input[off];
  g.t = input[off + 1];
  g.h = input[off + 2];
  g.w = input[off + 3];
  g.o = kernel[0];
  if (kernel[1] != g.c)
    LE_ERR << "conv3d channel mismatch: input " << ShapeString(input)
           << " has " << g.c << " channels but kernel " << ShapeString(kernel)
           << " expects " << kernel[1];
  g.kt = kernel[2];
  g.kh = kernel[3];
  g.kw = kernel[4];
  g.stride = opts.stride;
  g.pad = opts.padding;
  g.ot = OutExtent(g.t, g.kt, g.stride[0], g.pad[0], "time");
  g.oh = OutExtent(g.h, g.kh, g.stride[1], g.pad[1], "height");
  g.ow = OutExtent(g.w, g.kw, g.stride[2], g.pad[2], "width");
  return g;
}

// Fills col [patch, plane] with the receptive fields of output time step
// `ot` of sample `n`.  Padding reads as zero.
void Im2Col(const double *x, const ConvGeometry &g, std::size_t n,
            std::size_t ot, double *col) {
  const std::size_t plane = g.plane();
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.c; c++) {
    for (std::size_t kt = 0; kt < g.kt; kt++) {
      const long it = long(ot * g.stride[0] + kt) - long(g.pad[0]);
      for (std::size_t kh = 0; kh < g.kh; kh++) {
        for (std::size_t kw = 0; kw < g.kw; kw++, row++) {
          double *dst = col + row * plane;
          if (it < 0 || it >= long(g.t)) {
            std::fill(dst, dst + plane, 0.0);
            continue;
          }
          const double *src = x + (((n * g.c + c) * g.t + it) * g.h) * g.w;
          for (std::size_t oh = 0; oh < g.oh; oh++) {
            const long ih = long(oh * g.stride[1] + kh) - long(g.pad[1]);
            double *out = dst + oh * g.ow;
            if (ih < 0 || ih >= long(g.h)) {
              std::fill(out, out + g.ow, 0.0);
              continue;
            }
            const double *line = src + ih * g.w;
            for (std::size_t ow = 0; ow < g.ow; ow++) {
              const long iw = long(ow * g.stride[2] + kw) - long(g.pad[2]);
              out[ow] = (iw < 0 || iw >= long(g.w)) ? 0.0 : line[iw];
            }
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters col back into dx (accumulating).
void Col2Im(const double *col, const ConvGeometry &g, std::size_t n,
            std::size_t ot, double *dx) {
  const std::size_t plane = g.plane();
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.c; c++) {
    for (std::size_t kt = 0; kt < g.kt; kt++) {
      const long it = long(ot * g.stride[0] + kt) - long(g.pad[0]);
      for (std::size_t kh = 0; kh < g.kh; kh++) {
        for (std::size_t kw = 0; kw < g.kw; kw++, row++) {
          if (it < 0 || it >= long(g.t)) continue;
          const double *src = col + row * plane;
          double *dst = dx + (((n * g.c + c) * g.t + it) * g.h) * g.w;
          for (std::size_t oh = 0; oh < g.oh; oh++) {
            const long ih = long(oh * g.stride[1] + kh) - long(g.pad[1]);
            if (ih < 0 || ih >= long(g.h)) continue;
            double *line = dst + ih * g.w;
            const double *in = src + oh * g.ow;
            for (std::size_t ow = 0; ow < g.ow; ow++) {
              const long iw = long(ow * g.stride[2] + kw) - long(g.pad[2]);
              if (iw >= 0 && iw < long(g.w)) line[iw] += in[ow];
            }
          }
        }
      }
    }
  }
}

Shape ConvOutputShape(const ConvGeometry &g, bool batched) {
  if (batched) return {g.n, g.o, g.ot, g.oh, g.ow};
  return {g.o, g.ot, g.oh, g.ow};
}

Conv3dOptions To3d(const Conv2dOptions &opts) {
  Conv3dOptions o;
  o.stride = {1, opts.stride[0], opts.stride[1]};
  o.padding = {0, opts.padding[0], opts.padding[1]};
  return o;
}

// [N,C,H,W] -> [N,C,1,H,W] (or unbatched [C,H,W] -> [C,1,H,W]).
Shape InsertTimeAxis(const Shape &s, std::size_t axis) {
  Shape out = s;
  out.insert(out.begin() + axis, 1);
  return out;
}

double Sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

}  // namespace

Shape Conv3dOutputShape(const Shape &input, const Shape &kernel,
                        const Conv3dOptions &opts) {
  return ConvOutputShape(MakeGeometry(input, kernel, opts), input.size() == 5);
}

Array Conv3d(const Array &input, const Array &kernel,
             const Conv3dOptions &opts) {
  const ConvGeometry g = MakeGeometry(input.shape(), kernel.shape(), opts);
  Array out(ConvOutputShape(g, input.rank() == 5));
  const std::size_t patch = g.patch(), plane = g.plane();
  std::vector<double> col(patch * plane);
  ConstRowMap k(kernel.data(), g.o, patch);
  ConstRowMap colm(col.data(), patch, plane);
  for (std::size_t n = 0; n < g.n; n++) {
    for (std::size_t ot = 0; ot < g.ot; ot++) {
      Im2Col(input.data(), g, n, ot, col.data());
      StridedRowMap y(out.data() + (n * g.o * g.ot + ot) * plane, g.o, plane,
                      Eigen::OuterStride<>(g.ot * plane));
      y.noalias() = k * colm;
    }
  }
  return out;
}

void Conv3dBackward(const Array &input, const Array &kernel,
                    const Conv3dOptions &opts, const Array &out_grad,
                    Array *input_grad, Array *kernel_grad) {
  const ConvGeometry g = MakeGeometry(input.shape(), kernel.shape(), opts);
  if (out_grad.shape() != ConvOutputShape(g, input.rank() == 5))
    LE_ERR << "conv3d output gradient has shape "
           << ShapeString(out_grad.shape()) << ", expected "
           << ShapeString(ConvOutputShape(g, input.rank() == 5));
  const std::size_t patch = g.patch(), plane = g.plane();
  std::vector<double> col(patch * plane), dcol;
  if (input_grad) {
    *input_grad = Array(input.shape());
    dcol.resize(patch * plane);
  }
  if (kernel_grad) *kernel_grad = Array(kernel.shape());
  ConstRowMap k(kernel.data(), g.o, patch);
  RowMap colm(col.data(), patch, plane);
  for (std::size_t n = 0; n < g.n; n++) {
    for (std::size_t ot = 0; ot < g.ot; ot++) {
      ConstStridedRowMap dy(out_grad.data() + (n * g.o * g.ot + ot) * plane,
                            g.o, plane, Eigen::OuterStride<>(g.ot * plane));
      if (kernel_grad) {
        Im2Col(input.data(), g, n, ot, col.data());
        RowMap dk(kernel_grad->data(), g.o, patch);
        dk.noalias() += dy * colm.transpose();
      }
      if (input_grad) {
        RowMap dc(dcol.data(), patch, plane);
        dc.noalias() = k.transpose() * dy;
        Col2Im(dcol.data(), g, n, ot, input_grad->data());
      }
    }
  }
}

Array Conv2d(const Array &input, const Array &kernel,
             const Conv2dOptions &opts) {
  if (input.rank() != 4 && input.rank() != 3)
    LE_ERR << "conv2d expects input [N,C,H,W] or [C,H,W], got "
           << ShapeString(input.shape());
  if (kernel.rank() != 4)
    LE_ERR << "conv2d expects kernel [O,C,kh,kw], got "
           << ShapeString(kernel.shape());
  const std::size_t time_axis = input.rank() == 4 ? 2 : 1;
  Array out = Conv3d(input.Reshaped(InsertTimeAxis(input.shape(), time_axis)),
                     kernel.Reshaped(InsertTimeAxis(kernel.shape(), 2)),
                     To3d(opts));
  Shape s = out.shape();
  s.erase(s.begin() + time_axis);
  out.Reshape(s);
  return out;
}

void Conv2dBackward(const Array &input, const Array &kernel,
                    const Conv2dOptions &opts, const Array &out_grad,
                    Array *input_grad, Array *kernel_grad) {
  if (input.rank() != 4 && input.rank() != 3)
    LE_ERR << "conv2d expects input [N,C,H,W] or [C,H,W], got "
           << ShapeString(input.shape());
  const std::size_t time_axis = input.rank() == 4 ? 2 : 1;
  Conv3dBackward(input.Reshaped(InsertTimeAxis(input.shape(), time_axis)),
                 kernel.Reshaped(InsertTimeAxis(kernel.shape(), 2)),
                 To3d(opts),
                 out_grad.Reshaped(InsertTimeAxis(out_grad.shape(), time_axis)),
                 input_grad, kernel_grad);
  if (input_grad) input_grad->Reshape(input.shape());
  if (kernel_grad) kernel_grad->Reshape(kernel.shape());
}

Array MaxPool3d(const Array &input, const Pool3dOptions &opts,
                std::vector<std::size_t> *argmax) {
  if (input.rank() != 5)
    LE_ERR << "max pool expects [N,C,T,H,W], got "
           << ShapeString(input.shape());
  const std::size_t n = input.dim(0), c = input.dim(1), t = input.dim(2),
                    h = input.dim(3), w = input.dim(4);
  for (int a = 0; a < 3; a++)
    if (opts.padding[a] >= opts.kernel[a])
      LE_ERR << "max pool padding must be smaller than the window";
  const std::size_t ot = OutExtent(t, opts.kernel[0], opts.stride[0],
                                   opts.padding[0], "time"),
                    oh = OutExtent(h, opts.kernel[1], opts.stride[1],
                                   opts.padding[1], "height"),
                    ow = OutExtent(w, opts.kernel[2], opts.stride[2],
                                   opts.padding[2], "width");
  Array out({n, c, ot, oh, ow});
  argmax->assign(out.size(), 0);
  std::size_t idx = 0;
  for (std::size_t nc = 0; nc < n * c; nc++) {
    const std::size_t base = nc * t * h * w;
    for (std::size_t a = 0; a < ot; a++)
      for (std::size_t b = 0; b < oh; b++)
        for (std::size_t d = 0; d < ow; d++, idx++) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_i = 0;
          for (std::size_t ka = 0; ka < opts.kernel[0]; ka++) {
            const long it = long(a * opts.stride[0] + ka) - long(opts.padding[0]);
            if (it < 0 || it >= long(t)) continue;
            for (std::size_t kb = 0; kb < opts.kernel[1]; kb++) {
              const long ih =
                  long(b * opts.stride[1] + kb) - long(opts.padding[1]);
              if (ih < 0 || ih >= long(h)) continue;
              for (std::size_t kd = 0; kd < opts.kernel[2]; kd++) {
                const long iw =
                    long(d * opts.stride[2] + kd) - long(opts.padding[2]);
                if (iw < 0 || iw >= long(w)) continue;
                const std::size_t i = base + (it * h + ih) * w + iw;
                if (input[i] > best) {
                  best = input[i];
                  best_i = i;
                }
              }
            }
          }
          out[idx] = best;
          (*argmax)[idx] = best_i;
        }
  }
  return out;
}

Array MaxPool3dBackward(const Shape &input_shape,
                        const std::vector<std::size_t> &argmax,
                        const Array &out_grad) {
  if (argmax.size() != out_grad.size())
    LE_ERR << "max pool gradient size mismatch";
  Array grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); i++) grad[argmax[i]] += out_grad[i];
  return grad;
}

Array BatchNorm(const Array &input, const Array &gamma, const Array &beta,
                const BatchNormBuffers &buffers, const BatchNormOptions &opts,
                const OpContext &ctx, BatchNormCache *cache) {
  if (input.rank() < 2)
    LE_ERR << "batch norm expects [N,C,...], got "
           << ShapeString(input.shape());
  const std::size_t n = input.dim(0), c = input.dim(1),
                    inner = input.size() / (n * c), count = n * inner;
  if (gamma.size() != c || beta.size() != c)
    LE_ERR << "batch norm has " << c << " channels but gamma/beta have "
           << gamma.size() << "/" << beta.size();
  LE_ASSERT(buffers.running_mean && buffers.running_var &&
            buffers.num_updates);
  Array &rmean = *buffers.running_mean, &rvar = *buffers.running_var;
  if (rmean.size() != c || rvar.size() != c)
    LE_ERR << "batch norm running statistics have wrong size";

  Array out(input.shape());
  cache->training = ctx.training();
  cache->normalized = Array(input.shape());
  cache->inv_std.assign(c, 0.0);

  if (ctx.training() && n < 2)
    LE_ERR << "train-mode batch norm needs a batch of at least 2, got " << n;

  for (std::size_t ch = 0; ch < c; ch++) {
    double mean, var;
    if (ctx.training()) {
      double sum = 0.0;
      for (std::size_t b = 0; b < n; b++) {
        const double *p = input.data() + (b * c + ch) * inner;
        for (std::size_t i = 0; i < inner; i++) sum += p[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t b = 0; b < n; b++) {
        const double *p = input.data() + (b * c + ch) * inner;
        for (std::size_t i = 0; i < inner; i++) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / count;
      const double unbiased = sq / (count - 1);
      rmean[ch] = (1.0 - opts.momentum) * rmean[ch] + opts.momentum * mean;
      rvar[ch] = (1.0 - opts.momentum) * rvar[ch] + opts.momentum * unbiased;
    } else {
      mean = rmean[ch];
      var = rvar[ch];
    }
    const double inv_std = 1.0 / std::sqrt(var + opts.epsilon);
    cache->inv_std[ch] = inv_std;
    for (std::size_t b = 0; b < n; b++) {
      const std::size_t off = (b * c + ch) * inner;
      for (std::size_t i = 0; i < inner; i++) {
        const double xhat = (input[off + i] - mean) * inv_std;
        cache->normalized[off + i] = xhat;
        out[off + i] = gamma[ch] * xhat + beta[ch];
      }
    }
  }
  if (ctx.training()) {
    // Statistics are stored on the float32 grid like every other parameter.
    rmean.RoundToFloat();
    rvar.RoundToFloat();
    (*buffers.num_updates)[0] += 1.0;
  }
  return out;
}

void BatchNormBackward(const BatchNormCache &cache, const Array &gamma,
                       const Array &out_grad, Array *input_grad,
                       Array *gamma_grad, Array *beta_grad) {
  const Array &xhat = cache.normalized;
  if (out_grad.shape() != xhat.shape())
    LE_ERR << "batch norm gradient shape mismatch";
  const std::size_t n = xhat.dim(0), c = xhat.dim(1),
                    inner = xhat.size() / (n * c);
  const double count = double(n * inner);
  if (input_grad) *input_grad = Array(xhat.shape());
  if (gamma_grad) *gamma_grad = Array({c});
  if (beta_grad) *beta_grad = Array({c});
  for (std::size_t ch = 0; ch < c; ch++) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < n; b++) {
      const std::size_t off = (b * c + ch) * inner;
      for (std::size_t i = 0; i < inner; i++) {
        sum_dy += out_grad[off + i];
        sum_dy_xhat += out_grad[off + i] * xhat[off + i];
      }
    }
    if (gamma_grad) (*gamma_grad)[ch] = sum_dy_xhat;
    if (beta_grad) (*beta_grad)[ch] = sum_dy;
    if (!input_grad) continue;
    const double g = gamma[ch], s = cache.inv_std[ch];
    for (std::size_t b = 0; b < n; b++) {
      const std::size_t off = (b * c + ch) * inner;
      for (std::size_t i = 0; i < inner; i++) {
        const double dy = out_grad[off + i];
        (*input_grad)[off + i] =
            cache.training
                ? g * s * (dy - sum_dy / count - xhat[off + i] * sum_dy_xhat / count)
                : g * s * dy;
      }
    }
  }
}

Array Linear(const Array &input, const Array &weight, const Array &bias) {
  if (input.rank() != 2 || weight.rank() != 2 || input.dim(1) != weight.dim(1))
    LE_ERR << "linear expects x [N,I] and W [O,I], got "
           << ShapeString(input.shape()) << " and "
           << ShapeString(weight.shape());
  const std::size_t n = input.dim(0), in = input.dim(1), o = weight.dim(0);
  if (bias.size() != o) LE_ERR << "linear bias has wrong size " << bias.size();
  Array out({n, o});
  RowMap y(out.data(), n, o);
  y.noalias() = ConstRowMap(input.data(), n, in) *
                ConstRowMap(weight.data(), o, in).transpose();
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data(), o);
  return out;
}

void LinearBackward(const Array &input, const Array &weight,
                    const Array &out_grad, Array *input_grad,
                    Array *weight_grad, Array *bias_grad) {
  const std::size_t n = input.dim(0), in = input.dim(1), o = weight.dim(0);
  if (out_grad.shape() != Shape{n, o})
    LE_ERR << "linear gradient shape mismatch";
  ConstRowMap dy(out_grad.data(), n, o);
  if (input_grad) {
    *input_grad = Array(input.shape());
    RowMap(input_grad->data(), n, in).noalias() =
        dy * ConstRowMap(weight.data(), o, in);
  }
  if (weight_grad) {
    *weight_grad = Array(weight.shape());
    RowMap(weight_grad->data(), o, in).noalias() =
        dy.transpose() * ConstRowMap(input.data(), n, in);
  }
  if (bias_grad) {
    *bias_grad = Array({o});
    Eigen::Map<Eigen::RowVectorXd>(bias_grad->data(), o) = dy.colwise().sum();
  }
}

LstmStepResult LstmStep(const Array &x, const Array &h_prev,
                        const Array &c_prev, const LstmWeights &w) {
  if (x.rank() != 2 || h_prev.rank() != 2 || c_prev.shape() != h_prev.shape())
    LE_ERR << "lstm step expects x [B,I], h/c [B,H]; got "
           << ShapeString(x.shape()) << ", " << ShapeString(h_prev.shape())
           << ", " << ShapeString(c_prev.shape());
  const std::size_t b = x.dim(0), in = x.dim(1), hid = h_prev.dim(1);
  if (h_prev.dim(0) != b) LE_ERR << "lstm batch size mismatch";
  if (w.input_weight.shape() != Shape{4 * hid, in} ||
      w.hidden_weight.shape() != Shape{4 * hid, hid} ||
      w.bias.size() != 4 * hid)
    LE_ERR << "lstm weights inconsistent with input " << in << " and hidden "
           << hid << ": " << ShapeString(w.input_weight.shape()) << ", "
           << ShapeString(w.hidden_weight.shape()) << ", "
           << ShapeString(w.bias.shape());
  LstmStepResult r;
  r.gates = Array({b, 4 * hid});
  RowMap a(r.gates.data(), b, 4 * hid);
  a.noalias() = ConstRowMap(x.data(), b, in) *
                ConstRowMap(w.input_weight.data(), 4 * hid, in).transpose();
  a.noalias() += ConstRowMap(h_prev.data(), b, hid) *
                 ConstRowMap(w.hidden_weight.data(), 4 * hid, hid).transpose();
  a.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(w.bias.data(), 4 * hid);
  r.h = Array({b, hid});
  r.c = Array({b, hid});
  r.tanh_c = Array({b, hid});
  for (std::size_t s = 0; s < b; s++) {
    double *g = r.gates.data() + s * 4 * hid;
    for (std::size_t j = 0; j < hid; j++) {
      const double i = Sigmoid(g[j]), f = Sigmoid(g[hid + j]),
                   cell = std::tanh(g[2 * hid + j]),
                   o = Sigmoid(g[3 * hid + j]);
      g[j] = i;
      g[hid + j] = f;
      g[2 * hid + j] = cell;
      g[3 * hid + j] = o;
      const double c = f * c_prev[s * hid + j] + i * cell;
      const double tc = std::tanh(c);
      r.c[s * hid + j] = c;
      r.tanh_c[s * hid + j] = tc;
      r.h[s * hid + j] = o * tc;
    }
  }
  return r;
}

LstmStepGrads LstmStepBackward(const Array &x, const Array &h_prev,
                               const Array &c_prev, const LstmWeights &w,
                               const LstmStepResult &fwd, const Array &h_grad,
                               const Array &c_grad) {
  const std::size_t b = x.dim(0), in = x.dim(1), hid = h_prev.dim(1);
  Array da({b, 4 * hid});
  LstmStepGrads g;
  g.c_prev = Array(c_prev.shape());
  for (std::size_t s = 0; s < b; s++) {
    const double *gate = fwd.gates.data() + s * 4 * hid;
    double *d = da.data() + s * 4 * hid;
    for (std::size_t j = 0; j < hid; j++) {
      const std::size_t k = s * hid + j;
      const double i = gate[j], f = gate[hid + j], cell = gate[2 * hid + j],
                   o = gate[3 * hid + j], tc = fwd.tanh_c[k];
      const double dh = h_grad.empty() ? 0.0 : h_grad[k];
      const double dc = (c_grad.empty() ? 0.0 : c_grad[k]) +
                        dh * o * (1.0 - tc * tc);
      d[j] = dc * cell * i * (1.0 - i);
      d[hid + j] = dc * c_prev[k] * f * (1.0 - f);
      d[2 * hid + j] = dc * i * (1.0 - cell * cell);
      d[3 * hid + j] = dh * tc * o * (1.0 - o);
      g.c_prev[k] = dc * f;
    }
  }
  ConstRowMap dam(da.data(), b, 4 * hid);
  ConstRowMap wx(w.input_weight.data(), 4 * hid, in);
  ConstRowMap wh(w.hidden_weight.data(), 4 * hid, hid);
  g.x = Array(x.shape());
  RowMap(g.x.data(), b, in).noalias() = dam * wx;
  g.h_prev = Array(h_prev.shape());
  RowMap(g.h_prev.data(), b, hid).noalias() = dam * wh;
  g.input_weight = Array(w.input_weight.shape());
  RowMap(g.input_weight.data(), 4 * hid, in).noalias() =
      dam.transpose() * ConstRowMap(x.data(), b, in);
  g.hidden_weight = Array(w.hidden_weight.shape());
  RowMap(g.hidden_weight.data(), 4 * hid, hid).noalias() =
      dam.transpose() * ConstRowMap(h_prev.data(), b, hid);
  g.bias = Array(w.bias.shape());
  Eigen::Map<Eigen::RowVectorXd>(g.bias.data(), 4 * hid) = dam.colwise().sum();
  return g;
}

Array DropoutSeq(const Array &input, double p, OpContext *ctx, Array *mask) {
  if (!(p >= 0.0 && p < 1.0))
    LE_ERR << "dropout probability must lie in [0,1), got " << p;
  if (input.rank() != 2 && input.rank() != 3)
    LE_ERR << "sequence dropout expects [T,F] or [B,T,F], got "
           << ShapeString(input.shape());
  const bool batched = input.rank() == 3;
  const std::size_t b = batched ? input.dim(0) : 1,
                    t = input.dim(batched ? 1 : 0),
                    f = input.dim(batched ? 2 : 1);
  *mask = batched ? Array({b, f}, 1.0) : Array({f}, 1.0);
  if (!ctx->training() || p == 0.0) return input;
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (double &m : mask->values()) m = keep(ctx->rng()) ? scale : 0.0;
  Array out(input.shape());
  for (std::size_t s = 0; s < b; s++)
    for (std::size_t step = 0; step < t; step++)
      for (std::size_t j = 0; j < f; j++) {
        const std::size_t k = (s * t + step) * f + j;
        out[k] = input[k] * (*mask)[s * f + j];
      }
  return out;
}

Array DropoutSeqBackward(const Array &out_grad, const Array &mask) {
  const bool batched = out_grad.rank() == 3;
  const std::size_t b = batched ? out_grad.dim(0) : 1,
                    t = out_grad.dim(batched ? 1 : 0),
                    f = out_grad.dim(batched ? 2 : 1);
  Array grad(out_grad.shape());
  for (std::size_t s = 0; s < b; s++)
    for (std::size_t step = 0; step < t; step++)
      for (std::size_t j = 0; j < f; j++) {
        const std::size_t k = (s * t + step) * f + j;
        grad[k] = out_grad[k] * mask[s * f + j];
      }
  return grad;
}

Array TemporalPool(const Array &input, PoolMode mode) {
  if (input.rank() != 2 && input.rank() != 3)
    LE_ERR << "temporal pooling expects [T,F] or [B,T,F], got "
           << ShapeString(input.shape());
  const bool batched = input.rank() == 3;
  const std::size_t b = batched ? input.dim(0) : 1,
                    t = input.dim(batched ? 1 : 0),
                    f = input.dim(batched ? 2 : 1);
  if (t == 0) LE_ERR << "temporal pooling of an empty sequence";
  Array out(batched ? Shape{b, f} : Shape{f});
  for (std::size_t s = 0; s < b; s++) {
    double *o = out.data() + s * f;
    if (mode == PoolMode::kLast) {
      const double *row = input.data() + (s * t + t - 1) * f;
      std::copy(row, row + f, o);
      continue;
    }
    for (std::size_t step = 0; step < t; step++) {
      const double *row = input.data() + (s * t + step) * f;
      for (std::size_t j = 0; j < f; j++) o[j] += row[j];
    }
    for (std::size_t j = 0; j < f; j++) o[j] /= double(t);
  }
  return out;
}

Array TemporalPoolBackward(const Shape &input_shape, PoolMode mode,
                           const Array &out_grad) {
  const bool batched = input_shape.size() == 3;
  const std::size_t b = batched ? input_shape[0] : 1,
                    t = input_shape[batched ? 1 : 0],
                    f = input_shape[batched ? 2 : 1];
  Array grad(input_shape);
  for (std::size_t s = 0; s < b; s++) {
    const double *g = out_grad.data() + s * f;
    if (mode == PoolMode::kLast) {
      std::copy(g, g + f, grad.data() + (s * t + t - 1) * f);
      continue;
    }
    for (std::size_t step = 0; step < t; step++) {
      double *row = grad.data() + (s * t + step) * f;
      for (std::size_t j = 0; j < f; j++) row[j] = g[j] / double(t);
    }
  }
  return grad;
}

CrossEntropyResult SoftmaxCrossEntropy(const Array &logits, std::size_t label) {
  const std::size_t k = logits.size();
  if (k < 2) LE_ERR << "cross-entropy needs at least 2 classes, got " << k;
  if (label >= k)
    LE_ERR << "class index " << label << " out of range for " << k
           << " classes";
  double max = logits[0];
  for (std::size_t i = 1; i < k; i++) max = std::max(max, logits[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; i++) sum += std::exp(logits[i] - max);
  const double log_z = max + std::log(sum);
  CrossEntropyResult r;
  r.loss = log_z - logits[label];
  r.grad = Array({k});
  for (std::size_t i = 0; i < k; i++) r.grad[i] = std::exp(logits[i] - log_z);
  r.grad[label] -= 1.0;
  return r;
}

Array Softmax(const Array &logits) {
  if (logits.rank() != 2) LE_ERR << "softmax expects [N,K]";
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Array out(logits.shape());
  for (std::size_t s = 0; s < n; s++) {
    const double *row = logits.data() + s * k;
    const double max = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; i++) sum += std::exp(row[i] - max);
    for (std::size_t i = 0; i < k; i++)
      out[s * k + i] = std::exp(row[i] - max) / sum;
  }
  return out;
}

}  // namespace lipembed
