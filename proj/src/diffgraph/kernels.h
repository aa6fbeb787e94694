// diffgraph/kernels.h

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

#ifndef LIPEMBED_DIFFGRAPH_KERNELS_H_
#define LIPEMBED_DIFFGRAPH_KERNELS_H_

// Forward and analytic backward kernels for every operator the network needs.
// Kernels are pure functions of their arguments (plus the OpContext generator
// for dropout, and the running statistics for batch norm).  Backward kernels
// overwrite the gradients they are given; pass nullptr to skip one.

#include <array>
#include <cstddef>
#include <vector>

#include "diffgraph/array.h"
#include "diffgraph/op-context.h"

namespace lipembed {

/// Stride and zero padding for the (time, height, width) axes.
struct Conv3dOptions {
  std::array<std::size_t, 3> stride = {1, 1, 1};
  std::array<std::size_t, 3> padding = {0, 0, 0};
};

struct Conv2dOptions {
  std::array<std::size_t, 2> stride = {1, 1};
  std::array<std::size_t, 2> padding = {0, 0};
};

/// Cross-correlation (no kernel flip).  input is [N,C,T,H,W] or the unbatched
/// [C,T,H,W]; kernel is [O,C,kt,kh,kw].  Output extent per axis is
/// floor((in + 2*pad - k) / stride) + 1.
Array Conv3d(const Array &input, const Array &kernel,
             const Conv3dOptions &opts);
void Conv3dBackward(const Array &input, const Array &kernel,
                    const Conv3dOptions &opts, const Array &out_grad,
                    Array *input_grad, Array *kernel_grad);

/// input [N,C,H,W] or [C,H,W]; kernel [O,C,kh,kw].
Array Conv2d(const Array &input, const Array &kernel,
             const Conv2dOptions &opts);
void Conv2dBackward(const Array &input, const Array &kernel,
                    const Conv2dOptions &opts, const Array &out_grad,
                    Array *input_grad, Array *kernel_grad);

/// Shape a Conv3d would produce, or throws if the geometry is invalid.
Shape Conv3dOutputShape(const Shape &input, const Shape &kernel,
                        const Conv3dOptions &opts);

struct Pool3dOptions {
  std::array<std::size_t, 3> kernel = {1, 3, 3};
  std::array<std::size_t, 3> stride = {1, 2, 2};
  std::array<std::size_t, 3> padding = {0, 1, 1};
};

/// Max pooling over [N,C,T,H,W]; padded cells never win.  argmax receives
/// the flat input index of each output's winner.
Array MaxPool3d(const Array &input, const Pool3dOptions &opts,
                std::vector<std::size_t> *argmax);
Array MaxPool3dBackward(const Shape &input_shape,
                        const std::vector<std::size_t> &argmax,
                        const Array &out_grad);

/// Running statistics owned by the caller (the parameter set).
struct BatchNormBuffers {
  Array *running_mean = nullptr;
  Array *running_var = nullptr;
  /// One-element array holding the number of train-mode updates so far.
  Array *num_updates = nullptr;
};

struct BatchNormOptions {
  double epsilon = 1e-5;
  double momentum = 0.1;
};

struct BatchNormCache {
  Array normalized;                // x-hat, same shape as the input
  std::vector<double> inv_std;     // per channel
  bool training = false;
};

/// Per-channel normalization over every axis except axis 1.  Train mode
/// normalizes by batch statistics (biased variance) and updates the running
/// statistics with an exponential moving average of the unbiased variance.
/// Eval mode uses the running statistics only.
Array BatchNorm(const Array &input, const Array &gamma, const Array &beta,
                const BatchNormBuffers &buffers, const BatchNormOptions &opts,
                const OpContext &ctx, BatchNormCache *cache);
void BatchNormBackward(const BatchNormCache &cache, const Array &gamma,
                       const Array &out_grad, Array *input_grad,
                       Array *gamma_grad, Array *beta_grad);

/// y = x W^T + b with x [N,I], W [O,I], b [O].
Array Linear(const Array &input, const Array &weight, const Array &bias);
void LinearBackward(const Array &input, const Array &weight,
                    const Array &out_grad, Array *input_grad,
                    Array *weight_grad, Array *bias_grad);

/// Gate order in the stacked weights is input, forget, cell, output.
struct LstmWeights {
  const Array &input_weight;   // [4H, I]
  const Array &hidden_weight;  // [4H, H]
  const Array &bias;           // [4H]
};

struct LstmStepResult {
  Array h;      // [B,H]
  Array c;      // [B,H]
  Array gates;  // activated i,f,g,o stacked as [B,4H]
  Array tanh_c; // [B,H]
};

/// One step of the standard LSTM recurrence:
///   i,f,o = sigmoid(.), g = tanh(.), c = f*c_prev + i*g, h = o*tanh(c).
LstmStepResult LstmStep(const Array &x, const Array &h_prev,
                        const Array &c_prev, const LstmWeights &w);

struct LstmStepGrads {
  Array x, h_prev, c_prev, input_weight, hidden_weight, bias;
};

/// h_grad or c_grad may be empty (treated as zero).
LstmStepGrads LstmStepBackward(const Array &x, const Array &h_prev,
                               const Array &c_prev, const LstmWeights &w,
                               const LstmStepResult &fwd, const Array &h_grad,
                               const Array &c_grad);

/// Inverted dropout with one Bernoulli(1-p) mask per sequence, reused at
/// every time step.  input is [T,F] or [B,T,F]; the mask is [F] or [B,F]
/// (already scaled by 1/(1-p)).  Identity in eval mode or when p == 0.
Array DropoutSeq(const Array &input, double p, OpContext *ctx, Array *mask);
Array DropoutSeqBackward(const Array &out_grad, const Array &mask);

enum class PoolMode { kAverage, kLast };

/// Pooling over the time axis of [T,F] -> [F] or [B,T,F] -> [B,F].
Array TemporalPool(const Array &input, PoolMode mode);
Array TemporalPoolBackward(const Shape &input_shape, PoolMode mode,
                           const Array &out_grad);

struct CrossEntropyResult {
  double loss;
  Array grad;  // d loss / d logits = softmax - one_hot
};

/// logits [K]; loss = -log softmax(logits)[label] via log-sum-exp.
CrossEntropyResult SoftmaxCrossEntropy(const Array &logits, std::size_t label);

/// Row-wise softmax of [N,K].
Array Softmax(const Array &logits);

}  // namespace lipembed

#endif  // LIPEMBED_DIFFGRAPH_KERNELS_H_
