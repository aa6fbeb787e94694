// diffgraph/layers.cc

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

#include "diffgraph/layers.h"

namespace lipembed {

Var ApplyBatchNorm(const Var &x, const BatchNormVars &bn, const OpContext &ctx,
                   const BatchNormOptions &opts) {
  return BatchNorm(x, bn.gamma, bn.beta, bn.buffers, opts, ctx);
}

Var ResidualBlock(const Var &x, const ResidualBlockVars &w, std::size_t stride,
                  const OpContext &ctx, const BatchNormOptions &opts) {
  const Shape &in = x.shape();
  if (in.size() != 4) LE_ERR << "residual block expects [N,C,H,W], got "
                             << ShapeString(in);
  const std::size_t out_channels = w.conv1.shape().at(0);
  const bool needs_projection = stride > 1 || out_channels != in[1];
  if (needs_projection && !w.projection.valid())
    LE_ERR << "residual block with stride " << stride << " and channels "
           << in[1] << "->" << out_channels << " needs a projection skip";
  Conv2dOptions c1;
  c1.stride = {stride, stride};
  c1.padding = {1, 1};
  Conv2dOptions c2;
  c2.padding = {1, 1};
  Var y = Relu(ApplyBatchNorm(Conv2d(x, w.conv1, c1), w.bn1, ctx, opts));
  y = ApplyBatchNorm(Conv2d(y, w.conv2, c2), w.bn2, ctx, opts);
  Var skip = x;
  if (w.projection.valid()) {
    Conv2dOptions p;
    p.stride = {stride, stride};
    skip = ApplyBatchNorm(Conv2d(x, w.projection, p), w.projection_bn, ctx, opts);
  }
  return Relu(Add(skip, y));
}

}  // namespace lipembed
