// diffgraph/layers.h

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

#ifndef LIPEMBED_DIFFGRAPH_LAYERS_H_
#define LIPEMBED_DIFFGRAPH_LAYERS_H_

#include "diffgraph/graph.h"

namespace lipembed {

struct BatchNormVars {
  Var gamma, beta;
  BatchNormBuffers buffers;
};

Var ApplyBatchNorm(const Var &x, const BatchNormVars &bn, const OpContext &ctx,
                   const BatchNormOptions &opts = {});

/// Basic residual block: relu(skip(x) + bn2(conv2(relu(bn1(conv1(x)))))).
/// conv1 is 3x3 with the block stride, conv2 is 3x3 stride 1, both padded
/// by 1.  The skip is the identity unless the stride is above 1 or the
/// channel count changes, in which case a 1x1 strided projection followed by
/// batch norm is required.
struct ResidualBlockVars {
  Var conv1, conv2;
  BatchNormVars bn1, bn2;
  Var projection;  // unbound for an identity skip
  BatchNormVars projection_bn;
};

Var ResidualBlock(const Var &x, const ResidualBlockVars &w, std::size_t stride,
                  const OpContext &ctx, const BatchNormOptions &opts = {});

}  // namespace lipembed

#endif  // LIPEMBED_DIFFGRAPH_LAYERS_H_
