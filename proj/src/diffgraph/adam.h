// diffgraph/adam.h

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

#ifndef LIPEMBED_DIFFGRAPH_ADAM_H_
#define LIPEMBED_DIFFGRAPH_ADAM_H_

#include <map>
#include <string>
#include <vector>

#include "diffgraph/graph.h"

namespace lipembed {

struct AdamOptions {
  double learning_rate = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments are created lazily, per parameter name, with the parameter's
/// shape; the step count is shared by all parameters.
struct AdamState {
  AdamOptions opts;
  int64 step = 0;
  std::map<std::string, Array> first_moment;
  std::map<std::string, Array> second_moment;
};

/// One bias-corrected Adam update of every parameter in the set from its
/// accumulated gradient:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
/// All gradients are validated before anything is modified; a non-finite
/// entry throws an Error naming the parameter.
void AdamStep(ParamSet *params, AdamState *state);
/// Same, restricted to the named parameters; the others are left alone.
void AdamStep(ParamSet *params, AdamState *state,
              const std::vector<std::string> &names);

}  // namespace lipembed

#endif  // LIPEMBED_DIFFGRAPH_ADAM_H_
