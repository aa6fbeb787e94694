// diffgraph/op-suite.h

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

#ifndef LIPEMBED_DIFFGRAPH_OP_SUITE_H_
#define LIPEMBED_DIFFGRAPH_OP_SUITE_H_

#include <string>
#include <vector>

#include "diffgraph/grad-check.h"

namespace lipembed {

struct OpCheck {
  std::string op;
  GradCheckReport report;
};

/// Finite-difference check of every differentiable operator on small random
/// inputs, each loss a fixed random projection of the operator output.
std::vector<OpCheck> CheckOperatorGradients(const GradCheckOptions &opts = {},
                                            uint64 seed = 17);

}  // namespace lipembed

#endif  // LIPEMBED_DIFFGRAPH_OP_SUITE_H_
