// diffgraph/op-context.h

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

#ifndef LIPEMBED_DIFFGRAPH_OP_CONTEXT_H_
#define LIPEMBED_DIFFGRAPH_OP_CONTEXT_H_

#include <random>

#include "base/common.h"

namespace lipembed {

enum class Mode { kTrain, kEval };

/// Mode plus the generator behind every stochastic operator.  Two contexts
/// constructed with the same seed draw identical dropout masks.
class OpContext {
 public:
  explicit OpContext(Mode mode = Mode::kEval, uint64 seed = 17)
      : mode_(mode), rng_(seed) {}

  Mode mode() const { return mode_; }
  bool training() const { return mode_ == Mode::kTrain; }
  void set_mode(Mode mode) { mode_ = mode; }

  std::mt19937_64 &rng() { return rng_; }
  void Reseed(uint64 seed) { rng_.seed(seed); }

 private:
  Mode mode_;
  std::mt19937_64 rng_;
};

}  // namespace lipembed

#endif  // LIPEMBED_DIFFGRAPH_OP_CONTEXT_H_
