// diffgraph/grad-check.h

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

#ifndef LIPEMBED_DIFFGRAPH_GRAD_CHECK_H_
#define LIPEMBED_DIFFGRAPH_GRAD_CHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "diffgraph/array.h"

namespace lipembed {

struct GradCheckOptions {
  /// Central-difference step is step * max(1, |x|).
  double step = 1e-5;
  /// A group passes when every checked coordinate is below this.
  double tolerance = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, abs_floor).
  double abs_floor = 1e-6;
  /// A coordinate is a kink (excluded) when its one-sided slopes differ by
  /// more than kink_tolerance * max(|left|, |right|, 1e-3).
  double kink_tolerance = 1e-3;
  /// 0 checks every coordinate; otherwise a seeded sample of this many.
  std::size_t max_coords_per_group = 0;
  uint64 seed = 17;
};

/// One array whose entries are perturbed, with its analytic gradient at the
/// unperturbed point.
struct GradGroup {
  std::string name;
  Array *value;
  const Array *analytic;
};

struct GroupReport {
  std::string name;
  std::size_t checked = 0;
  std::size_t excluded = 0;  // non-differentiable points
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GroupReport> groups;
  bool passed = true;
  double max_rel_error = 0.0;
  std::string ToString() const;
};

/// Compares analytic gradients against central finite differences of
/// loss() and reports the worst relative error per group.  Entries are
/// restored exactly after probing.  Failures are reported, never thrown.
GradCheckReport GradCheck(const std::function<double()> &loss,
                          const std::vector<GradGroup> &groups,
                          const GradCheckOptions &opts = {});

}  // namespace lipembed

#endif  // LIPEMBED_DIFFGRAPH_GRAD_CHECK_H_
