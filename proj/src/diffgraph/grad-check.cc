// diffgraph/grad-check.cc

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

#include "diffgraph/grad-check.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace lipembed {

std::string GradCheckReport::ToString() const {
  std::string s;
  char line[256];
  std::snprintf(line, sizeof(line), "%-32s %8s %8s %14s  %s\n", "group",
                "checked", "kinks", "max-rel-err", "status");
  s += line;
  for (const GroupReport &g : groups) {
    std::snprintf(line, sizeof(line), "%-32s %8zu %8zu %14.3e  %s\n",
                  g.name.c_str(), g.checked, g.excluded, g.max_rel_error,
                  g.passed ? "ok" : "FAIL");
    s += line;
  }
  return s;
}

GradCheckReport GradCheck(const std::function<double()> &loss,
                          const std::vector<GradGroup> &groups,
                          const GradCheckOptions &opts) {
  GradCheckReport report;
  std::mt19937_64 rng(opts.seed);
  const double f0 = loss();
  for (const GradGroup &group : groups) {
    GroupReport gr;
    gr.name = group.name;
    Array &x = *group.value;
    const Array &analytic = *group.analytic;
    if (analytic.size() != x.size()) {
      gr.passed = false;
      gr.max_rel_error = INFINITY;
      report.groups.push_back(gr);
      report.passed = false;
      continue;
    }
    std::vector<std::size_t> coords(x.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (opts.max_coords_per_group > 0 && coords.size() > opts.max_coords_per_group) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opts.max_coords_per_group);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double orig = x[i];
      const double h = opts.step * std::max(1.0, std::abs(orig));
      x[i] = orig + h;
      const double f_plus = loss();
      x[i] = orig - h;
      const double f_minus = loss();
      x[i] = orig;
      const double right = (f_plus - f0) / h, left = (f0 - f_minus) / h;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      if (std::abs(right - left) >
          opts.kink_tolerance *
              std::max({std::abs(left), std::abs(right), 1e-3})) {
        gr.excluded++;
        continue;
      }
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      gr.checked++;
      if (!(rel <= gr.max_rel_error)) gr.max_rel_error = rel;  // NaN sticks
    }
    gr.passed = gr.max_rel_error < opts.tolerance;
    report.passed = report.passed && gr.passed;
    report.max_rel_error = std::max(report.max_rel_error, gr.max_rel_error);
    report.groups.push_back(gr);
  }
  return report;
}

}  // namespace lipembed
