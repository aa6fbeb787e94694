// diffgraph/adam.cc

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

#include "diffgraph/adam.h"

#include <cmath>

namespace lipembed {

void AdamStep(ParamSet *params, AdamState *state) {
  AdamStep(params, state, params->param_names());
}

void AdamStep(ParamSet *params, AdamState *state,
              const std::vector<std::string> &names) {
  const AdamOptions &o = state->opts;
  if (!(o.learning_rate > 0.0)) LE_ERR << "Adam learning rate must be positive";
  for (const std::string &name : names) {
    const Parameter &p = params->Param(name);
    if (p.grad.shape() != p.value.shape())
      LE_ERR << "Gradient of " << name << " has shape "
             << ShapeString(p.grad.shape()) << ", parameter has "
             << ShapeString(p.value.shape());
    if (!p.grad.AllFinite())
      LE_ERR << "Non-finite gradient for parameter " << name;
  }
  state->step++;
  const double t = double(state->step);
  const double c1 = 1.0 - std::pow(o.beta1, t), c2 = 1.0 - std::pow(o.beta2, t);
  for (const std::string &name : names) {
    Parameter &p = params->Param(name);
    auto m_it = state->first_moment.find(name);
    if (m_it == state->first_moment.end() ||
        m_it->second.shape() != p.value.shape()) {
      state->first_moment[name] = Array(p.value.shape());
      state->second_moment[name] = Array(p.value.shape());
    }
    Array &m = state->first_moment[name], &v = state->second_moment[name];
    for (std::size_t i = 0; i < p.value.size(); i++) {
      const double g = p.grad[i];
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
      p.value[i] -= o.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + o.epsilon);
    }
  }
}

}  // namespace lipembed
