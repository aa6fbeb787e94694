// diffgraph/adam-test.cc

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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "diffgraph/adam.h"

namespace lipembed {
namespace {

TEST_CASE("zero gradient leaves parameters unchanged") {
  ParamSet ps;
  ps.Add("w", Array({3}, 0.25));
  AdamState st;
  for (int i = 0; i < 5; i++) AdamStep(&ps, &st);
  CHECK(ps.Param("w").value == Array({3}, 0.25));
  CHECK(st.step == 5);
  CHECK(st.first_moment.at("w").shape() == Shape{3});
}

TEST_CASE("first step moves each coordinate by about the learning rate") {
  ParamSet ps;
  ps.Add("w", Array({4}, 1.0));
  Array g({4});
  g[0] = 3.0;
  g[1] = -0.01;
  g[2] = 250.0;
  g[3] = -7.0;
  ps.Param("w").grad = g;
  AdamState st;
  st.opts.learning_rate = 1e-3;
  AdamStep(&ps, &st);
  // m-hat = g and v-hat = g^2 after one step, so the update is lr*g/(|g|+eps).
  for (std::size_t i = 0; i < 4; i++) {
    const double expected = 1.0 - 1e-3 * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK(ps.Param("w").value[i] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(1.0 - ps.Param("w").value[i]) == doctest::Approx(1e-3).epsilon(1e-5));
  }
}

TEST_CASE("ten-step trajectory matches a scalar Adam oracle") {
  // Minimize (x - 3)^2 from x = 0 with both implementations.
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double x = 0.0, m = 0.0, v = 0.0, b1t = 1.0, b2t = 1.0;
  ParamSet ps;
  ps.Add("x", Array({1}, 0.0));
  AdamState st;
  st.opts.learning_rate = lr;
  for (int step = 1; step <= 10; step++) {
    const double g = 2.0 * (x - 3.0);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    b1t *= b1;
    b2t *= b2;
    x -= lr * (m / (1 - b1t)) / (std::sqrt(v / (1 - b2t)) + eps);

    Parameter &p = ps.Param("x");
    p.grad[0] = 2.0 * (p.value[0] - 3.0);
    AdamStep(&ps, &st);
    CHECK(std::abs(p.value[0] - x) < 1e-12);
  }
  CHECK(st.step == 10);
}

TEST_CASE("non-finite gradients are rejected with the parameter name") {
  ParamSet ps;
  ps.Add("ok", Array({2}, 1.0));
  ps.Add("layer2.weight", Array({2}, 1.0));
  ps.Param("ok").grad = Array({2}, 0.5);
  ps.Param("layer2.weight").grad[1] = std::numeric_limits<double>::quiet_NaN();
  AdamState st;
  try {
    AdamStep(&ps, &st);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("layer2.weight") != std::string::npos);
  }
  // Nothing was applied.
  CHECK(ps.Param("ok").value == Array({2}, 1.0));
  CHECK(st.step == 0);
}

}  // namespace
}  // namespace lipembed
