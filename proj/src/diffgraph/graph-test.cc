// diffgraph/graph-test.cc

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
#include <functional>
#include <random>
#include <set>

#include "doctest.h"
#include "diffgraph/grad-check.h"
#include "diffgraph/graph.h"
#include "diffgraph/layers.h"
#include "diffgraph/op-suite.h"
#include "test-util.h"

namespace lipembed {
namespace {

using testing::Project;
using testing::RandomArray;

// Builds f(inputs) on a fresh graph, projects onto a fixed random direction,
// and checks every input's tape gradient against finite differences.
GradCheckReport CheckTape(
    std::vector<Array> *inputs,
    const std::function<Var(Graph &, const std::vector<Var> &)> &f,
    uint64 seed = 1) {
  std::mt19937_64 rng(seed);
  Array probe;
  auto eval = [&](std::vector<Array> *grads) {
    Graph g;
    std::vector<Var> vars;
    for (const Array &a : *inputs) vars.push_back(g.Leaf(a));
    Var y = f(g, vars);
    if (probe.empty()) probe = RandomArray(y.shape(), &rng);
    const double loss = Project(y.value(), probe);
    if (grads) {
      Graph &gr = g;
      Var w = gr.Constant(probe);
      // loss = sum(y * w) expressed through Linear on flattened vectors.
      Var flat_y = Reshape(y, {1, y.value().size()});
      Var flat_w = Reshape(w, {1, probe.size()});
      Var l = Linear(flat_y, flat_w, gr.Constant(Array({1})));
      gr.Backward(l);
      for (Var &v : vars) grads->push_back(gr.grad(v));
    }
    return loss;
  };
  std::vector<Array> grads;
  eval(&grads);
  std::vector<GradGroup> groups;
  for (std::size_t i = 0; i < inputs->size(); i++)
    groups.push_back({"input" + std::to_string(i), &(*inputs)[i], &grads[i]});
  return GradCheck([&] { return eval(nullptr); }, groups);
}

TEST_CASE("tape gradients of structural operators") {
  std::mt19937_64 rng(2);
  SUBCASE("permute") {
    std::vector<Array> in = {RandomArray({2, 3, 4, 2}, &rng)};
    CHECK(CheckTape(&in, [](Graph &, const std::vector<Var> &v) {
            return Permute(v[0], {0, 2, 1, 3});
          }).passed);
  }
  SUBCASE("concat, slice, select, stack") {
    std::vector<Array> in = {RandomArray({2, 3, 4}, &rng), RandomArray({2, 3, 1}, &rng)};
    CHECK(CheckTape(&in, [](Graph &, const std::vector<Var> &v) {
            Var c = ConcatLast(v[0], v[1]);
            std::vector<Var> steps;
            for (std::size_t t = 3; t-- > 0;) steps.push_back(SelectStep(c, t));
            return SliceLast(StackSteps(steps), 1, 5);
          }).passed);
  }
  SUBCASE("add, scale, relu and channel bias") {
    std::vector<Array> in = {RandomArray({2, 3, 2}, &rng), RandomArray({2, 3, 2}, &rng),
                             RandomArray({3}, &rng)};
    CHECK(CheckTape(&in, [](Graph &, const std::vector<Var> &v) {
            return Relu(AddChannelBias(Scale(Add(v[0], v[1]), 1.7), v[2]));
          }).passed);
  }
}

TEST_CASE("tape gradients of the network operators") {
  std::mt19937_64 rng(3);
  SUBCASE("conv3d and max pool") {
    std::vector<Array> in = {RandomArray({2, 1, 3, 8, 8}, &rng),
                             RandomArray({2, 1, 3, 3, 3}, &rng)};
    CHECK(CheckTape(&in, [](Graph &, const std::vector<Var> &v) {
            Conv3dOptions o;
            o.stride = {1, 2, 2};
            o.padding = {1, 1, 1};
            return MaxPool3d(Conv3d(v[0], v[1], o), Pool3dOptions());
          }).passed);
  }
  SUBCASE("lstm chain") {
    std::vector<Array> in = {RandomArray({2, 3, 4}, &rng), RandomArray({12, 4}, &rng),
                             RandomArray({12, 3}, &rng), RandomArray({12}, &rng)};
    CHECK(CheckTape(&in, [](Graph &g, const std::vector<Var> &v) {
            LstmState s{g.Constant(Array({2, 3})), g.Constant(Array({2, 3}))};
            std::vector<Var> hs;
            for (std::size_t t = 0; t < 3; t++) {
              s = LstmStep(SelectStep(v[0], t), s, v[1], v[2], v[3]);
              hs.push_back(s.h);
            }
            return TemporalPool(StackSteps(hs), PoolMode::kAverage);
          }).passed);
  }
  SUBCASE("dropout with a fixed seed") {
    std::vector<Array> in = {RandomArray({3, 4, 5}, &rng)};
    CHECK(CheckTape(&in, [](Graph &, const std::vector<Var> &v) {
            OpContext ctx(Mode::kTrain, 11);
            return DropoutSeq(v[0], 0.4, &ctx);
          }).passed);
  }
  SUBCASE("cross-entropy") {
    std::vector<Array> in = {RandomArray({4, 5}, &rng, -2, 2)};
    CHECK(CheckTape(&in, [](Graph &, const std::vector<Var> &v) {
            return SoftmaxCrossEntropy(v[0], {0, 4, 2, 2});
          }).passed);
  }
}

struct BlockFixture {
  ParamSet ps;
  ResidualBlockVars Bind(Graph &g) {
    auto bn = [&](const std::string &p) {
      return BatchNormVars{g.Param(&ps.Param(p + ".gamma")), g.Param(&ps.Param(p + ".beta")),
                           {&ps.Buffer(p + ".mean"), &ps.Buffer(p + ".var"),
                            &ps.Buffer(p + ".count")}};
    };
    ResidualBlockVars w;
    w.conv1 = g.Param(&ps.Param("conv1"));
    w.conv2 = g.Param(&ps.Param("conv2"));
    w.bn1 = bn("bn1");
    w.bn2 = bn("bn2");
    if (ps.HasParam("proj")) {
      w.projection = g.Param(&ps.Param("proj"));
      w.projection_bn = bn("proj_bn");
    }
    return w;
  }
  BlockFixture(std::size_t cin, std::size_t cout, bool proj, std::mt19937_64 *rng,
               double scale) {
    auto add_bn = [&](const std::string &p, std::size_t c) {
      ps.Add(p + ".gamma", RandomArray({c}, rng, 0.5, 1.5));
      ps.Add(p + ".beta", RandomArray({c}, rng, -0.2, 0.2));
      ps.AddBuffer(p + ".mean", Array({c}));
      ps.AddBuffer(p + ".var", Array({c}, 1.0));
      ps.AddBuffer(p + ".count", Array({1}));
    };
    Array c1 = RandomArray({cout, cin, 3, 3}, rng), c2 = RandomArray({cout, cout, 3, 3}, rng);
    c1.Scale(scale);
    c2.Scale(scale);
    ps.Add("conv1", c1);
    ps.Add("conv2", c2);
    add_bn("bn1", cout);
    add_bn("bn2", cout);
    if (proj) {
      ps.Add("proj", RandomArray({cout, cin, 1, 1}, rng));
      add_bn("proj_bn", cout);
    }
  }
};

TEST_CASE("residual block with zero convolutions passes nonnegative input") {
  std::mt19937_64 rng(4);
  BlockFixture fx(3, 3, false, &rng, 0.0);
  for (const char *p : {"bn1.beta", "bn2.beta"}) fx.ps.Param(p).value.SetZero();
  Array x = RandomArray({2, 3, 4, 4}, &rng, 0.0, 2.0);
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    Graph g;
    Var y = ResidualBlock(g.Constant(x), fx.Bind(g), 1, OpContext(mode));
    CHECK(MaxAbsDiff(y.value(), x) < 1e-12);
  }
}

TEST_CASE("strided residual block halves spatial extents") {
  std::mt19937_64 rng(5);
  BlockFixture fx(2, 4, true, &rng, 1.0);
  Graph g;
  Var y = ResidualBlock(g.Constant(RandomArray({2, 2, 6, 8}, &rng)), fx.Bind(g), 2,
                        OpContext(Mode::kTrain));
  CHECK(y.shape() == Shape{2, 4, 3, 4});

  BlockFixture no_proj(2, 4, false, &rng, 1.0);
  Graph g2;
  CHECK_THROWS_AS(ResidualBlock(g2.Constant(RandomArray({2, 2, 6, 8}, &rng)),
                                no_proj.Bind(g2), 2, OpContext(Mode::kTrain)),
                  Error);
}

TEST_CASE("residual block gradients match finite differences") {
  std::mt19937_64 rng(6);
  for (bool proj : {false, true}) {
    BlockFixture fx(proj ? 2 : 3, 3, proj, &rng, 1.0);
    const std::size_t stride = proj ? 2 : 1;
    Array x = RandomArray({2, proj ? 2u : 3u, 4, 4}, &rng);
    Array probe;
    Array dx;
    auto eval = [&](bool backward) {
      Graph g;
      Var xv = g.Leaf(x);
      Var y = ResidualBlock(xv, fx.Bind(g), stride, OpContext(Mode::kTrain));
      if (probe.empty()) probe = RandomArray(y.shape(), &rng);
      if (backward) {
        Var l = Linear(Reshape(y, {1, probe.size()}),
                       g.Constant(probe.Reshaped({1, probe.size()})),
                       g.Constant(Array({1})));
        fx.ps.ZeroGrad();
        g.Backward(l);
        dx = g.grad(xv);
      }
      return Project(y.value(), probe);
    };
    eval(true);
    std::vector<GradGroup> groups = {{"x", &x, &dx}};
    std::vector<Array> analytic;
    analytic.reserve(fx.ps.param_names().size());
    for (const std::string &n : fx.ps.param_names()) {
      analytic.push_back(fx.ps.Param(n).grad);
      groups.push_back({n, &fx.ps.Param(n).value, &analytic.back()});
    }
    GradCheckReport r = GradCheck([&] { return eval(false); }, groups);
    INFO(r.ToString());
    CHECK(r.passed);
  }
}

TEST_CASE("operator suite covers every operator and passes") {
  const std::vector<OpCheck> checks = CheckOperatorGradients();
  std::set<std::string> names;
  for (const OpCheck &c : checks) {
    INFO(c.op << "\n" << c.report.ToString());
    CHECK(c.report.passed);
    CHECK(c.report.max_rel_error < 1e-4);
    names.insert(c.op);
  }
  CHECK(names.size() == checks.size());
  CHECK(checks.size() == 23);
}

TEST_CASE("grad check harness") {
  std::mt19937_64 rng(7);
  SUBCASE("linear map is exact") {
    Array w = RandomArray({3, 4}, &rng), x = RandomArray({4}, &rng),
          c = RandomArray({3}, &rng);
    // f(W) = c . (W x), gradient c x^T.
    Array grad({3, 4});
    for (std::size_t i = 0; i < 3; i++)
      for (std::size_t j = 0; j < 4; j++) grad.at({i, j}) = c[i] * x[j];
    auto f = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < 3; i++)
        for (std::size_t j = 0; j < 4; j++) s += c[i] * w.at({i, j}) * x[j];
      return s;
    };
    GradCheckReport r = GradCheck(f, {{"W", &w, &grad}});
    CHECK(r.passed);
    CHECK(r.max_rel_error < 1e-8);
  }
  SUBCASE("relu kinks are excluded, smooth points pass") {
    Array x({3});
    x[0] = 0.5;
    x[1] = -0.7;
    x[2] = 0.0;
    Array grad({3});
    grad[0] = 1.0;  // relu'(0.5)
    grad[1] = 0.0;
    grad[2] = 0.0;  // subgradient convention at 0
    auto f = [&] {
      double s = 0.0;
      for (double v : x.values()) s += std::max(v, 0.0);
      return s;
    };
    GradCheckReport r = GradCheck(f, {{"x", &x, &grad}});
    CHECK(r.passed);
    CHECK(r.groups[0].checked == 2);
    CHECK(r.groups[0].excluded == 1);
  }
  SUBCASE("wrong gradients are reported, not thrown") {
    Array x({2}, 1.0), grad({2}, 5.0);
    GradCheckReport r = GradCheck([&] { return x[0] * x[0] + x[1]; }, {{"x", &x, &grad}});
    CHECK_FALSE(r.passed);
    CHECK(r.groups[0].max_rel_error > 0.5);
    CHECK(x[0] == 1.0);  // restored
  }
}

TEST_CASE("param set bookkeeping") {
  ParamSet ps;
  ps.Add("a.w", Array({2}));
  ps.Add("b.w", Array({3}));
  ps.AddBuffer("a.mean", Array({2}));
  CHECK_THROWS_AS(ps.Add("a.w", Array({1})), Error);
  CHECK(ps.NumParameters() == 5);
  ps.RemovePrefix("a.");
  CHECK(ps.param_names() == std::vector<std::string>{"b.w"});
  CHECK(ps.buffer_names().empty());
  CHECK_THROWS_AS(ps.Param("a.w"), Error);
}

}  // namespace
}  // namespace lipembed
