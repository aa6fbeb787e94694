// diffgraph/op-suite.cc

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

#include "diffgraph/op-suite.h"

#include <functional>
#include <random>

#include "diffgraph/graph.h"
#include "diffgraph/layers.h"

namespace lipembed {

namespace {

using OpFn = std::function<Var(Graph &, const std::vector<Var> &)>;

Array Uniform(const Shape &shape, std::mt19937_64 *rng, double lo = -1.0,
              double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Array a(shape);
  for (double &v : a.values()) v = u(*rng);
  return a;
}

GradCheckReport CheckOp(std::vector<Array> inputs, const OpFn &f,
                        const GradCheckOptions &opts, std::mt19937_64 *rng) {
  Array probe;
  auto eval = [&](std::vector<Array> *grads) {
    Graph g;
    std::vector<Var> vars;
    for (const Array &a : inputs) vars.push_back(g.Leaf(a));
    const Var y = f(g, vars);
    if (probe.empty()) probe = Uniform(y.shape(), rng);
    double loss = 0.0;
    for (std::size_t i = 0; i < probe.size(); i++) loss += probe[i] * y.value()[i];
    if (grads) {
      const Var l = Linear(Reshape(y, {1, probe.size()}),
                           g.Constant(probe.Reshaped({1, probe.size()})),
                           g.Constant(Array({1})));
      g.Backward(l);
      for (const Var &v : vars) grads->push_back(g.grad(v));
    }
    return loss;
  };
  std::vector<Array> grads;
  eval(&grads);
  std::vector<GradGroup> groups;
  for (std::size_t i = 0; i < inputs.size(); i++)
    groups.push_back({"arg" + std::to_string(i), &inputs[i], &grads[i]});
  return GradCheck([&] { return eval(nullptr); }, groups, opts);
}

// Batch-norm statistics owned by the suite for the duration of one check.
struct Stats {
  Array mean, var, count;
  explicit Stats(std::size_t c) : mean({c}), var({c}, 1.0), count({1}) {}
  BatchNormBuffers buffers() { return {&mean, &var, &count}; }
};

}  // namespace

std::vector<OpCheck> CheckOperatorGradients(const GradCheckOptions &opts,
                                            uint64 seed) {
  std::mt19937_64 rng(seed);
  std::vector<OpCheck> out;
  auto run = [&](const std::string &name, std::vector<Array> inputs, const OpFn &f) {
    out.push_back({name, CheckOp(std::move(inputs), f, opts, &rng)});
  };

  run("conv3d", {Uniform({2, 2, 3, 6, 6}, &rng), Uniform({3, 2, 3, 3, 3}, &rng)},
      [](Graph &, const std::vector<Var> &v) {
        Conv3dOptions o;
        o.stride = {1, 2, 2};
        o.padding = {1, 1, 1};
        return Conv3d(v[0], v[1], o);
      });
  run("conv2d", {Uniform({2, 3, 5, 5}, &rng), Uniform({2, 3, 3, 3}, &rng)},
      [](Graph &, const std::vector<Var> &v) {
        Conv2dOptions o;
        o.stride = {2, 1};
        o.padding = {1, 1};
        return Conv2d(v[0], v[1], o);
      });
  run("max-pool3d", {Uniform({2, 2, 2, 6, 6}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return MaxPool3d(v[0], Pool3dOptions()); });
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    Stats stats(3);
    stats.mean = Uniform({3}, &rng, -0.3, 0.3);
    stats.var = Uniform({3}, &rng, 0.5, 1.5);
    run(mode == Mode::kTrain ? "batch-norm-train" : "batch-norm-eval",
        {Uniform({4, 3, 2, 2}, &rng), Uniform({3}, &rng, 0.5, 1.5), Uniform({3}, &rng)},
        [&stats, mode](Graph &, const std::vector<Var> &v) {
          stats.count[0] = 1;
          return BatchNorm(v[0], v[1], v[2], stats.buffers(), BatchNormOptions(),
                           OpContext(mode));
        });
  }
  run("relu", {Uniform({3, 7}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return Relu(v[0]); });
  run("add", {Uniform({2, 5}, &rng), Uniform({2, 5}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return Add(v[0], v[1]); });
  run("add-channel-bias", {Uniform({2, 3, 4}, &rng), Uniform({3}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return AddChannelBias(v[0], v[1]); });
  run("linear", {Uniform({3, 5}, &rng), Uniform({4, 5}, &rng), Uniform({4}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return Linear(v[0], v[1], v[2]); });
  run("lstm-step",
      {Uniform({2, 4}, &rng), Uniform({2, 3}, &rng), Uniform({2, 3}, &rng),
       Uniform({12, 4}, &rng), Uniform({12, 3}, &rng), Uniform({12}, &rng)},
      [](Graph &, const std::vector<Var> &v) {
        const LstmState s = LstmStep(v[0], {v[1], v[2]}, v[3], v[4], v[5]);
        return ConcatLast(s.h, s.c);
      });
  run("dropout-seq", {Uniform({3, 4, 5}, &rng)}, [](Graph &, const std::vector<Var> &v) {
    OpContext ctx(Mode::kTrain, 11);
    return DropoutSeq(v[0], 0.4, &ctx);
  });
  run("temporal-pool-average", {Uniform({2, 4, 3}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return TemporalPool(v[0], PoolMode::kAverage); });
  run("temporal-pool-last", {Uniform({2, 4, 3}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return TemporalPool(v[0], PoolMode::kLast); });
  run("softmax-cross-entropy", {Uniform({4, 5}, &rng, -2.0, 2.0)},
      [](Graph &, const std::vector<Var> &v) {
        return SoftmaxCrossEntropy(v[0], {0, 4, 2, 2});
      });
  run("reshape", {Uniform({2, 3, 4}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return Reshape(v[0], {6, 4}); });
  run("permute", {Uniform({2, 3, 4, 2}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return Permute(v[0], {0, 2, 1, 3}); });
  run("concat-last", {Uniform({2, 3, 4}, &rng), Uniform({2, 3, 1}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return ConcatLast(v[0], v[1]); });
  run("slice-last", {Uniform({2, 3, 6}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return SliceLast(v[0], 1, 4); });
  run("select-step", {Uniform({2, 3, 4}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return SelectStep(v[0], 1); });
  run("stack-steps", {Uniform({2, 4}, &rng), Uniform({2, 4}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return StackSteps({v[1], v[0], v[1]}); });
  run("scale", {Uniform({3, 3}, &rng)},
      [](Graph &, const std::vector<Var> &v) { return Scale(v[0], -1.7); });
  for (bool proj : {false, true}) {
    const std::size_t cin = proj ? 2 : 3, cout = 3;
    Stats s1(cout), s2(cout), sp(cout);
    std::vector<Array> in = {Uniform({2, cin, 4, 4}, &rng),
                             Uniform({cout, cin, 3, 3}, &rng),
                             Uniform({cout, cout, 3, 3}, &rng),
                             Uniform({cout}, &rng, 0.5, 1.5), Uniform({cout}, &rng),
                             Uniform({cout}, &rng, 0.5, 1.5), Uniform({cout}, &rng)};
    if (proj) {
      in.push_back(Uniform({cout, cin, 1, 1}, &rng));
      in.push_back(Uniform({cout}, &rng, 0.5, 1.5));
      in.push_back(Uniform({cout}, &rng));
    }
    run(proj ? "residual-block-projection" : "residual-block", std::move(in),
        [&, proj](Graph &, const std::vector<Var> &v) {
          ResidualBlockVars w;
          w.conv1 = v[1];
          w.conv2 = v[2];
          w.bn1 = {v[3], v[4], s1.buffers()};
          w.bn2 = {v[5], v[6], s2.buffers()};
          if (proj) {
            w.projection = v[7];
            w.projection_bn = {v[8], v[9], sp.buffers()};
          }
          return ResidualBlock(v[0], w, proj ? 2 : 1, OpContext(Mode::kTrain));
        });
  }
  return out;
}

}  // namespace lipembed
