// diffgraph/graph.h

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

#ifndef LIPEMBED_DIFFGRAPH_GRAPH_H_
#define LIPEMBED_DIFFGRAPH_GRAPH_H_

// A tape of operator applications.  Each op evaluates its forward kernel
// eagerly and records a closure that runs the analytic backward kernel.
// Backward() replays the tape in reverse creation order, which is a valid
// topological order because a node can only consume earlier nodes.

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "diffgraph/array.h"
#include "diffgraph/kernels.h"

namespace lipembed {

/// A learnable array and its accumulated gradient.
struct Parameter {
  Array value;
  Array grad;
};

/// Named parameters and non-learnable buffers (batch-norm statistics), both
/// kept in insertion order so serialization is stable.
class ParamSet {
 public:
  Parameter &Add(const std::string &name, Array init);
  Array &AddBuffer(const std::string &name, Array init);

  bool HasParam(const std::string &name) const;
  bool HasBuffer(const std::string &name) const;
  Parameter &Param(const std::string &name);
  const Parameter &Param(const std::string &name) const;
  Array &Buffer(const std::string &name);
  const Array &Buffer(const std::string &name) const;

  const std::vector<std::string> &param_names() const { return param_order_; }
  const std::vector<std::string> &buffer_names() const { return buffer_order_; }

  /// Drops every parameter and buffer whose name starts with prefix.
  void RemovePrefix(const std::string &prefix);

  void ZeroGrad();
  std::size_t NumParameters() const;

 private:
  std::map<std::string, Parameter> params_;
  std::map<std::string, Array> buffers_;
  std::vector<std::string> param_order_, buffer_order_;
};

class Graph;

/// Handle to a node on a Graph.  Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph *graph, int id) : graph_(graph), id_(id) {}
  const Array &value() const;
  const Shape &shape() const { return value().shape(); }
  int id() const { return id_; }
  Graph *graph() const { return graph_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph *graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  /// Data that needs no gradient.
  Var Constant(Array value);
  /// Data whose gradient should be kept (readable via grad() after Backward).
  Var Leaf(Array value);
  /// A parameter; Backward() adds this node's gradient into param->grad.
  Var Param(Parameter *param);

  /// Reverse-mode sweep from a single-element node.
  void Backward(const Var &loss);

  const Array &value(int id) const { return nodes_.at(id).value; }
  /// Gradient of a node after Backward (zeros if it received none).
  const Array &grad(const Var &v);
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Used by operator implementations.
  Var Record(Array value, bool requires_grad,
             std::function<void(const Array &out_grad)> backward);
  void AccumulateGrad(int id, const Array &g);
  const Array &node_grad(int id) const { return nodes_.at(id).grad; }

 private:
  struct Node {
    Array value;
    Array grad;
    bool requires_grad = false;
    Parameter *param = nullptr;
    std::function<void(const Array &)> backward;
  };
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Differentiable operators on graph nodes.

Var Conv3d(const Var &x, const Var &kernel, const Conv3dOptions &opts);
Var Conv2d(const Var &x, const Var &kernel, const Conv2dOptions &opts);
Var MaxPool3d(const Var &x, const Pool3dOptions &opts);
Var BatchNorm(const Var &x, const Var &gamma, const Var &beta,
              const BatchNormBuffers &buffers, const BatchNormOptions &opts,
              const OpContext &ctx);
/// relu(x) = max(x, 0); the subgradient at 0 is 0.
Var Relu(const Var &x);
Var Add(const Var &a, const Var &b);
/// x [N,C,...] + b [C] broadcast over every other axis.
Var AddChannelBias(const Var &x, const Var &bias);
Var Linear(const Var &x, const Var &weight, const Var &bias);

struct LstmState {
  Var h, c;
};
LstmState LstmStep(const Var &x, const LstmState &prev, const Var &input_weight,
                   const Var &hidden_weight, const Var &bias);

Var DropoutSeq(const Var &x, double p, OpContext *ctx);
Var TemporalPool(const Var &x, PoolMode mode);
/// Mean softmax cross-entropy over the rows of logits [N,K].
Var SoftmaxCrossEntropy(const Var &logits, const std::vector<std::size_t> &labels);

Var Reshape(const Var &x, Shape shape);
/// out.shape[i] = x.shape[axes[i]].
Var Permute(const Var &x, const std::vector<std::size_t> &axes);
/// Concatenation along the last axis; leading axes must agree.
Var ConcatLast(const Var &a, const Var &b);
/// Columns [begin, end) of the last axis.
Var SliceLast(const Var &x, std::size_t begin, std::size_t end);
/// Time step t of [B,T,F] as [B,F].
Var SelectStep(const Var &seq, std::size_t t);
/// Stacks T nodes of shape [B,F] into [B,T,F].
Var StackSteps(const std::vector<Var> &steps);
Var Scale(const Var &x, double alpha);

/// Plain-array permutation helper shared with tests.
Array PermuteArray(const Array &x, const std::vector<std::size_t> &axes);

}  // namespace lipembed

#endif  // LIPEMBED_DIFFGRAPH_GRAPH_H_
