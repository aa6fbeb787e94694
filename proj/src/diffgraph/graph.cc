// diffgraph/graph.cc

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

#include "diffgraph/graph.h"

#include <algorithm>
#include <memory>

namespace lipembed {

// ParamSet ------------------------------------------------------------------

Parameter &ParamSet::Add(const std::string &name, Array init) {
  if (params_.count(name) || buffers_.count(name))
    LE_ERR << "Duplicate parameter name " << name;
  Parameter p;
  p.grad = Array(init.shape());
  p.value = std::move(init);
  param_order_.push_back(name);
  return params_.emplace(name, std::move(p)).first->second;
}

Array &ParamSet::AddBuffer(const std::string &name, Array init) {
  if (params_.count(name) || buffers_.count(name))
    LE_ERR << "Duplicate buffer name " << name;
  buffer_order_.push_back(name);
  return buffers_.emplace(name, std::move(init)).first->second;
}

bool ParamSet::HasParam(const std::string &name) const {
  return params_.count(name) > 0;
}

bool ParamSet::HasBuffer(const std::string &name) const {
  return buffers_.count(name) > 0;
}

Parameter &ParamSet::Param(const std::string &name) {
  auto it = params_.find(name);
  if (it == params_.end()) LE_ERR << "No parameter named " << name;
  return it->second;
}

const Parameter &ParamSet::Param(const std::string &name) const {
  auto it = params_.find(name);
  if (it == params_.end()) LE_ERR << "No parameter named " << name;
  return it->second;
}

Array &ParamSet::Buffer(const std::string &name) {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) LE_ERR << "No buffer named " << name;
  return it->second;
}

const Array &ParamSet::Buffer(const std::string &name) const {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) LE_ERR << "No buffer named " << name;
  return it->second;
}

void ParamSet::RemovePrefix(const std::string &prefix) {
  auto starts = [&](const std::string &s) { return s.rfind(prefix, 0) == 0; };
  for (auto it = params_.begin(); it != params_.end();)
    it = starts(it->first) ? params_.erase(it) : std::next(it);
  for (auto it = buffers_.begin(); it != buffers_.end();)
    it = starts(it->first) ? buffers_.erase(it) : std::next(it);
  std::erase_if(param_order_, starts);
  std::erase_if(buffer_order_, starts);
}

void ParamSet::ZeroGrad() {
  for (auto &kv : params_) kv.second.grad.SetZero();
}

std::size_t ParamSet::NumParameters() const {
  std::size_t n = 0;
  for (const auto &kv : params_) n += kv.second.value.size();
  return n;
}

// Graph -----------------------------------------------------------------------

const Array &Var::value() const {
  if (!graph_) LE_ERR << "Use of an unbound Var";
  return graph_->value(id_);
}

Var Graph::Record(Array value, bool requires_grad,
                  std::function<void(const Array &)> backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, int(nodes_.size()) - 1);
}

Var Graph::Constant(Array value) { return Record(std::move(value), false, {}); }

Var Graph::Leaf(Array value) { return Record(std::move(value), true, {}); }

Var Graph::Param(Parameter *param) {
  Var v = Record(param->value, true, {});
  nodes_.back().param = param;
  return v;
}

void Graph::AccumulateGrad(int id, const Array &g) {
  Node &node = nodes_.at(id);
  if (!node.requires_grad) return;
  if (g.size() != node.value.size())
    LE_ERR << "Gradient of shape " << ShapeString(g.shape())
           << " for node of shape " << ShapeString(node.value.shape());
  if (node.grad.empty()) {
    node.grad = g;
    node.grad.Reshape(node.value.shape());
  } else {
    for (std::size_t i = 0; i < g.size(); i++) node.grad[i] += g[i];
  }
}

const Array &Graph::grad(const Var &v) {
  Node &node = nodes_.at(v.id());
  if (node.grad.empty()) node.grad = Array(node.value.shape());
  return node.grad;
}

void Graph::Backward(const Var &loss) {
  if (loss.graph() != this) LE_ERR << "Loss belongs to a different graph";
  Node &root = nodes_.at(loss.id());
  if (root.value.size() != 1)
    LE_ERR << "Backward needs a single-element loss, got shape "
           << ShapeString(root.value.shape());
  if (!root.requires_grad) return;
  AccumulateGrad(loss.id(), Array(root.value.shape(), 1.0));
  for (int id = loss.id(); id >= 0; id--) {
    Node &node = nodes_[id];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(node.grad);
    if (node.param) node.param->grad.AddScaled(node.grad);
  }
}

// Operators -------------------------------------------------------------------

namespace {

bool AnyRequiresGrad(std::initializer_list<const Var *> vars) {
  for (const Var *v : vars)
    if (v->graph()->requires_grad(v->id())) return true;
  return false;
}

void CheckSameGraph(const Var &a, const Var &b) {
  if (a.graph() != b.graph() || !a.graph())
    LE_ERR << "Operands belong to different graphs";
}

}  // namespace

Var Conv3d(const Var &x, const Var &kernel, const Conv3dOptions &opts) {
  CheckSameGraph(x, kernel);
  Graph *g = x.graph();
  const int xi = x.id(), ki = kernel.id();
  return g->Record(
      Conv3d(x.value(), kernel.value(), opts), AnyRequiresGrad({&x, &kernel}),
      [g, xi, ki, opts](const Array &dy) {
        Array dx, dk;
        const bool want_x = g->requires_grad(xi), want_k = g->requires_grad(ki);
        Conv3dBackward(g->value(xi), g->value(ki), opts, dy,
                       want_x ? &dx : nullptr, want_k ? &dk : nullptr);
        if (want_x) g->AccumulateGrad(xi, dx);
        if (want_k) g->AccumulateGrad(ki, dk);
      });
}

Var Conv2d(const Var &x, const Var &kernel, const Conv2dOptions &opts) {
  CheckSameGraph(x, kernel);
  Graph *g = x.graph();
  const int xi = x.id(), ki = kernel.id();
  return g->Record(
      Conv2d(x.value(), kernel.value(), opts), AnyRequiresGrad({&x, &kernel}),
      [g, xi, ki, opts](const Array &dy) {
        Array dx, dk;
        const bool want_x = g->requires_grad(xi), want_k = g->requires_grad(ki);
        Conv2dBackward(g->value(xi), g->value(ki), opts, dy,
                       want_x ? &dx : nullptr, want_k ? &dk : nullptr);
        if (want_x) g->AccumulateGrad(xi, dx);
        if (want_k) g->AccumulateGrad(ki, dk);
      });
}

Var MaxPool3d(const Var &x, const Pool3dOptions &opts) {
  Graph *g = x.graph();
  const int xi = x.id();
  auto argmax = std::make_shared<std::vector<std::size_t>>();
  Array out = MaxPool3d(x.value(), opts, argmax.get());
  return g->Record(std::move(out), AnyRequiresGrad({&x}),
                   [g, xi, argmax](const Array &dy) {
                     g->AccumulateGrad(
                         xi, MaxPool3dBackward(g->value(xi).shape(), *argmax, dy));
                   });
}

Var BatchNorm(const Var &x, const Var &gamma, const Var &beta,
              const BatchNormBuffers &buffers, const BatchNormOptions &opts,
              const OpContext &ctx) {
  CheckSameGraph(x, gamma);
  CheckSameGraph(x, beta);
  Graph *g = x.graph();
  const int xi = x.id(), gi = gamma.id(), bi = beta.id();
  auto cache = std::make_shared<BatchNormCache>();
  Array out =
      BatchNorm(x.value(), gamma.value(), beta.value(), buffers, opts, ctx,
                cache.get());
  return g->Record(std::move(out), AnyRequiresGrad({&x, &gamma, &beta}),
                   [g, xi, gi, bi, cache](const Array &dy) {
                     Array dx, dg, db;
                     const bool want_x = g->requires_grad(xi);
                     BatchNormBackward(*cache, g->value(gi), dy,
                                       want_x ? &dx : nullptr, &dg, &db);
                     if (want_x) g->AccumulateGrad(xi, dx);
                     g->AccumulateGrad(gi, dg);
                     g->AccumulateGrad(bi, db);
                   });
}

Var Relu(const Var &x) {
  Graph *g = x.graph();
  const int xi = x.id();
  Array out = x.value();
  for (double &v : out.values()) v = v > 0.0 ? v : 0.0;
  return g->Record(std::move(out), AnyRequiresGrad({&x}),
                   [g, xi](const Array &dy) {
                     const Array &in = g->value(xi);
                     Array dx(in.shape());
                     for (std::size_t i = 0; i < in.size(); i++)
                       dx[i] = in[i] > 0.0 ? dy[i] : 0.0;
                     g->AccumulateGrad(xi, dx);
                   });
}

Var Add(const Var &a, const Var &b) {
  CheckSameGraph(a, b);
  if (a.shape() != b.shape())
    LE_ERR << "Add of shapes " << ShapeString(a.shape()) << " and "
           << ShapeString(b.shape());
  Graph *g = a.graph();
  const int ai = a.id(), bi = b.id();
  Array out = a.value();
  out.AddScaled(b.value());
  return g->Record(std::move(out), AnyRequiresGrad({&a, &b}),
                   [g, ai, bi](const Array &dy) {
                     g->AccumulateGrad(ai, dy);
                     g->AccumulateGrad(bi, dy);
                   });
}

Var AddChannelBias(const Var &x, const Var &bias) {
  CheckSameGraph(x, bias);
  const Array &in = x.value();
  if (in.rank() < 2 || bias.value().size() != in.dim(1))
    LE_ERR << "Channel bias of size " << bias.value().size()
           << " for input " << ShapeString(in.shape());
  const std::size_t n = in.dim(0), c = in.dim(1), inner = in.size() / (n * c);
  Array out = in;
  for (std::size_t s = 0; s < n; s++)
    for (std::size_t ch = 0; ch < c; ch++)
      for (std::size_t i = 0; i < inner; i++)
        out[(s * c + ch) * inner + i] += bias.value()[ch];
  Graph *g = x.graph();
  const int xi = x.id(), bi = bias.id();
  return g->Record(std::move(out), AnyRequiresGrad({&x, &bias}),
                   [g, xi, bi, n, c, inner](const Array &dy) {
                     g->AccumulateGrad(xi, dy);
                     Array db({c});
                     for (std::size_t s = 0; s < n; s++)
                       for (std::size_t ch = 0; ch < c; ch++)
                         for (std::size_t i = 0; i < inner; i++)
                           db[ch] += dy[(s * c + ch) * inner + i];
                     g->AccumulateGrad(bi, db);
                   });
}

Var Linear(const Var &x, const Var &weight, const Var &bias) {
  CheckSameGraph(x, weight);
  CheckSameGraph(x, bias);
  Graph *g = x.graph();
  const int xi = x.id(), wi = weight.id(), bi = bias.id();
  return g->Record(
      Linear(x.value(), weight.value(), bias.value()),
      AnyRequiresGrad({&x, &weight, &bias}), [g, xi, wi, bi](const Array &dy) {
        Array dx, dw, db;
        const bool want_x = g->requires_grad(xi);
        LinearBackward(g->value(xi), g->value(wi), dy, want_x ? &dx : nullptr,
                       &dw, &db);
        if (want_x) g->AccumulateGrad(xi, dx);
        g->AccumulateGrad(wi, dw);
        g->AccumulateGrad(bi, db);
      });
}

LstmState LstmStep(const Var &x, const LstmState &prev, const Var &input_weight,
                   const Var &hidden_weight, const Var &bias) {
  CheckSameGraph(x, prev.h);
  CheckSameGraph(x, prev.c);
  CheckSameGraph(x, input_weight);
  Graph *g = x.graph();
  const int xi = x.id(), hi = prev.h.id(), ci = prev.c.id(),
            wxi = input_weight.id(), whi = hidden_weight.id(), bi = bias.id();
  auto fwd = std::make_shared<LstmStepResult>(LstmStep(
      x.value(), prev.h.value(), prev.c.value(),
      LstmWeights{input_weight.value(), hidden_weight.value(), bias.value()}));
  const std::size_t b = fwd->h.dim(0), hid = fwd->h.dim(1);
  // h and c travel as one [B,2H] node and are split by SliceLast below.
  Array packed({b, 2 * hid});
  for (std::size_t s = 0; s < b; s++) {
    std::copy_n(fwd->h.data() + s * hid, hid, packed.data() + s * 2 * hid);
    std::copy_n(fwd->c.data() + s * hid, hid, packed.data() + s * 2 * hid + hid);
  }
  Var state = g->Record(
      std::move(packed),
      AnyRequiresGrad({&x, &prev.h, &prev.c, &input_weight, &hidden_weight, &bias}),
      [g, xi, hi, ci, wxi, whi, bi, fwd, b, hid](const Array &dy) {
        Array dh({b, hid}), dc({b, hid});
        for (std::size_t s = 0; s < b; s++) {
          std::copy_n(dy.data() + s * 2 * hid, hid, dh.data() + s * hid);
          std::copy_n(dy.data() + s * 2 * hid + hid, hid, dc.data() + s * hid);
        }
        LstmStepGrads gr = LstmStepBackward(
            g->value(xi), g->value(hi), g->value(ci),
            LstmWeights{g->value(wxi), g->value(whi), g->value(bi)}, *fwd, dh,
            dc);
        g->AccumulateGrad(xi, gr.x);
        g->AccumulateGrad(hi, gr.h_prev);
        g->AccumulateGrad(ci, gr.c_prev);
        g->AccumulateGrad(wxi, gr.input_weight);
        g->AccumulateGrad(whi, gr.hidden_weight);
        g->AccumulateGrad(bi, gr.bias);
      });
  return LstmState{SliceLast(state, 0, hid), SliceLast(state, hid, 2 * hid)};
}

Var DropoutSeq(const Var &x, double p, OpContext *ctx) {
  Graph *g = x.graph();
  const int xi = x.id();
  auto mask = std::make_shared<Array>();
  Array out = DropoutSeq(x.value(), p, ctx, mask.get());
  return g->Record(std::move(out), AnyRequiresGrad({&x}),
                   [g, xi, mask](const Array &dy) {
                     g->AccumulateGrad(xi, DropoutSeqBackward(dy, *mask));
                   });
}

Var TemporalPool(const Var &x, PoolMode mode) {
  Graph *g = x.graph();
  const int xi = x.id();
  return g->Record(TemporalPool(x.value(), mode), AnyRequiresGrad({&x}),
                   [g, xi, mode](const Array &dy) {
                     g->AccumulateGrad(
                         xi, TemporalPoolBackward(g->value(xi).shape(), mode, dy));
                   });
}

Var SoftmaxCrossEntropy(const Var &logits,
                        const std::vector<std::size_t> &labels) {
  const Array &z = logits.value();
  if (z.rank() != 2 || z.dim(0) != labels.size())
    LE_ERR << "cross-entropy expects logits [N,K] with N labels, got "
           << ShapeString(z.shape()) << " and " << labels.size() << " labels";
  const std::size_t n = z.dim(0), k = z.dim(1);
  auto grad = std::make_shared<Array>(z.shape());
  double total = 0.0;
  for (std::size_t s = 0; s < n; s++) {
    Array row({k}, std::vector<double>(z.data() + s * k, z.data() + (s + 1) * k));
    CrossEntropyResult r = SoftmaxCrossEntropy(row, labels[s]);
    total += r.loss;
    for (std::size_t i = 0; i < k; i++) (*grad)[s * k + i] = r.grad[i] / double(n);
  }
  Graph *g = logits.graph();
  const int zi = logits.id();
  return g->Record(Array({1}, total / double(n)), AnyRequiresGrad({&logits}),
                   [g, zi, grad](const Array &dy) {
                     Array d = *grad;
                     d.Scale(dy[0]);
                     g->AccumulateGrad(zi, d);
                   });
}

Var Reshape(const Var &x, Shape shape) {
  Graph *g = x.graph();
  const int xi = x.id();
  return g->Record(x.value().Reshaped(std::move(shape)), AnyRequiresGrad({&x}),
                   [g, xi](const Array &dy) { g->AccumulateGrad(xi, dy); });
}

Array PermuteArray(const Array &x, const std::vector<std::size_t> &axes) {
  const std::size_t rank = x.rank();
  if (axes.size() != rank) LE_ERR << "Permutation rank mismatch";
  std::vector<bool> seen(rank, false);
  for (std::size_t a : axes) {
    if (a >= rank || seen[a]) LE_ERR << "Invalid permutation";
    seen[a] = true;
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; i++) out_shape[i] = x.dim(axes[i]);
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank - 1; i > 0; i--)
    in_strides[i - 1] = in_strides[i] * x.dim(i);
  Array out(out_shape);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < out.size(); flat++) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; i++) src += idx[i] * in_strides[axes[i]];
    out[flat] = x[src];
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

Var Permute(const Var &x, const std::vector<std::size_t> &axes) {
  Graph *g = x.graph();
  const int xi = x.id();
  std::vector<std::size_t> inverse(axes.size());
  for (std::size_t i = 0; i < axes.size(); i++) inverse.at(axes[i]) = i;
  return g->Record(PermuteArray(x.value(), axes), AnyRequiresGrad({&x}),
                   [g, xi, inverse](const Array &dy) {
                     g->AccumulateGrad(xi, PermuteArray(dy, inverse));
                   });
}

Var ConcatLast(const Var &a, const Var &b) {
  CheckSameGraph(a, b);
  const Array &va = a.value(), &vb = b.value();
  Shape sa = va.shape(), sb = vb.shape();
  if (sa.size() != sb.size() ||
      !std::equal(sa.begin(), sa.end() - 1, sb.begin()))
    LE_ERR << "Cannot concatenate " << ShapeString(sa) << " and "
           << ShapeString(sb);
  const std::size_t fa = sa.back(), fb = sb.back(), rows = va.size() / fa;
  Shape so = sa;
  so.back() = fa + fb;
  Array out(so);
  for (std::size_t r = 0; r < rows; r++) {
    std::copy_n(va.data() + r * fa, fa, out.data() + r * (fa + fb));
    std::copy_n(vb.data() + r * fb, fb, out.data() + r * (fa + fb) + fa);
  }
  Graph *g = a.graph();
  const int ai = a.id(), bi = b.id();
  return g->Record(std::move(out), AnyRequiresGrad({&a, &b}),
                   [g, ai, bi, sa, sb, fa, fb, rows](const Array &dy) {
                     Array da(sa), db(sb);
                     for (std::size_t r = 0; r < rows; r++) {
                       std::copy_n(dy.data() + r * (fa + fb), fa,
                                   da.data() + r * fa);
                       std::copy_n(dy.data() + r * (fa + fb) + fa, fb,
                                   db.data() + r * fb);
                     }
                     g->AccumulateGrad(ai, da);
                     g->AccumulateGrad(bi, db);
                   });
}

Var SliceLast(const Var &x, std::size_t begin, std::size_t end) {
  const Array &in = x.value();
  const std::size_t f = in.shape().back();
  if (begin >= end || end > f)
    LE_ERR << "Slice [" << begin << "," << end << ") of last axis " << f;
  const std::size_t rows = in.size() / f, w = end - begin;
  Shape so = in.shape();
  so.back() = w;
  Array out(so);
  for (std::size_t r = 0; r < rows; r++)
    std::copy_n(in.data() + r * f + begin, w, out.data() + r * w);
  Graph *g = x.graph();
  const int xi = x.id();
  Shape si = in.shape();
  return g->Record(std::move(out), AnyRequiresGrad({&x}),
                   [g, xi, si, rows, f, w, begin](const Array &dy) {
                     Array dx(si);
                     for (std::size_t r = 0; r < rows; r++)
                       std::copy_n(dy.data() + r * w, w,
                                   dx.data() + r * f + begin);
                     g->AccumulateGrad(xi, dx);
                   });
}

Var SelectStep(const Var &seq, std::size_t t) {
  const Array &in = seq.value();
  if (in.rank() != 3 || t >= in.dim(1))
    LE_ERR << "Cannot select step " << t << " of " << ShapeString(in.shape());
  const std::size_t b = in.dim(0), steps = in.dim(1), f = in.dim(2);
  Array out({b, f});
  for (std::size_t s = 0; s < b; s++)
    std::copy_n(in.data() + (s * steps + t) * f, f, out.data() + s * f);
  Graph *g = seq.graph();
  const int xi = seq.id();
  Shape si = in.shape();
  return g->Record(std::move(out), AnyRequiresGrad({&seq}),
                   [g, xi, si, b, steps, f, t](const Array &dy) {
                     Array dx(si);
                     for (std::size_t s = 0; s < b; s++)
                       std::copy_n(dy.data() + s * f, f,
                                   dx.data() + (s * steps + t) * f);
                     g->AccumulateGrad(xi, dx);
                   });
}

Var StackSteps(const std::vector<Var> &steps) {
  if (steps.empty()) LE_ERR << "Cannot stack an empty sequence";
  Graph *g = steps[0].graph();
  const Shape s0 = steps[0].shape();
  if (s0.size() != 2) LE_ERR << "StackSteps expects [B,F] steps";
  const std::size_t b = s0[0], f = s0[1], t = steps.size();
  Array out({b, t, f});
  std::vector<int> ids;
  bool rg = false;
  for (std::size_t k = 0; k < t; k++) {
    CheckSameGraph(steps[0], steps[k]);
    if (steps[k].shape() != s0) LE_ERR << "StackSteps shape mismatch";
    for (std::size_t s = 0; s < b; s++)
      std::copy_n(steps[k].value().data() + s * f, f,
                  out.data() + (s * t + k) * f);
    ids.push_back(steps[k].id());
    rg = rg || g->requires_grad(steps[k].id());
  }
  return g->Record(std::move(out), rg, [g, ids, b, t, f](const Array &dy) {
    for (std::size_t k = 0; k < t; k++) {
      Array d({b, f});
      for (std::size_t s = 0; s < b; s++)
        std::copy_n(dy.data() + (s * t + k) * f, f, d.data() + s * f);
      g->AccumulateGrad(ids[k], d);
    }
  });
}

Var Scale(const Var &x, double alpha) {
  Graph *g = x.graph();
  const int xi = x.id();
  Array out = x.value();
  out.Scale(alpha);
  return g->Record(std::move(out), AnyRequiresGrad({&x}),
                   [g, xi, alpha](const Array &dy) {
                     Array d = dy;
                     d.Scale(alpha);
                     g->AccumulateGrad(xi, d);
                   });
}

}  // namespace lipembed
