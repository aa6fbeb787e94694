// diffgraph/kernels-test.cc

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
#include <random>

#include "doctest.h"
#include "diffgraph/grad-check.h"
#include "diffgraph/kernels.h"
#include "test-util.h"

namespace lipembed {
namespace {

using testing::Project;
using testing::RandomArray;

// Direct nested-loop cross-correlation over an unbatched [C,T,H,W] input.
Array NaiveConv3d(const Array &x, const Array &k, const Conv3dOptions &o) {
  const long c = x.dim(0), t = x.dim(1), h = x.dim(2), w = x.dim(3);
  const long oc = k.dim(0), kt = k.dim(2), kh = k.dim(3), kw = k.dim(4);
  const long ot = (t + 2 * long(o.padding[0]) - kt) / long(o.stride[0]) + 1;
  const long oh = (h + 2 * long(o.padding[1]) - kh) / long(o.stride[1]) + 1;
  const long ow = (w + 2 * long(o.padding[2]) - kw) / long(o.stride[2]) + 1;
  Array y({std::size_t(oc), std::size_t(ot), std::size_t(oh), std::size_t(ow)});
  for (long f = 0; f < oc; f++)
    for (long a = 0; a < ot; a++)
      for (long b = 0; b < oh; b++)
        for (long d = 0; d < ow; d++) {
          double s = 0.0;
          for (long ch = 0; ch < c; ch++)
            for (long i = 0; i < kt; i++)
              for (long j = 0; j < kh; j++)
                for (long l = 0; l < kw; l++) {
                  const long ti = a * o.stride[0] + i - o.padding[0];
                  const long hi = b * o.stride[1] + j - o.padding[1];
                  const long wi = d * o.stride[2] + l - o.padding[2];
                  if (ti < 0 || ti >= t || hi < 0 || hi >= h || wi < 0 || wi >= w)
                    continue;
                  s += x.at({std::size_t(ch), std::size_t(ti), std::size_t(hi),
                             std::size_t(wi)}) *
                       k.at({std::size_t(f), std::size_t(ch), std::size_t(i),
                             std::size_t(j), std::size_t(l)});
                }
          y.at({std::size_t(f), std::size_t(a), std::size_t(b), std::size_t(d)}) = s;
        }
  return y;
}

Array NaiveConv2d(const Array &x, const Array &k, const Conv2dOptions &o) {
  const long c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const long oc = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const long oh = (h + 2 * long(o.padding[0]) - kh) / long(o.stride[0]) + 1;
  const long ow = (w + 2 * long(o.padding[1]) - kw) / long(o.stride[1]) + 1;
  Array y({std::size_t(oc), std::size_t(oh), std::size_t(ow)});
  for (long f = 0; f < oc; f++)
    for (long b = 0; b < oh; b++)
      for (long d = 0; d < ow; d++) {
        double s = 0.0;
        for (long ch = 0; ch < c; ch++)
          for (long j = 0; j < kh; j++)
            for (long l = 0; l < kw; l++) {
              const long hi = b * o.stride[0] + j - o.padding[0];
              const long wi = d * o.stride[1] + l - o.padding[1];
              if (hi < 0 || hi >= h || wi < 0 || wi >= w) continue;
              s += x.at({std::size_t(ch), std::size_t(hi), std::size_t(wi)}) *
                   k.at({std::size_t(f), std::size_t(ch), std::size_t(j),
                         std::size_t(l)});
            }
        y.at({std::size_t(f), std::size_t(b), std::size_t(d)}) = s;
      }
  return y;
}

double Sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

TEST_CASE("conv3d identity and zero kernels") {
  std::mt19937_64 rng(1);
  Array x = RandomArray({1, 4, 5, 5}, &rng);
  Array one({1, 1, 1, 1, 1}, 1.0);
  CHECK(Conv3d(x, one, {}) == x);
  Array zero({3, 1, 3, 3, 3}, 0.0);
  Array y = Conv3d(x, zero, {});
  CHECK(y.shape() == Shape{3, 2, 3, 3});
  CHECK(y.MaxAbs() == 0.0);
}

TEST_CASE("conv3d matches nested-loop oracle") {
  std::mt19937_64 rng(2);
  Array x = RandomArray({1, 4, 5, 5}, &rng);
  Array k = RandomArray({2, 1, 3, 3, 3}, &rng);
  CHECK(MaxAbsDiff(Conv3d(x, k, {}), NaiveConv3d(x, k, {})) < 1e-10);

  // Strided, padded, multi-channel.
  Array x2 = RandomArray({3, 6, 7, 8}, &rng);
  Array k2 = RandomArray({4, 3, 3, 3, 2}, &rng);
  Conv3dOptions o;
  o.stride = {2, 1, 2};
  o.padding = {1, 2, 1};
  CHECK(MaxAbsDiff(Conv3d(x2, k2, o), NaiveConv3d(x2, k2, o)) < 1e-10);

  // Batched input gives per-sample results.
  Array xb({2, 3, 6, 7, 8});
  for (std::size_t i = 0; i < x2.size(); i++) {
    xb[i] = x2[i];
    xb[x2.size() + i] = -x2[i];
  }
  Array yb = Conv3d(xb, k2, o);
  Array y1 = NaiveConv3d(x2, k2, o);
  double diff = 0.0;
  for (std::size_t i = 0; i < y1.size(); i++) {
    diff = std::max(diff, std::abs(yb[i] - y1[i]));
    diff = std::max(diff, std::abs(yb[y1.size() + i] + y1[i]));
  }
  CHECK(diff < 1e-10);
}

TEST_CASE("conv3d front-end geometry preserves time") {
  Conv3dOptions o;
  o.stride = {1, 2, 2};
  o.padding = {2, 3, 3};
  for (std::size_t t : {1, 3, 9, 29}) {
    Shape s = Conv3dOutputShape({2, 1, t, 24, 24}, {8, 1, 5, 7, 7}, o);
    CHECK(s[2] == t);
    CHECK(s[3] == 12);
  }
}

TEST_CASE("conv3d rejects channel mismatch with a descriptive message") {
  Array x({2, 4, 5, 5});
  Array k({1, 3, 1, 1, 1});
  try {
    Conv3d(x, k, {});
    FAIL("expected an error");
  } catch (const Error &e) {
    const std::string msg = e.what();
    CHECK(msg.find("channel mismatch") != std::string::npos);
    CHECK(msg.find("[1,3,1,1,1]") != std::string::npos);
  }
}

TEST_CASE("conv3d gradients match finite differences") {
  std::mt19937_64 rng(3);
  Array x = RandomArray({2, 2, 4, 5, 5}, &rng);
  Array k = RandomArray({3, 2, 3, 3, 3}, &rng);
  Conv3dOptions o;
  o.stride = {1, 2, 2};
  o.padding = {1, 1, 1};
  Array w = RandomArray(Conv3dOutputShape(x.shape(), k.shape(), o), &rng);
  Array dx, dk;
  Conv3dBackward(x, k, o, w, &dx, &dk);
  GradCheckReport r = GradCheck([&] { return Project(Conv3d(x, k, o), w); },
                                {{"input", &x, &dx}, {"kernel", &k, &dk}});
  INFO(r.ToString());
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("conv2d identity, zero, oracle and gradient") {
  std::mt19937_64 rng(4);
  Array x = RandomArray({3, 6, 7}, &rng);
  Array eye({3, 3, 1, 1});
  for (std::size_t c = 0; c < 3; c++) eye.at({c, c, 0, 0}) = 1.0;
  CHECK(Conv2d(x, eye, {}) == x);
  CHECK(Conv2d(x, Array({2, 3, 3, 3}), {}).MaxAbs() == 0.0);

  Array k = RandomArray({2, 3, 3, 3}, &rng);
  Conv2dOptions o;
  o.stride = {2, 1};
  o.padding = {1, 1};
  CHECK(MaxAbsDiff(Conv2d(x, k, o), NaiveConv2d(x, k, o)) < 1e-10);

  Array xb = RandomArray({2, 3, 6, 7}, &rng);
  Array w = RandomArray(Conv2d(xb, k, o).shape(), &rng);
  Array dx, dk;
  Conv2dBackward(xb, k, o, w, &dx, &dk);
  GradCheckReport r = GradCheck([&] { return Project(Conv2d(xb, k, o), w); },
                                {{"input", &xb, &dx}, {"kernel", &k, &dk}});
  INFO(r.ToString());
  CHECK(r.passed);
  CHECK_THROWS_AS(Conv2d(x, Array({1, 2, 1, 1}), {}), Error);
}

TEST_CASE("max pool picks window maxima and routes gradient") {
  std::mt19937_64 rng(5);
  Array x = RandomArray({1, 2, 3, 6, 6}, &rng);
  Pool3dOptions o;
  std::vector<std::size_t> arg;
  Array y = MaxPool3d(x, o, &arg);
  CHECK(y.shape() == Shape{1, 2, 3, 3, 3});
  // Brute-force check of one output: window rows/cols {1,2,3} for index 1.
  double best = -1e9;
  for (std::size_t h = 1; h <= 3; h++)
    for (std::size_t w = 1; w <= 3; w++) best = std::max(best, x.at({0, 1, 2, h, w}));
  CHECK(y.at({0, 1, 2, 1, 1}) == best);
  Array g = RandomArray(y.shape(), &rng);
  Array dx = MaxPool3dBackward(x.shape(), arg, g);
  GradCheckReport r =
      GradCheck([&] {
        std::vector<std::size_t> a;
        return Project(MaxPool3d(x, o, &a), g);
      }, {{"input", &x, &dx}});
  INFO(r.ToString());
  CHECK(r.passed);
}

struct BnFixture {
  Array mean, var, count;
  BnFixture(std::size_t c) : mean({c}, 0.0), var({c}, 1.0), count({1}, 0.0) {}
  BatchNormBuffers buffers() { return {&mean, &var, &count}; }
};

TEST_CASE("batch norm eval mode with unit statistics is the identity") {
  std::mt19937_64 rng(6);
  Array x = RandomArray({4, 3, 2, 2}, &rng);
  BnFixture bn(3);
  BatchNormCache cache;
  Array y = BatchNorm(x, Array({3}, 1.0), Array({3}, 0.0), bn.buffers(), {},
                      OpContext(Mode::kEval), &cache);
  CHECK(MaxAbsDiff(x, y) < 1e-5);  // only epsilon = 1e-5 in the variance
  CHECK(bn.count[0] == 0.0);
}

TEST_CASE("batch norm train mode normalizes per feature") {
  std::mt19937_64 rng(7);
  Array x = RandomArray({16, 5}, &rng, -3.0, 7.0);
  BnFixture bn(5);
  BatchNormCache cache;
  Array y = BatchNorm(x, Array({5}, 1.0), Array({5}, 0.0), bn.buffers(), {},
                      OpContext(Mode::kTrain), &cache);
  for (std::size_t f = 0; f < 5; f++) {
    double m = 0.0, v = 0.0;
    for (std::size_t b = 0; b < 16; b++) m += y.at({b, f});
    m /= 16;
    for (std::size_t b = 0; b < 16; b++) v += (y.at({b, f}) - m) * (y.at({b, f}) - m);
    v /= 16;
    CHECK(std::abs(m) < 1e-6);
    CHECK(std::abs(v - 1.0) < 1e-4);
  }
  CHECK(bn.count[0] == 1.0);
  CHECK(bn.mean.MaxAbs() > 0.0);  // running statistics moved
}

TEST_CASE("batch norm rejects a train-mode batch of one") {
  BnFixture bn(2);
  BatchNormCache cache;
  CHECK_THROWS_AS(BatchNorm(Array({1, 2}, 1.0), Array({2}, 1.0), Array({2}),
                            bn.buffers(), {}, OpContext(Mode::kTrain), &cache),
                  Error);
}

TEST_CASE("batch norm gradients match finite differences") {
  std::mt19937_64 rng(8);
  Array x = RandomArray({3, 2, 2, 3}, &rng);
  Array gamma = RandomArray({2}, &rng, 0.5, 1.5);
  Array beta = RandomArray({2}, &rng);
  Array w = RandomArray(x.shape(), &rng);
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    BnFixture bn(2);
    bn.var = Array({2}, 0.7);
    OpContext ctx(mode);
    auto f = [&] {
      BnFixture scratch = bn;
      BatchNormCache c;
      return Project(BatchNorm(x, gamma, beta, scratch.buffers(), {}, ctx, &c), w);
    };
    BnFixture scratch = bn;
    BatchNormCache cache;
    BatchNorm(x, gamma, beta, scratch.buffers(), {}, ctx, &cache);
    Array dx, dg, db;
    BatchNormBackward(cache, gamma, w, &dx, &dg, &db);
    GradCheckReport r = GradCheck(
        f, {{"input", &x, &dx}, {"gamma", &gamma, &dg}, {"beta", &beta, &db}});
    INFO(r.ToString());
    CHECK(r.passed);
  }
}

TEST_CASE("linear layer gradients") {
  std::mt19937_64 rng(9);
  Array x = RandomArray({4, 3}, &rng), wt = RandomArray({5, 3}, &rng),
        b = RandomArray({5}, &rng), p = RandomArray({4, 5}, &rng);
  Array dx, dw, db;
  LinearBackward(x, wt, p, &dx, &dw, &db);
  GradCheckReport r = GradCheck([&] { return Project(Linear(x, wt, b), p); },
                                {{"x", &x, &dx}, {"W", &wt, &dw}, {"b", &b, &db}});
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-8);  // bilinear: differences are exact up to roundoff
}

TEST_CASE("lstm step with zero weights yields zero state") {
  std::mt19937_64 rng(10);
  Array x = RandomArray({3, 4}, &rng);
  Array wx({8, 4}), wh({8, 2}), b({8});
  LstmStepResult r = LstmStep(x, Array({3, 2}), Array({3, 2}), {wx, wh, b});
  CHECK(r.h.MaxAbs() == 0.0);
  CHECK(r.c.MaxAbs() == 0.0);
}

TEST_CASE("lstm step matches the cell equations") {
  std::mt19937_64 rng(11);
  const std::size_t bsz = 2, in = 3, hid = 4;
  Array x = RandomArray({bsz, in}, &rng), h = RandomArray({bsz, hid}, &rng),
        c = RandomArray({bsz, hid}, &rng);
  Array wx = RandomArray({4 * hid, in}, &rng), wh = RandomArray({4 * hid, hid}, &rng),
        b = RandomArray({4 * hid}, &rng);
  LstmStepResult r = LstmStep(x, h, c, {wx, wh, b});
  double diff = 0.0;
  for (std::size_t s = 0; s < bsz; s++)
    for (std::size_t j = 0; j < hid; j++) {
      double pre[4];
      for (std::size_t gate = 0; gate < 4; gate++) {
        const std::size_t row = gate * hid + j;
        double a = b[row];
        for (std::size_t k = 0; k < in; k++) a += wx.at({row, k}) * x.at({s, k});
        for (std::size_t k = 0; k < hid; k++) a += wh.at({row, k}) * h.at({s, k});
        pre[gate] = a;
      }
      const double ig = Sigmoid(pre[0]), fg = Sigmoid(pre[1]),
                   gg = std::tanh(pre[2]), og = Sigmoid(pre[3]);
      const double cn = fg * c.at({s, j}) + ig * gg;
      const double hn = og * std::tanh(cn);
      diff = std::max(diff, std::abs(cn - r.c.at({s, j})));
      diff = std::max(diff, std::abs(hn - r.h.at({s, j})));
    }
  CHECK(diff < 1e-12);
}

TEST_CASE("three-step unrolled lstm gradient") {
  std::mt19937_64 rng(12);
  const std::size_t bsz = 2, in = 3, hid = 2, steps = 3;
  std::vector<Array> xs;
  for (std::size_t t = 0; t < steps; t++) xs.push_back(RandomArray({bsz, in}, &rng));
  Array wx = RandomArray({4 * hid, in}, &rng), wh = RandomArray({4 * hid, hid}, &rng),
        b = RandomArray({4 * hid}, &rng), p = RandomArray({bsz, hid}, &rng),
        q = RandomArray({bsz, hid}, &rng);
  auto run = [&](std::vector<LstmStepResult> *trace) {
    Array h({bsz, hid}), c({bsz, hid});
    for (std::size_t t = 0; t < steps; t++) {
      LstmStepResult r = LstmStep(xs[t], h, c, {wx, wh, b});
      if (trace) trace->push_back(r);
      h = r.h;
      c = r.c;
    }
    return Project(h, p) + Project(c, q);
  };
  std::vector<LstmStepResult> trace;
  run(&trace);
  Array dh = p, dc = q;
  Array dwx(wx.shape()), dwh(wh.shape()), db(b.shape());
  std::vector<Array> dxs(steps);
  for (std::size_t t = steps; t-- > 0;) {
    Array hp = t ? trace[t - 1].h : Array({bsz, hid});
    Array cp = t ? trace[t - 1].c : Array({bsz, hid});
    LstmStepGrads g = LstmStepBackward(xs[t], hp, cp, {wx, wh, b}, trace[t], dh, dc);
    dwx.AddScaled(g.input_weight);
    dwh.AddScaled(g.hidden_weight);
    db.AddScaled(g.bias);
    dxs[t] = g.x;
    dh = g.h_prev;
    dc = g.c_prev;
  }
  std::vector<GradGroup> groups = {{"Wx", &wx, &dwx}, {"Wh", &wh, &dwh}, {"b", &b, &db}};
  for (std::size_t t = 0; t < steps; t++)
    groups.push_back({"x" + std::to_string(t), &xs[t], &dxs[t]});
  GradCheckReport r = GradCheck([&] { return run(nullptr); }, groups);
  INFO(r.ToString());
  CHECK(r.passed);
}

TEST_CASE("sequence dropout") {
  std::mt19937_64 rng(13);
  Array x = RandomArray({4, 7, 6}, &rng);
  Array mask;
  SUBCASE("p = 0 is the identity in both modes") {
    OpContext train(Mode::kTrain, 1), eval(Mode::kEval, 1);
    CHECK(DropoutSeq(x, 0.0, &train, &mask) == x);
    CHECK(DropoutSeq(x, 0.0, &eval, &mask) == x);
  }
  SUBCASE("eval mode is the identity for any p") {
    OpContext eval(Mode::kEval, 1);
    for (double p : {0.2, 0.4, 0.9}) CHECK(DropoutSeq(x, p, &eval, &mask) == x);
  }
  SUBCASE("mask is fixed across time steps") {
    for (uint64 seed = 0; seed < 20; seed++) {
      OpContext ctx(Mode::kTrain, seed);
      Array y = DropoutSeq(x, 0.4, &ctx, &mask);
      for (std::size_t b = 0; b < 4; b++)
        for (std::size_t f = 0; f < 6; f++) {
          const double m0 = y.at({b, 0, f}) / x.at({b, 0, f});
          CHECK(std::abs(m0 - mask.at({b, f})) < 1e-12);
          for (std::size_t t = 1; t < 7; t++)
            CHECK(std::abs(y.at({b, t, f}) / x.at({b, t, f}) - m0) < 1e-12);
        }
    }
  }
  SUBCASE("invalid p is rejected") {
    OpContext ctx(Mode::kTrain, 1);
    CHECK_THROWS_AS(DropoutSeq(x, 1.0, &ctx, &mask), Error);
    CHECK_THROWS_AS(DropoutSeq(x, -0.1, &ctx, &mask), Error);
  }
  SUBCASE("unbatched [T,F] input") {
    OpContext ctx(Mode::kTrain, 3);
    Array xs = RandomArray({5, 8}, &rng);
    Array y = DropoutSeq(xs, 0.5, &ctx, &mask);
    CHECK(mask.shape() == Shape{8});
    for (std::size_t t = 0; t < 5; t++)
      for (std::size_t f = 0; f < 8; f++)
        CHECK(y.at({t, f}) == doctest::Approx(xs.at({t, f}) * mask[f]));
  }
}

TEST_CASE("sequence dropout is unbiased") {
  // Mean of 10,000 masked copies of a constant approaches the constant within
  // three standard errors.
  const double p = 0.4, value = 2.5;
  OpContext ctx(Mode::kTrain, 99);
  Array x({10000, 1, 1}, value), mask;
  Array y = DropoutSeq(x, p, &ctx, &mask);
  double mean = 0.0;
  for (double v : y.values()) mean += v;
  mean /= 10000;
  const double sd = value * std::sqrt(p / (1.0 - p));
  CHECK(std::abs(mean - value) < 3.0 * sd / std::sqrt(10000.0));
}

TEST_CASE("temporal pooling") {
  std::mt19937_64 rng(14);
  Array row = RandomArray({5}, &rng);
  Array same({4, 5});
  for (std::size_t t = 0; t < 4; t++)
    for (std::size_t f = 0; f < 5; f++) same.at({t, f}) = row[f];
  CHECK(MaxAbsDiff(TemporalPool(same, PoolMode::kAverage), row) < 1e-15);
  CHECK(TemporalPool(same, PoolMode::kLast) == row);

  Array x = RandomArray({3, 5}, &rng);
  Array last = TemporalPool(x, PoolMode::kLast);
  for (std::size_t f = 0; f < 5; f++) CHECK(last[f] == x.at({2, f}));

  Array xb = RandomArray({2, 6, 4}, &rng);
  Array avg = TemporalPool(xb, PoolMode::kAverage);
  double diff = 0.0;
  for (std::size_t b = 0; b < 2; b++)
    for (std::size_t f = 0; f < 4; f++) {
      double s = 0.0;
      for (std::size_t t = 0; t < 6; t++) s += xb.at({b, t, f});
      diff = std::max(diff, std::abs(s / 6.0 - avg.at({b, f})));
    }
  CHECK(diff < 1e-12);

  for (PoolMode mode : {PoolMode::kAverage, PoolMode::kLast}) {
    Array w = RandomArray({2, 4}, &rng);
    Array dx = TemporalPoolBackward(xb.shape(), mode, w);
    CHECK(GradCheck([&] { return Project(TemporalPool(xb, mode), w); },
                    {{"x", &xb, &dx}})
              .passed);
  }
}

TEST_CASE("softmax cross-entropy") {
  const std::size_t k = 7;
  CrossEntropyResult u = SoftmaxCrossEntropy(Array({k}, 0.3), 2);
  CHECK(u.loss == doctest::Approx(std::log(double(k))).epsilon(1e-14));

  Array z({k}, 0.0);
  z[4] = 50.0;
  CHECK(SoftmaxCrossEntropy(z, 4).loss < 1e-6);

  std::mt19937_64 rng(15);
  Array logits = RandomArray({k}, &rng, -3.0, 3.0);
  CrossEntropyResult r = SoftmaxCrossEntropy(logits, 3);
  GradCheckOptions o;
  o.tolerance = 1e-6;
  GradCheckReport rep = GradCheck(
      [&] { return SoftmaxCrossEntropy(logits, 3).loss; },
      {{"logits", &logits, &r.grad}}, o);
  INFO(rep.ToString());
  CHECK(rep.passed);

  CHECK_THROWS_AS(SoftmaxCrossEntropy(logits, k), Error);
  CHECK_THROWS_AS(SoftmaxCrossEntropy(Array({1}), 0), Error);
}

TEST_CASE("kernels are deterministic") {
  std::mt19937_64 rng(16);
  Array x = RandomArray({2, 1, 5, 8, 8}, &rng);
  Array k = RandomArray({3, 1, 3, 3, 3}, &rng);
  CHECK(Conv3d(x, k, {}) == Conv3d(x, k, {}));
  Array seq = RandomArray({3, 4, 5}, &rng), m1, m2;
  OpContext a(Mode::kTrain, 5), b(Mode::kTrain, 5);
  CHECK(DropoutSeq(seq, 0.4, &a, &m1) == DropoutSeq(seq, 0.4, &b, &m2));
}

}  // namespace
}  // namespace lipembed
