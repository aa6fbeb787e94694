// lipnet/train-test.cc

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

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>

#include "doctest.h"
#include "lipnet/train.h"
#include "synthgen/dataset.h"
#include "synthgen/videos.h"

namespace lipembed {
namespace {

TEST_CASE("plateau schedule examples") {
  LrScheduleOptions o;
  LrScheduleState s = InitialSchedule(o);
  CHECK(s.learning_rate == 3e-3);
  s = LrScheduleStep(s, 0.5, o);  // first epoch always improves
  for (int i = 0; i < 2; i++) {
    s = LrScheduleStep(s, 0.5, o);
    CHECK(s.learning_rate == 3e-3);
  }
  s = LrScheduleStep(s, 0.6, o);  // third stagnant epoch
  CHECK(s.learning_rate == doctest::Approx(1.5e-3).epsilon(1e-15));
  CHECK(s.stagnant_epochs == 0);

  SUBCASE("floor") {
    LrScheduleState f;
    f.learning_rate = 1.5e-5;
    f.best_metric = 0.1;
    for (int i = 0; i < 3; i++) f = LrScheduleStep(f, 0.1, o);
    CHECK(f.learning_rate == 1e-5);
    for (int i = 0; i < 3; i++) f = LrScheduleStep(f, 0.1, o);
    CHECK(f.learning_rate == 1e-5);
  }
  SUBCASE("improvement resets the counter") {
    LrScheduleState f = InitialSchedule(o);
    f = LrScheduleStep(f, 0.5, o);
    f = LrScheduleStep(f, 0.5, o);
    f = LrScheduleStep(f, 0.5, o);
    CHECK(f.stagnant_epochs == 2);
    f = LrScheduleStep(f, 0.4, o);
    CHECK(f.stagnant_epochs == 0);
    CHECK(f.learning_rate == 3e-3);
    f = LrScheduleStep(f, 0.4, o);
    f = LrScheduleStep(f, 0.4, o);
    CHECK(f.learning_rate == 3e-3);
  }
  SUBCASE("invalid options") {
    LrScheduleOptions bad;
    bad.floor = 1.0;
    CHECK_THROWS_AS(InitialSchedule(bad), Error);
  }
}

struct Data {
  std::vector<VideoClip> train, val, test;
};

Data Split3(const std::vector<VideoClip> &clips, const std::vector<double> &f,
            uint64 seed) {
  std::vector<std::size_t> labels;
  for (const VideoClip &c : clips) labels.push_back(c.label);
  const auto parts = StratifiedSplit(labels, f, seed);
  Data d;
  std::vector<VideoClip> *out[3] = {&d.train, &d.val, &d.test};
  for (std::size_t s = 0; s < parts.size(); s++)
    for (std::size_t i : parts[s]) out[s]->push_back(clips[i]);
  return d;
}

Data ToyData(uint64 seed, bool separable) {
  VideoSpec spec;
  spec.seed = seed;
  if (separable) spec.min_boundary = spec.max_boundary = spec.frames;
  return Split3(GenerateVideos(spec), {0.8, 0.2}, seed);
}

double Median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

TEST_CASE("first-batch loss is near log of the class count and reproducible") {
  const Data d = ToyData(17, false);
  TrainOptions o;
  o.epochs = 1;
  std::vector<double> first;
  for (int run = 0; run < 2; run++) {
    Network net(ToyConfig(), 17);
    const TrainResult r = Train(&net, Backend::kLstm, d.train, d.val, o);
    first.push_back(r.first_batch_loss);
    REQUIRE(r.epochs.size() == 1);
    CHECK(r.epochs[0].learning_rate == 3e-3);
    CHECK(std::isfinite(r.epochs[0].train_loss));
    CHECK_FALSE(r.diverged);
  }
  CHECK(std::abs(first[0] - std::log(10.0)) < 0.1 * std::log(10.0));
  CHECK(first[0] == first[1]);
}

TEST_CASE("training preconditions") {
  const Data d = ToyData(3, false);
  Network net(ToyConfig(), 1);
  TrainOptions o;
  o.epochs = 1;
  CHECK_THROWS_WITH_AS(Train(&net, Backend::kLstm, d.train, {}, o),
                       doctest::Contains("validation"), Error);
  std::vector<VideoClip> bad = d.val;
  bad[0].label = 10;
  CHECK_THROWS_WITH_AS(Train(&net, Backend::kLstm, d.train, bad, o),
                       doctest::Contains("label 10"), Error);
}

TEST_CASE("divergence restores the last good parameters") {
  const Data d = ToyData(5, false);
  Network net(ToyConfig(), 5);
  const ParamSet before = net.params();
  TrainOptions o;
  o.epochs = 3;
  o.adam.learning_rate = o.schedule.initial = 1e300;
  const TrainResult r = Train(&net, Backend::kLstm, d.train, d.val, o);
  CHECK(r.diverged);
  CHECK_FALSE(r.message.empty());
  for (const std::string &n : before.param_names())
    CHECK(net.params().Param(n).value == before.Param(n).value);
}

TEST_CASE("extraction needs populated batch-norm statistics") {
  const Data d = ToyData(2, false);
  Network net(ToyConfig(), 2);
  CHECK_THROWS_WITH_AS(ExtractEmbeddings(&net, d.val), doctest::Contains("never populated"),
                       Error);
}

TEST_CASE("separable toy set is learned within 40 epochs") {
  std::vector<double> errors;
  for (uint64 seed : {17, 18, 19}) {
    const Data d = ToyData(seed, true);
    Network net(ToyConfig(), seed);
    TrainOptions o;
    o.epochs = 40;
    o.seed = seed;
    o.monitor_train_error = true;
    o.target_train_error = 0.1;
    const TrainResult r = Train(&net, Backend::kLstm, d.train, d.val, o);
    REQUIRE_FALSE(r.diverged);
    CHECK(r.epochs.size() <= 40);
    errors.push_back(r.epochs.back().eval_train_error);
    MESSAGE("seed " << seed << ": training error " << errors.back() << " after "
                    << r.epochs.size() << " epochs");
  }
  CHECK(Median3(errors) < 0.1);
}

// Staged runs shared by the remaining cases.
struct StagedRun {
  Data data;
  std::unique_ptr<Network> net;
  ParamSet initial;
  ParamSet after_stage1;
  StagedResult result;
};

const std::vector<StagedRun> &StagedRuns() {
  static const std::vector<StagedRun> runs = [] {
    std::vector<StagedRun> out;
    for (uint64 seed : {17, 18, 19}) {
      StagedRun run;
      run.data = ToyData(seed, false);
      run.net = std::make_unique<Network>(ToyConfig(), seed);
      run.initial = run.net->params();
      StagedOptions o;
      o.seed = seed;
      o.stage1.epochs = 15;
      o.stage2.epochs = 25;
      // Stage 1 alone, then stage 2 on a copy of its result.
      run.net->AttachTemporalConvBackend(seed + 1);
      TrainOptions s1 = o.stage1;
      s1.seed = seed;
      run.result.stage1 = Train(run.net.get(), Backend::kTemporalConv,
                                run.data.train, run.data.val, s1);
      run.result.stage1_val_error =
          Evaluate(run.net.get(), Backend::kTemporalConv, run.data.val).error;
      run.after_stage1 = run.net->params();
      run.net->DetachTemporalConvBackend();
      run.result.stage2_initial_val_error =
          Evaluate(run.net.get(), Backend::kLstm, run.data.val).error;
      TrainOptions s2 = o.stage2;
      s2.seed = seed + 2;
      run.result.stage2 =
          Train(run.net.get(), Backend::kLstm, run.data.train, run.data.val, s2);
      run.result.final_val_error =
          Evaluate(run.net.get(), Backend::kLstm, run.data.val).error;
      out.push_back(std::move(run));
    }
    return out;
  }();
  return runs;
}

TEST_CASE("staged training matches the library driver") {
  const Data d = ToyData(23, false);
  StagedOptions o;
  o.seed = 23;
  o.stage1.epochs = 2;
  o.stage2.epochs = 2;
  Network a(ToyConfig(), 23);
  const StagedResult r = StagedTrain(&a, d.train, d.val, o);
  CHECK(r.stage1.epochs.size() == 2);
  CHECK(r.stage2.epochs.size() == 2);
  CHECK_FALSE(a.has_temporal_conv_backend());
  // Stage 2 starts its schedule afresh.
  CHECK(r.stage2.epochs[0].learning_rate == 3e-3);
  Network b(ToyConfig(), 23);
  const StagedResult r2 = StagedTrain(&b, d.train, d.val, o);
  CHECK(r.final_val_error == r2.final_val_error);
  for (const std::string &n : a.params().param_names())
    CHECK(a.params().Param(n).value == b.params().Param(n).value);
}

TEST_CASE("stage one moves the residual body") {
  for (const StagedRun &run : StagedRuns()) {
    double delta = 0.0, lstm_delta = 0.0;
    for (const std::string &n : run.initial.param_names()) {
      const double d = MaxAbsDiff(run.after_stage1.Param(n).value,
                                  run.initial.Param(n).value);
      if (n.rfind("body.", 0) == 0) delta += d;
      if (n.rfind("lstm.", 0) == 0) lstm_delta += d;
    }
    CHECK(delta > 0.0);
    // The recurrent backend is untouched until stage 2.
    CHECK(lstm_delta == 0.0);
  }
}

TEST_CASE("stage two starts no worse than chance and staging helps") {
  std::vector<double> initial, stage1, final_err;
  for (const StagedRun &run : StagedRuns()) {
    initial.push_back(run.result.stage2_initial_val_error);
    stage1.push_back(run.result.stage1_val_error);
    final_err.push_back(run.result.final_val_error);
    MESSAGE("stage-1 error " << stage1.back() << ", stage-2 start "
                             << initial.back() << ", final " << final_err.back());
  }
  CHECK(Median3(initial) <= 1.0 - 1.0 / 10 + 0.05);
  CHECK(1.0 - Median3(final_err) >= 1.0 - Median3(stage1));
}

TEST_CASE("extraction is deterministic and preserves identity") {
  const StagedRun &run = StagedRuns()[0];
  std::vector<VideoClip> clips = {run.data.val[0], run.data.val[0], run.data.val[1]};
  const std::vector<Embedding> e = ExtractEmbeddings(run.net.get(), clips);
  REQUIRE(e.size() == 3);
  for (const Embedding &x : e) CHECK(x.values.size() == 64);
  CHECK(e[0].values == e[1].values);
  CHECK(e[2].id == run.data.val[1].id);
  CHECK(e[2].label == run.data.val[1].label);
  // Batch composition does not matter in eval mode.
  const std::vector<Embedding> single = ExtractEmbeddings(run.net.get(), {clips[2]});
  for (std::size_t j = 0; j < 64; j++)
    CHECK(single[0].values[j] == doctest::Approx(e[2].values[j]).epsilon(1e-12));
}

double Cosine(const std::vector<double> &a, const std::vector<double> &b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); i++) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

TEST_CASE("trained embeddings cluster by class") {
  for (const StagedRun &run : StagedRuns()) {
    const std::vector<Embedding> e = ExtractEmbeddings(run.net.get(), run.data.val);
    double within = 0.0, across = 0.0;
    std::size_t nw = 0, na = 0;
    for (std::size_t i = 0; i < e.size(); i++)
      for (std::size_t j = i + 1; j < e.size(); j++) {
        const double c = Cosine(e[i].values, e[j].values);
        if (e[i].label == e[j].label) {
          within += c;
          nw++;
        } else {
          across += c;
          na++;
        }
      }
    MESSAGE("within " << within / nw << " across " << across / na);
    CHECK(within / nw > across / na);
  }
}

TEST_CASE("trained network responds to the boundary vector") {
  const StagedRun &run = StagedRuns()[1];
  std::vector<const VideoClip *> p = {&run.data.val[0], &run.data.val[1]};
  Batch batch = MakeBatch(p, run.net->config());
  OpContext ctx;
  Graph g1, g2;
  const Array a = run.net->Forward(&g1, batch, Backend::kLstm, &ctx).embeddings.value();
  for (double &v : batch.boundary.values()) v = 1.0 - v;
  const Array b = run.net->Forward(&g2, batch, Backend::kLstm, &ctx).embeddings.value();
  CHECK(MaxAbsDiff(a, b) > 0.0);
}

}  // namespace
}  // namespace lipembed
