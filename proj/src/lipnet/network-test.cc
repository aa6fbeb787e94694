// lipnet/network-test.cc

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
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "lipnet/checkpoint.h"
#include "lipnet/network-grad-check.h"
#include "lipnet/network.h"

namespace lipembed {
namespace {

std::vector<VideoClip> RandomClips(const NetworkConfig &c, std::size_t n,
                                   uint64 seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<VideoClip> clips(n);
  for (std::size_t i = 0; i < n; i++) {
    clips[i].id = "clip" + std::to_string(i);
    clips[i].frames = Array({c.frames, c.height, c.width});
    for (double &v : clips[i].frames.values()) v = u(rng);
    clips[i].label = i % c.num_classes;
    clips[i].boundary_begin = c.frames / 3;
    clips[i].boundary_end = c.frames - c.frames / 3;
  }
  return clips;
}

Batch BatchOf(const std::vector<VideoClip> &clips, const NetworkConfig &c) {
  std::vector<const VideoClip *> p;
  for (const VideoClip &v : clips) p.push_back(&v);
  return MakeBatch(p, c);
}

ForwardOutput Run(Network *net, Graph *g, const Batch &b, Mode mode,
                  const ForwardOptions &opts = {}) {
  OpContext ctx(mode, 5);
  return net->Forward(g, b, Backend::kLstm, &ctx, opts);
}

TEST_CASE("toy forward produces embeddings and logits of the contracted shapes") {
  const NetworkConfig c = ToyConfig();
  CHECK(c.frames == 9);
  CHECK(c.feature_size == 32);
  CHECK(c.embedding_size == 64);
  CHECK(c.num_classes == 10);
  Network net(c, 1);
  const Batch b = BatchOf(RandomClips(c, 4, 2), c);
  for (Mode mode : {Mode::kEval, Mode::kTrain}) {
    Graph g;
    const ForwardOutput out = Run(&net, &g, b, mode);
    CHECK(out.features.shape() == Shape{4, 9, 32});
    CHECK(out.forward_stream.shape() == Shape{4, 9, 32});
    CHECK(out.backward_stream.shape() == Shape{4, 9, 32});
    CHECK(out.embeddings.shape() == Shape{4, 64});
    CHECK(out.logits.shape() == Shape{4, 10});
    CHECK(out.logits.value().AllFinite());
  }
}

TEST_CASE("boundary feature widens the backend input by exactly one") {
  NetworkConfig on = ToyConfig(), off = ToyConfig();
  off.use_word_boundaries = false;
  CHECK(on.BackendInputSize() == on.feature_size + 1);
  CHECK(off.BackendInputSize() == off.feature_size);
  Network a(on, 3), b(off, 3);
  CHECK(a.params().Param("lstm.fwd.l0.input_weight").value.dim(1) == 33);
  CHECK(b.params().Param("lstm.fwd.l0.input_weight").value.dim(1) == 32);
  // Deeper layers never see the bit.
  CHECK(a.params().Param("lstm.fwd.l1.input_weight").value.dim(1) == 32);
  const Batch batch = BatchOf(RandomClips(on, 2, 4), on);
  Graph g1, g2;
  CHECK(Run(&a, &g1, batch, Mode::kEval).backend_input.shape() == Shape{2, 9, 33});
  CHECK(Run(&b, &g2, batch, Mode::kEval).backend_input.shape() == Shape{2, 9, 32});
}

TEST_CASE("single-step clips pool identically with average and last") {
  NetworkConfig avg = ToyConfig();
  avg.frames = 1;
  NetworkConfig last = avg;
  last.pooling = PoolMode::kLast;
  Network a(avg, 7), b(last, 7);
  std::vector<VideoClip> clips = RandomClips(avg, 3, 8);
  for (VideoClip &v : clips) {
    v.boundary_begin = 0;
    v.boundary_end = 1;
  }
  const Batch batch = BatchOf(clips, avg);
  Graph g1, g2;
  CHECK(Run(&a, &g1, batch, Mode::kEval).embeddings.value() ==
        Run(&b, &g2, batch, Mode::kEval).embeddings.value());
}

TEST_CASE("late concatenation keeps the two directions independent") {
  const NetworkConfig c = ToyConfig();
  Network net(c, 9);
  const Batch batch = BatchOf(RandomClips(c, 3, 10), c);
  ForwardOptions zero;
  zero.zero_backward_stream_input = true;
  for (Mode mode : {Mode::kEval, Mode::kTrain}) {
    Graph g1, g2;
    const ForwardOutput ref = Run(&net, &g1, batch, mode);
    const ForwardOutput abl = Run(&net, &g2, batch, mode, zero);
    CHECK(ref.forward_stream.value() == abl.forward_stream.value());
    CHECK(MaxAbsDiff(ref.backward_stream.value(), abl.backward_stream.value()) > 0.0);
  }
}

TEST_CASE("boundary vector matters only when the feature is enabled") {
  NetworkConfig on = ToyConfig(), off = ToyConfig();
  off.use_word_boundaries = false;
  for (const NetworkConfig &c : {on, off}) {
    Network net(c, 11);
    // Populate running statistics and move away from the initialization.
    const Batch warm = BatchOf(RandomClips(c, 6, 12), c);
    OpContext train(Mode::kTrain, 1);
    Graph g0;
    Run(&net, &g0, warm, Mode::kTrain);
    Batch batch = BatchOf(RandomClips(c, 2, 13), c);
    Graph g1, g2;
    const Array before = Run(&net, &g1, batch, Mode::kEval).embeddings.value();
    for (double &v : batch.boundary.values()) v = 1.0 - v;
    const Array after = Run(&net, &g2, batch, Mode::kEval).embeddings.value();
    if (c.use_word_boundaries)
      CHECK(MaxAbsDiff(before, after) > 0.0);
    else
      CHECK(before == after);
  }
}

TEST_CASE("configuration and clip validation") {
  NetworkConfig c = ToyConfig();
  c.lstm_layers = 3;
  CHECK_THROWS_WITH_AS(Network(c, 1), doctest::Contains("1 or 2 layers"), Error);
  c = ToyConfig();
  c.embedding_size = 63;
  CHECK_THROWS_AS(Network(c, 1), Error);
  c = ToyConfig();
  c.stem_kernel = {3, 4, 5};
  CHECK_THROWS_WITH_AS(Network(c, 1), doctest::Contains("must be odd"), Error);

  c = ToyConfig();
  Network net(c, 1);
  std::vector<VideoClip> clips = RandomClips(c, 2, 3);
  clips[1].frames = Array({9, 20, 24});
  CHECK_THROWS_WITH_AS(BatchOf(clips, c), doctest::Contains("network expects"), Error);
  VideoClip bad = RandomClips(c, 1, 4)[0];
  bad.boundary_begin = 5;
  bad.boundary_end = 5;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad.boundary_end = 10;
  CHECK_THROWS_AS(bad.Validate(), Error);
}

TEST_CASE("train-mode forward rejects a batch of one") {
  const NetworkConfig c = ToyConfig();
  Network net(c, 1);
  const Batch batch = BatchOf(RandomClips(c, 1, 3), c);
  Graph g;
  CHECK_THROWS_AS(Run(&net, &g, batch, Mode::kTrain), Error);
  Graph g2;
  CHECK(Run(&net, &g2, batch, Mode::kEval).embeddings.shape() == Shape{1, 64});
}

TEST_CASE("tiny end-to-end network passes the finite-difference check") {
  const NetworkConfig c = TinyConfig();
  CHECK(c.frames == 3);
  CHECK(c.height == 8);
  CHECK(c.feature_size == 4);
  CHECK(c.embedding_size == 8);
  CHECK(c.num_classes == 3);
  for (Backend backend : {Backend::kLstm, Backend::kTemporalConv}) {
    NetworkGradCheckOptions opts;
    opts.backend = backend;
    const GradCheckReport r = CheckNetworkGradients(c, opts);
    INFO(r.ToString());
    CHECK(r.passed);
    CHECK(r.max_rel_error < 1e-4);
    Network net(c, opts.seed);
    if (backend == Backend::kTemporalConv) net.AttachTemporalConvBackend(1);
    CHECK(r.groups.size() == net.TrainableNames(backend).size());
    for (const GroupReport &g : r.groups) CHECK(g.checked > 0);
  }
}

TEST_CASE("full-size preset constructs and runs one forward pass") {
  const NetworkConfig c = FullSizeConfig();
  Network net(c, 17);
  // Trunk with an 18-layer residual body plus the two-layer BiLSTM backend.
  CHECK(net.params().NumParameters() > 15000000);
  CHECK(net.params().Param("frontend.conv.weight").value.shape() ==
        Shape{64, 1, 5, 7, 7});
  CHECK(net.params().Param("lstm.bwd.l1.hidden_weight").value.shape() ==
        Shape{1024, 256});
  const Batch batch = BatchOf(RandomClips(c, 2, 1), c);
  Graph g;
  const ForwardOutput out = Run(&net, &g, batch, Mode::kEval);
  CHECK(out.features.shape() == Shape{2, 29, 256});
  CHECK(out.embeddings.shape() == Shape{2, 512});
  CHECK(out.logits.shape() == Shape{2, 500});
  CHECK(out.logits.value().AllFinite());
}

TEST_CASE("temporary backend attaches and detaches") {
  Network net(ToyConfig(), 2);
  const std::size_t base = net.params().NumParameters();
  net.AttachTemporalConvBackend(3);
  CHECK(net.has_temporal_conv_backend());
  CHECK(net.params().NumParameters() > base);
  CHECK_THROWS_AS(net.AttachTemporalConvBackend(3), Error);
  for (const std::string &n : net.TrainableNames(Backend::kTemporalConv))
    CHECK(n.rfind("lstm.", 0) != 0);
  net.DetachTemporalConvBackend();
  CHECK_FALSE(net.has_temporal_conv_backend());
  CHECK(net.params().NumParameters() == base);
  const Batch batch = BatchOf(RandomClips(ToyConfig(), 2, 1), ToyConfig());
  OpContext ctx;
  Graph g;
  CHECK_THROWS_AS(net.Forward(&g, batch, Backend::kTemporalConv, &ctx), Error);
}

TEST_CASE("checkpoint round trip is bit exact") {
  NetworkConfig c = ToyConfig();
  c.pooling = PoolMode::kLast;
  c.use_word_boundaries = false;
  Network net(c, 21);
  Graph g;
  Run(&net, &g, BatchOf(RandomClips(c, 4, 2), c), Mode::kTrain);
  const std::string dir = std::filesystem::temp_directory_path() / "lipembed-ckpt-test";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/net.json";
  SaveCheckpoint(net, path);
  CHECK(std::filesystem::exists(dir + "/net.bin"));
  std::unique_ptr<Network> back = LoadCheckpoint(path);
  CHECK(back->config().pooling == PoolMode::kLast);
  CHECK_FALSE(back->config().use_word_boundaries);
  CHECK(back->params().param_names() == net.params().param_names());
  for (const std::string &n : net.params().param_names())
    CHECK(back->params().Param(n).value == net.params().Param(n).value);
  for (const std::string &n : net.params().buffer_names())
    CHECK(back->params().Buffer(n) == net.params().Buffer(n));

  // Saving the loaded network reproduces the payload byte for byte.
  SaveCheckpoint(*back, dir + "/again.json");
  std::ifstream a(dir + "/net.bin", std::ios::binary), b(dir + "/again.bin", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}),
      sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);

  // A truncated payload is rejected.
  std::ofstream(dir + "/net.bin", std::ios::binary | std::ios::trunc) << sa.substr(0, 100);
  CHECK_THROWS_WITH_AS(LoadCheckpoint(path), doctest::Contains("payload"), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace lipembed
