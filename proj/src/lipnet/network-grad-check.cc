// lipnet/network-grad-check.cc

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

#include "lipnet/network-grad-check.h"

#include <random>

namespace lipembed {

GradCheckReport CheckNetworkGradients(const NetworkConfig &config,
                                      const NetworkGradCheckOptions &opts) {
  if (opts.batch_size < 2) LE_ERR << "gradient check needs a batch of at least 2";
  Network net(config, opts.seed);
  if (opts.backend == Backend::kTemporalConv) net.AttachTemporalConvBackend(opts.seed + 1);

  std::mt19937_64 rng(opts.seed + 2);
  std::uniform_real_distribution<double> pixel(0.0, 1.0);
  std::vector<VideoClip> clips(opts.batch_size);
  for (std::size_t b = 0; b < clips.size(); b++) {
    VideoClip &c = clips[b];
    c.id = "probe" + std::to_string(b);
    c.frames = Array({config.frames, config.height, config.width});
    for (double &v : c.frames.values()) v = pixel(rng);
    c.label = b % config.num_classes;
    std::uniform_int_distribution<std::size_t> pos(0, config.frames - 1);
    const std::size_t a = pos(rng), e = pos(rng);
    c.boundary_begin = std::min(a, e);
    c.boundary_end = std::max(a, e) + 1;
  }
  std::vector<const VideoClip *> ptrs;
  for (const VideoClip &c : clips) ptrs.push_back(&c);
  const Batch batch = MakeBatch(ptrs, config);

  const Mode mode = opts.train_mode ? Mode::kTrain : Mode::kEval;
  const uint64 dropout_seed = opts.seed + 3;
  auto loss = [&](bool backward) {
    OpContext ctx(mode, dropout_seed);
    Graph g;
    const ForwardOutput out = net.Forward(&g, batch, opts.backend, &ctx);
    const Var l = SoftmaxCrossEntropy(out.logits, batch.labels);
    if (backward) g.Backward(l);
    return l.value()[0];
  };

  net.params().ZeroGrad();
  loss(true);
  const std::vector<std::string> names = net.TrainableNames(opts.backend);
  std::vector<Array> analytic;
  analytic.reserve(names.size());
  std::vector<GradGroup> groups;
  for (const std::string &n : names) {
    analytic.push_back(net.params().Param(n).grad);
    groups.push_back({n, &net.params().Param(n).value, &analytic.back()});
  }
  return GradCheck([&] { return loss(false); }, groups, opts.check);
}

}  // namespace lipembed
