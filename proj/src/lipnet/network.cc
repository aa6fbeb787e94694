// lipnet/network.cc

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

#include "lipnet/network.h"

#include <cmath>
#include <random>
#include <sstream>

namespace lipembed {

namespace {

std::size_t StridedSize(std::size_t in, std::size_t kernel, std::size_t stride,
                        std::size_t pad) {
  if (in + 2 * pad < kernel) return 0;
  return (in + 2 * pad - kernel) / stride + 1;
}

// Spatial size of the per-frame maps entering the fully connected layer.
std::array<std::size_t, 2> BodyOutputSize(const NetworkConfig &c) {
  std::array<std::size_t, 2> hw = {c.height, c.width};
  for (int a = 0; a < 2; a++) {
    const std::size_t k = c.stem_kernel[a + 1];
    std::size_t s = StridedSize(hw[a], k, 2, k / 2);
    s = StridedSize(s, 3, 2, 1);
    for (std::size_t i = 1; i < c.stage_channels.size(); i++)
      s = StridedSize(s, 3, 2, 1);
    hw[a] = s;
  }
  return hw;
}

std::string BlockPrefix(std::size_t stage, std::size_t block) {
  return "body.s" + std::to_string(stage) + ".b" + std::to_string(block);
}

const char *kTrunkPrefixes[] = {"frontend.", "body."};
const char *kLstmPrefixes[] = {"lstm.", "embed_bn.", "classifier."};

bool StartsWith(const std::string &s, const std::string &prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

void NetworkConfig::Validate() const {
  if (frames == 0 || height == 0 || width == 0)
    LE_ERR << "clip geometry must be non-empty, got T=" << frames << " H="
           << height << " W=" << width;
  for (std::size_t k : stem_kernel)
    if (k == 0 || k % 2 == 0)
      LE_ERR << "front-end kernel extents must be odd, got " << stem_kernel[0]
             << "x" << stem_kernel[1] << "x" << stem_kernel[2];
  if (stem_channels == 0) LE_ERR << "front-end needs at least one channel";
  if (stage_channels.empty() || stage_channels.size() != stage_blocks.size())
    LE_ERR << "residual body needs matching, non-empty stage channel and "
              "block lists";
  for (std::size_t i = 0; i < stage_channels.size(); i++)
    if (stage_channels[i] == 0 || stage_blocks[i] == 0)
      LE_ERR << "residual stage " << i << " is empty";
  if (feature_size == 0) LE_ERR << "feature size must be positive";
  if (lstm_layers < 1 || lstm_layers > 2)
    LE_ERR << "LSTM backend supports 1 or 2 layers, got " << lstm_layers;
  if (embedding_size < 2 || embedding_size % 2 != 0)
    LE_ERR << "embedding size must be even (two directions), got "
           << embedding_size;
  if (!(backend_dropout >= 0.0 && backend_dropout < 1.0) ||
      !(embedding_dropout >= 0.0 && embedding_dropout < 1.0))
    LE_ERR << "dropout probabilities must lie in [0,1)";
  if (num_classes < 2) LE_ERR << "need at least two classes";
  if (temporal_conv_channels == 0)
    LE_ERR << "temporal convolution width must be positive";
}

NetworkConfig ToyConfig() { return NetworkConfig(); }

NetworkConfig TinyConfig() {
  NetworkConfig c;
  c.frames = 3;
  c.height = 8;
  c.width = 8;
  c.stem_channels = 2;
  c.stem_kernel = {3, 3, 3};
  c.stage_channels = {2, 3};
  c.stage_blocks = {1, 1};
  c.feature_size = 4;
  c.embedding_size = 8;
  c.num_classes = 3;
  c.temporal_conv_channels = 4;
  return c;
}

NetworkConfig FullSizeConfig() {
  NetworkConfig c;
  c.frames = 29;
  c.height = 112;
  c.width = 112;
  c.stem_channels = 64;
  c.stem_kernel = {5, 7, 7};
  c.stage_channels = {64, 128, 256, 512};
  c.stage_blocks = {2, 2, 2, 2};
  c.feature_size = 256;
  c.embedding_size = 512;
  c.num_classes = 500;
  c.temporal_conv_channels = 512;
  return c;
}

std::vector<double> VideoClip::BoundaryMask() const {
  std::vector<double> m(num_frames(), 0.0);
  for (std::size_t t = boundary_begin; t < boundary_end && t < m.size(); t++)
    m[t] = 1.0;
  return m;
}

void VideoClip::Validate() const {
  if (frames.rank() != 3)
    LE_ERR << "clip " << id << " must be [T,H,W], got "
           << ShapeString(frames.shape());
  if (num_frames() == 0) LE_ERR << "clip " << id << " has no frames";
  if (boundary_begin >= boundary_end || boundary_end > num_frames())
    LE_ERR << "clip " << id << " has boundary [" << boundary_begin << ","
           << boundary_end << ") outside its " << num_frames() << " frames";
  if (!frames.AllFinite()) LE_ERR << "clip " << id << " has non-finite pixels";
}

Batch MakeBatch(const std::vector<const VideoClip *> &clips,
                const NetworkConfig &config) {
  if (clips.empty()) LE_ERR << "empty batch";
  const std::size_t b = clips.size(), t = config.frames, h = config.height,
                    w = config.width, frame = h * w;
  Batch batch;
  batch.frames = Array({b, 1, t, h, w});
  batch.boundary = Array({b, t, 1});
  for (std::size_t i = 0; i < b; i++) {
    const VideoClip &c = *clips[i];
    if (c.frames.shape() != Shape{t, h, w})
      LE_ERR << "clip " << c.id << " is " << ShapeString(c.frames.shape())
             << ", network expects " << ShapeString({t, h, w});
    std::copy(c.frames.data(), c.frames.data() + t * frame,
              batch.frames.data() + i * t * frame);
    const std::vector<double> mask = c.BoundaryMask();
    std::copy(mask.begin(), mask.end(), batch.boundary.data() + i * t);
    batch.labels.push_back(c.label);
  }
  return batch;
}

Network::Network(const NetworkConfig &config, uint64 seed) : config_(config) {
  config_.Validate();
  const NetworkConfig &c = config_;
  std::mt19937_64 rng(seed);
  auto add = [&](const std::string &name, Shape shape, double bound) {
    Array a(std::move(shape));
    FillUniform(&a, bound, &rng);
    params_.Add(name, std::move(a));
  };
  auto conv = [&](const std::string &name, Shape shape) {
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < shape.size(); i++) fan_in *= shape[i];
    add(name, std::move(shape), 1.0 / std::sqrt(double(fan_in)));
  };
  auto linear = [&](const std::string &name, std::size_t out, std::size_t in) {
    const double bound = 1.0 / std::sqrt(double(in));
    add(name + ".weight", {out, in}, bound);
    add(name + ".bias", {out}, bound);
  };

  const auto &k = c.stem_kernel;
  conv("frontend.conv.weight", {c.stem_channels, 1, k[0], k[1], k[2]});
  AddBatchNorm("frontend.bn", c.stem_channels);

  std::size_t in = c.stem_channels;
  for (std::size_t s = 0; s < c.stage_channels.size(); s++) {
    const std::size_t out = c.stage_channels[s];
    for (std::size_t b = 0; b < c.stage_blocks[s]; b++) {
      const std::string p = BlockPrefix(s, b);
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      conv(p + ".conv1.weight", {out, in, 3, 3});
      AddBatchNorm(p + ".bn1", out);
      conv(p + ".conv2.weight", {out, out, 3, 3});
      AddBatchNorm(p + ".bn2", out);
      if (stride > 1 || in != out) {
        conv(p + ".proj.weight", {out, in, 1, 1});
        AddBatchNorm(p + ".proj_bn", out);
      }
      in = out;
    }
  }
  const auto hw = BodyOutputSize(c);
  linear("body.fc", c.feature_size, in * hw[0] * hw[1]);

  const std::size_t hidden = c.HiddenSize();
  const double lstm_bound = 1.0 / std::sqrt(double(hidden));
  for (const char *dir : {"fwd", "bwd"}) {
    std::size_t layer_in = c.BackendInputSize();
    for (std::size_t l = 0; l < c.lstm_layers; l++) {
      const std::string p =
          std::string("lstm.") + dir + ".l" + std::to_string(l);
      add(p + ".input_weight", {4 * hidden, layer_in}, lstm_bound);
      add(p + ".hidden_weight", {4 * hidden, hidden}, lstm_bound);
      add(p + ".bias", {4 * hidden}, lstm_bound);
      layer_in = hidden;
    }
  }
  if (c.use_embedding_batchnorm) AddBatchNorm("embed_bn", c.embedding_size);
  linear("classifier", c.num_classes, c.embedding_size);
  RoundToFloat();
}

void Network::AddBatchNorm(const std::string &prefix, std::size_t channels) {
  params_.Add(prefix + ".gamma", Array({channels}, 1.0));
  params_.Add(prefix + ".beta", Array({channels}, 0.0));
  params_.AddBuffer(prefix + ".running_mean", Array({channels}, 0.0));
  params_.AddBuffer(prefix + ".running_var", Array({channels}, 1.0));
  params_.AddBuffer(prefix + ".num_updates", Array({1}, 0.0));
}

void Network::AttachTemporalConvBackend(uint64 seed) {
  if (has_temporal_conv_backend())
    LE_ERR << "temporal convolution backend is already attached";
  const NetworkConfig &c = config_;
  std::mt19937_64 rng(seed);
  auto add = [&](const std::string &name, Shape shape, double bound) {
    Array a(std::move(shape));
    FillUniform(&a, bound, &rng);
    a.RoundToFloat();
    params_.Add(name, std::move(a));
  };
  const std::size_t in = c.BackendInputSize(), ch = c.temporal_conv_channels;
  add("tcn.conv1.weight", {ch, in, 1, 3}, 1.0 / std::sqrt(3.0 * in));
  add("tcn.conv1.bias", {ch}, 1.0 / std::sqrt(3.0 * in));
  add("tcn.conv2.weight", {ch, ch, 1, 3}, 1.0 / std::sqrt(3.0 * ch));
  add("tcn.conv2.bias", {ch}, 1.0 / std::sqrt(3.0 * ch));
  add("tcn.classifier.weight", {c.num_classes, ch}, 1.0 / std::sqrt(double(ch)));
  add("tcn.classifier.bias", {c.num_classes}, 1.0 / std::sqrt(double(ch)));
}

void Network::DetachTemporalConvBackend() { params_.RemovePrefix("tcn."); }

bool Network::has_temporal_conv_backend() const {
  return params_.HasParam("tcn.conv1.weight");
}

Var Network::BindParam(Graph *g, const std::string &name) {
  return g->Param(&params_.Param(name));
}

BatchNormVars Network::BindBatchNorm(Graph *g, const std::string &prefix) {
  BatchNormVars bn;
  bn.gamma = BindParam(g, prefix + ".gamma");
  bn.beta = BindParam(g, prefix + ".beta");
  bn.buffers.running_mean = &params_.Buffer(prefix + ".running_mean");
  bn.buffers.running_var = &params_.Buffer(prefix + ".running_var");
  bn.buffers.num_updates = &params_.Buffer(prefix + ".num_updates");
  return bn;
}

Var Network::Trunk(Graph *g, const Batch &batch, OpContext *ctx) {
  const NetworkConfig &c = config_;
  const std::size_t b = batch.frames.dim(0), t = c.frames;
  Conv3dOptions stem;
  stem.stride = {1, 2, 2};
  stem.padding = {c.stem_kernel[0] / 2, c.stem_kernel[1] / 2,
                  c.stem_kernel[2] / 2};
  Var x = Conv3d(g->Constant(batch.frames),
                 BindParam(g, "frontend.conv.weight"), stem);
  x = Relu(ApplyBatchNorm(x, BindBatchNorm(g, "frontend.bn"), *ctx));
  x = MaxPool3d(x, Pool3dOptions());

  // [B,C,T,h,w] -> [B*T,C,h,w]: the body sees every frame independently.
  const Shape s = x.shape();
  x = Reshape(Permute(x, {0, 2, 1, 3, 4}), {b * t, s[1], s[3], s[4]});
  for (std::size_t st = 0; st < c.stage_channels.size(); st++) {
    for (std::size_t bl = 0; bl < c.stage_blocks[st]; bl++) {
      const std::string p = BlockPrefix(st, bl);
      ResidualBlockVars w;
      w.conv1 = BindParam(g, p + ".conv1.weight");
      w.conv2 = BindParam(g, p + ".conv2.weight");
      w.bn1 = BindBatchNorm(g, p + ".bn1");
      w.bn2 = BindBatchNorm(g, p + ".bn2");
      if (params_.HasParam(p + ".proj.weight")) {
        w.projection = BindParam(g, p + ".proj.weight");
        w.projection_bn = BindBatchNorm(g, p + ".proj_bn");
      }
      x = ResidualBlock(x, w, (st > 0 && bl == 0) ? 2 : 1, *ctx);
    }
  }
  const std::size_t flat = x.value().size() / (b * t);
  x = Linear(Reshape(x, {b * t, flat}), BindParam(g, "body.fc.weight"),
             BindParam(g, "body.fc.bias"));
  return Reshape(x, {b, t, c.feature_size});
}

Var Network::RunDirection(Graph *g, const Var &input, bool reverse,
                          const std::string &prefix, OpContext *ctx) {
  const std::size_t b = input.shape()[0], t = input.shape()[1],
                    hidden = config_.HiddenSize();
  Var seq = input;
  for (std::size_t l = 0; l < config_.lstm_layers; l++) {
    const std::string p = prefix + ".l" + std::to_string(l);
    const Var in = DropoutSeq(seq, config_.backend_dropout, ctx);
    const Var wx = BindParam(g, p + ".input_weight"),
              wh = BindParam(g, p + ".hidden_weight"),
              bias = BindParam(g, p + ".bias");
    LstmState state{g->Constant(Array({b, hidden})),
                    g->Constant(Array({b, hidden}))};
    std::vector<Var> outputs(t);
    for (std::size_t k = 0; k < t; k++) {
      const std::size_t step = reverse ? t - 1 - k : k;
      state = LstmStep(SelectStep(in, step), state, wx, wh, bias);
      outputs[step] = state.h;
    }
    seq = StackSteps(outputs);
  }
  return seq;
}

ForwardOutput Network::Forward(Graph *g, const Batch &batch, Backend backend,
                               OpContext *ctx, const ForwardOptions &opts) {
  const NetworkConfig &c = config_;
  if (batch.frames.rank() != 5 || batch.frames.dim(1) != 1 ||
      batch.frames.dim(2) != c.frames || batch.frames.dim(3) != c.height ||
      batch.frames.dim(4) != c.width)
    LE_ERR << "network expects frames [B,1," << c.frames << "," << c.height
           << "," << c.width << "], got " << ShapeString(batch.frames.shape());
  const std::size_t b = batch.frames.dim(0);

  ForwardOutput out;
  out.features = Trunk(g, batch, ctx);
  out.backend_input = out.features;
  if (c.use_word_boundaries) {
    if (batch.boundary.shape() != Shape{b, c.frames, 1})
      LE_ERR << "boundary indicator must be [B,T,1], got "
             << ShapeString(batch.boundary.shape());
    out.backend_input = ConcatLast(out.features, g->Constant(batch.boundary));
  }

  if (backend == Backend::kTemporalConv) {
    if (!has_temporal_conv_backend())
      LE_ERR << "temporal convolution backend is not attached";
    const std::size_t in = c.BackendInputSize(), ch = c.temporal_conv_channels;
    Conv2dOptions o;
    o.padding = {0, 1};
    Var s = Reshape(Permute(out.backend_input, {0, 2, 1}), {b, in, 1, c.frames});
    s = Relu(AddChannelBias(Conv2d(s, BindParam(g, "tcn.conv1.weight"), o),
                            BindParam(g, "tcn.conv1.bias")));
    s = Relu(AddChannelBias(Conv2d(s, BindParam(g, "tcn.conv2.weight"), o),
                            BindParam(g, "tcn.conv2.bias")));
    s = Permute(Reshape(s, {b, ch, c.frames}), {0, 2, 1});
    out.embeddings = TemporalPool(s, PoolMode::kAverage);
    out.logits = Linear(out.embeddings, BindParam(g, "tcn.classifier.weight"),
                        BindParam(g, "tcn.classifier.bias"));
    return out;
  }

  Var backward_input = out.backend_input;
  if (opts.zero_backward_stream_input)
    backward_input = g->Constant(Array(out.backend_input.shape()));
  out.forward_stream = RunDirection(g, out.backend_input, false, "lstm.fwd", ctx);
  out.backward_stream = RunDirection(g, backward_input, true, "lstm.bwd", ctx);
  const Var pooled =
      TemporalPool(ConcatLast(out.forward_stream, out.backward_stream), c.pooling);

  auto dropout = [&](const Var &x) {
    const Shape s = x.shape();
    return Reshape(DropoutSeq(Reshape(x, {s[0], 1, s[1]}), c.embedding_dropout, ctx),
                   s);
  };
  Var head;
  if (c.dropout_before_batchnorm) {
    head = dropout(pooled);
    if (c.use_embedding_batchnorm)
      head = ApplyBatchNorm(head, BindBatchNorm(g, "embed_bn"), *ctx);
    out.embeddings = head;
  } else {
    out.embeddings = pooled;
    if (c.use_embedding_batchnorm)
      out.embeddings = ApplyBatchNorm(pooled, BindBatchNorm(g, "embed_bn"), *ctx);
    head = dropout(out.embeddings);
  }
  out.logits = Linear(head, BindParam(g, "classifier.weight"),
                      BindParam(g, "classifier.bias"));
  return out;
}

std::vector<std::string> Network::TrainableNames(Backend backend) const {
  std::vector<std::string> names;
  for (const std::string &n : params_.param_names()) {
    bool keep = false;
    for (const char *p : kTrunkPrefixes) keep = keep || StartsWith(n, p);
    if (backend == Backend::kTemporalConv) {
      keep = keep || StartsWith(n, "tcn.");
    } else {
      for (const char *p : kLstmPrefixes) keep = keep || StartsWith(n, p);
    }
    if (keep) names.push_back(n);
  }
  return names;
}

void Network::CheckRunningStats(Backend backend) const {
  const std::string suffix = ".num_updates";
  for (const std::string &n : params_.buffer_names()) {
    if (n.size() < suffix.size() ||
        n.compare(n.size() - suffix.size(), suffix.size(), suffix) != 0)
      continue;
    if (backend == Backend::kTemporalConv && StartsWith(n, "embed_bn."))
      continue;
    if (params_.Buffer(n)[0] <= 0.0)
      LE_ERR << "batch-norm running statistics "
             << n.substr(0, n.size() - suffix.size())
             << " were never populated; train the network before extracting";
  }
}

void Network::RoundToFloat() {
  for (const std::string &n : params_.param_names())
    params_.Param(n).value.RoundToFloat();
  for (const std::string &n : params_.buffer_names())
    params_.Buffer(n).RoundToFloat();
}

std::string DescribeNetwork(const Network &net) {
  const NetworkConfig &c = net.config();
  const auto hw = BodyOutputSize(c);
  std::ostringstream os;
  os << "input [B,1," << c.frames << "," << c.height << "," << c.width << "]\n"
     << "front-end " << c.stem_kernel[0] << "x" << c.stem_kernel[1] << "x"
     << c.stem_kernel[2] << " conv, " << c.stem_channels << " channels\n"
     << "residual body:";
  for (std::size_t s = 0; s < c.stage_channels.size(); s++)
    os << " " << c.stage_channels[s] << "x" << c.stage_blocks[s];
  os << ", final maps " << hw[0] << "x" << hw[1] << " -> F=" << c.feature_size
     << "\n"
     << "backend input " << c.BackendInputSize() << ", " << c.lstm_layers
     << "-layer BiLSTM, hidden " << c.HiddenSize() << " per direction\n"
     << "embedding " << c.embedding_size << ", classes " << c.num_classes
     << "\n"
     << "parameters " << net.params().NumParameters() << "\n";
  return os.str();
}

}  // namespace lipembed
