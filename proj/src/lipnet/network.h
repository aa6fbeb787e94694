// lipnet/network.h

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

#ifndef LIPEMBED_LIPNET_NETWORK_H_
#define LIPEMBED_LIPNET_NETWORK_H_

// The word-embedding network:
//
//   frames [B,1,T,H,W]
//     -> spatiotemporal conv (stride 1 in time) -> BN -> relu
//     -> spatial max pool (time untouched)
//     -> per-frame residual body -> fully connected -> features [B,T,F]
//     -> (optional) boundary bit appended -> [B,T,F+1]
//     -> forward and backward LSTM stacks run independently through every
//        layer, concatenated only at the top -> [B,T,2H]
//     -> temporal pooling (average or last step) -> [B,d_x]
//     -> (optional) BN = embedding -> dropout -> linear classifier -> logits
//
// A temporary temporal-convolution backend can be attached for the first
// training stage and detached afterwards.

#include <array>
#include <string>
#include <vector>

#include "diffgraph/graph.h"
#include "diffgraph/layers.h"
#include "lipnet/video-clip.h"

namespace lipembed {

struct NetworkConfig {
  std::size_t frames = 9;
  std::size_t height = 24;
  std::size_t width = 24;

  std::size_t stem_channels = 8;
  /// time x height x width; padded by half its extent, stride (1,2,2).
  std::array<std::size_t, 3> stem_kernel = {3, 5, 5};
  std::vector<std::size_t> stage_channels = {8, 16};
  std::vector<std::size_t> stage_blocks = {1, 1};
  /// Per-frame feature size F produced by the fully connected layer.
  std::size_t feature_size = 32;

  std::size_t lstm_layers = 2;  // 1 or 2
  bool use_word_boundaries = true;
  double backend_dropout = 0.4;
  double embedding_dropout = 0.2;
  bool use_embedding_batchnorm = true;
  /// When false (the default), batch norm runs before the embedding dropout.
  bool dropout_before_batchnorm = false;
  PoolMode pooling = PoolMode::kAverage;
  /// d_x; split evenly between the two directions.
  std::size_t embedding_size = 64;
  std::size_t num_classes = 10;

  /// Channel width of the temporary temporal-convolution backend.
  std::size_t temporal_conv_channels = 32;

  void Validate() const;
  std::size_t BackendInputSize() const {
    return feature_size + (use_word_boundaries ? 1 : 0);
  }
  std::size_t HiddenSize() const { return embedding_size / 2; }
};

/// Desk-scale defaults used by the toy experiments.
NetworkConfig ToyConfig();
/// Smallest configuration that still exercises every layer (gradient checks).
NetworkConfig TinyConfig();
/// Full-size architecture: T=29, 112x112 frames, 5x7x7 front-end, 18-layer
/// residual body, F=256, d_x=512, 500 classes.
NetworkConfig FullSizeConfig();

enum class Backend { kLstm, kTemporalConv };

struct Batch {
  Array frames;                     // [B,1,T,H,W]
  Array boundary;                   // [B,T,1]
  std::vector<std::size_t> labels;  // B
};

/// Labels are copied unchecked so clips of unseen classes can be embedded.
Batch MakeBatch(const std::vector<const VideoClip *> &clips,
                const NetworkConfig &config);

struct ForwardOptions {
  /// Ablation hook: feed zeros to the backward-direction stack.
  bool zero_backward_stream_input = false;
};

struct ForwardOutput {
  Var features;         // [B,T,F] residual-body output
  Var backend_input;    // [B,T,F] or [B,T,F+1]
  Var forward_stream;   // [B,T,H] top layer of the forward stack
  Var backward_stream;  // [B,T,H] top layer of the backward stack
  Var embeddings;       // [B,d_x]
  Var logits;           // [B,W]
};

class Network {
 public:
  /// Builds and initializes every trunk and recurrent-backend parameter from
  /// the seed.  Parameters are stored on the float32 grid.
  Network(const NetworkConfig &config, uint64 seed);

  const NetworkConfig &config() const { return config_; }
  ParamSet &params() { return params_; }
  const ParamSet &params() const { return params_; }

  void AttachTemporalConvBackend(uint64 seed);
  void DetachTemporalConvBackend();
  bool has_temporal_conv_backend() const;

  ForwardOutput Forward(Graph *graph, const Batch &batch, Backend backend,
                        OpContext *ctx, const ForwardOptions &opts = {});

  /// Names of parameters used by the given backend's forward pass.
  std::vector<std::string> TrainableNames(Backend backend) const;

  /// Throws unless every batch-norm layer on the backend's path has been
  /// updated in train mode at least once.
  void CheckRunningStats(Backend backend) const;

  /// Rounds parameters and buffers onto the float32 grid.
  void RoundToFloat();

 private:
  void AddBatchNorm(const std::string &prefix, std::size_t channels);
  BatchNormVars BindBatchNorm(Graph *g, const std::string &prefix);
  Var BindParam(Graph *g, const std::string &name);

  Var Trunk(Graph *g, const Batch &batch, OpContext *ctx);
  Var RunDirection(Graph *g, const Var &input, bool reverse,
                   const std::string &prefix, OpContext *ctx);

  NetworkConfig config_;
  ParamSet params_;
};

/// Short human-readable summary (layer shapes, parameter count).
std::string DescribeNetwork(const Network &net);

}  // namespace lipembed

#endif  // LIPEMBED_LIPNET_NETWORK_H_
