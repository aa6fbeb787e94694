// lipnet/train.h

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

#ifndef LIPEMBED_LIPNET_TRAIN_H_
#define LIPEMBED_LIPNET_TRAIN_H_

#include <limits>
#include <string>
#include <vector>

#include "diffgraph/adam.h"
#include "lipnet/network.h"

namespace lipembed {

/// Reduce-on-plateau: the learning rate is halved after `patience`
/// consecutive epochs without a strict improvement of the validation error,
/// and never goes below `floor`.
struct LrScheduleOptions {
  double initial = 3e-3;
  double factor = 0.5;
  double floor = 1e-5;
  int patience = 3;
};

struct LrScheduleState {
  double learning_rate = 3e-3;
  double best_metric = std::numeric_limits<double>::infinity();
  int stagnant_epochs = 0;
};

LrScheduleState InitialSchedule(const LrScheduleOptions &opts);
LrScheduleState LrScheduleStep(const LrScheduleState &state, double metric,
                               const LrScheduleOptions &opts);

struct TrainOptions {
  std::size_t epochs = 60;
  std::size_t batch_size = 16;
  AdamOptions adam;
  LrScheduleOptions schedule;
  uint64 seed = 17;
  /// Also measure the eval-mode error on the training clips every epoch.
  bool monitor_train_error = false;
  /// With monitoring on, stop once that error drops below this value.
  double target_train_error = -1.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;   // running mean over the epoch, train mode
  double train_error = 0.0;  // running, train mode
  double eval_train_error = -1.0;  // eval mode, when monitored
  double val_loss = 0.0;
  double val_error = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  double first_batch_loss = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
  std::string message;
};

/// Minibatch Adam on the softmax cross-entropy of the chosen backend, with
/// the plateau schedule driven by the validation error.  Only parameters on
/// the backend's path are updated.  On a non-finite loss or gradient the
/// parameters of the last completed epoch are restored and training stops
/// with `diverged` set.
TrainResult Train(Network *net, Backend backend,
                  const std::vector<VideoClip> &train,
                  const std::vector<VideoClip> &validation,
                  const TrainOptions &opts);

struct EvalResult {
  double error = 0.0;
  double top5_error = 0.0;
  double mean_loss = 0.0;
  std::size_t count = 0;
};

EvalResult Evaluate(Network *net, Backend backend,
                    const std::vector<VideoClip> &clips,
                    std::size_t batch_size = 16);

struct StagedOptions {
  TrainOptions stage1;
  TrainOptions stage2;
  uint64 seed = 17;
};

struct StagedResult {
  TrainResult stage1, stage2;
  double stage1_val_error = 0.0;
  double stage2_initial_val_error = 0.0;
  double final_val_error = 0.0;
};

/// Stage 1 trains the trunk through a temporary temporal-convolution
/// backend; stage 2 drops it and trains the whole network with the LSTM
/// backend, starting from fresh optimizer state and schedule.
StagedResult StagedTrain(Network *net, const std::vector<VideoClip> &train,
                         const std::vector<VideoClip> &validation,
                         const StagedOptions &opts);

/// Eval-mode embeddings of the LSTM backend, one per clip, in input order.
std::vector<Embedding> ExtractEmbeddings(Network *net,
                                         const std::vector<VideoClip> &clips,
                                         std::size_t batch_size = 16);

}  // namespace lipembed

#endif  // LIPEMBED_LIPNET_TRAIN_H_
