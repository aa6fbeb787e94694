// lipnet/train.cc

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

#include "lipnet/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lipembed {

namespace {

// Consecutive index ranges of at most batch_size; a trailing batch of one is
// merged into its predecessor since train-mode batch norm needs two samples.
std::vector<std::vector<std::size_t>> MakeBatches(
    const std::vector<std::size_t> &order, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size)
    batches.emplace_back(order.begin() + i,
                         order.begin() + std::min(order.size(), i + batch_size));
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

std::vector<const VideoClip *> Gather(const std::vector<VideoClip> &clips,
                                      const std::vector<std::size_t> &idx) {
  std::vector<const VideoClip *> out;
  for (std::size_t i : idx) out.push_back(&clips[i]);
  return out;
}

std::size_t RankOfLabel(const double *logits, std::size_t k, std::size_t label) {
  std::size_t rank = 0;
  for (std::size_t j = 0; j < k; j++)
    if (logits[j] > logits[label] || (logits[j] == logits[label] && j < label))
      rank++;
  return rank;
}

void CheckLabels(const std::vector<VideoClip> &clips, std::size_t num_classes) {
  for (const VideoClip &c : clips)
    if (c.label >= num_classes)
      LE_ERR << "clip " << c.id << " has label " << c.label
             << " but the network has " << num_classes << " classes";
}

}  // namespace

LrScheduleState InitialSchedule(const LrScheduleOptions &opts) {
  if (!(opts.initial > 0.0) || !(opts.floor > 0.0) || opts.floor > opts.initial)
    LE_ERR << "learning-rate schedule needs 0 < floor <= initial";
  if (!(opts.factor > 0.0 && opts.factor < 1.0) || opts.patience < 1)
    LE_ERR << "learning-rate schedule needs a factor in (0,1) and patience >= 1";
  LrScheduleState s;
  s.learning_rate = opts.initial;
  return s;
}

LrScheduleState LrScheduleStep(const LrScheduleState &state, double metric,
                               const LrScheduleOptions &opts) {
  LrScheduleState s = state;
  if (metric < s.best_metric) {
    s.best_metric = metric;
    s.stagnant_epochs = 0;
    return s;
  }
  if (++s.stagnant_epochs >= opts.patience) {
    s.learning_rate = std::max(opts.floor, s.learning_rate * opts.factor);
    s.stagnant_epochs = 0;
  }
  return s;
}

EvalResult Evaluate(Network *net, Backend backend,
                    const std::vector<VideoClip> &clips,
                    std::size_t batch_size) {
  EvalResult r;
  if (clips.empty()) return r;
  CheckLabels(clips, net->config().num_classes);
  OpContext ctx(Mode::kEval);
  std::vector<std::size_t> order(clips.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t wrong = 0, wrong5 = 0;
  double loss = 0.0;
  for (const auto &idx : MakeBatches(order, std::max<std::size_t>(batch_size, 1))) {
    const Batch batch = MakeBatch(Gather(clips, idx), net->config());
    Graph g;
    const ForwardOutput out = net->Forward(&g, batch, backend, &ctx);
    const Array &logits = out.logits.value();
    const std::size_t k = logits.dim(1);
    for (std::size_t i = 0; i < idx.size(); i++) {
      const double *row = logits.data() + i * k;
      const std::size_t rank = RankOfLabel(row, k, batch.labels[i]);
      wrong += rank > 0;
      wrong5 += rank >= 5;
      loss += SoftmaxCrossEntropy(Array({k}, std::vector<double>(row, row + k)),
                                  batch.labels[i]).loss;
    }
  }
  r.count = clips.size();
  r.error = double(wrong) / r.count;
  r.top5_error = double(wrong5) / r.count;
  r.mean_loss = loss / r.count;
  return r;
}

TrainResult Train(Network *net, Backend backend,
                  const std::vector<VideoClip> &train,
                  const std::vector<VideoClip> &validation,
                  const TrainOptions &opts) {
  if (train.empty()) LE_ERR << "no training clips";
  if (validation.empty())
    LE_ERR << "a validation split is required for the learning-rate schedule";
  if (opts.batch_size < 2) LE_ERR << "batch size must be at least 2";
  CheckLabels(train, net->config().num_classes);
  CheckLabels(validation, net->config().num_classes);

  const std::vector<std::string> names = net->TrainableNames(backend);
  AdamState adam;
  adam.opts = opts.adam;
  LrScheduleState schedule = InitialSchedule(opts.schedule);
  adam.opts.learning_rate = schedule.learning_rate;
  OpContext ctx(Mode::kTrain, opts.seed);
  std::mt19937_64 shuffle_rng(opts.seed * 0x9E3779B97F4A7C15ULL + 1);

  TrainResult result;
  ParamSet last_good = net->params();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < opts.epochs; epoch++) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t wrong = 0;
    for (const auto &idx : MakeBatches(order, opts.batch_size)) {
      const Batch batch = MakeBatch(Gather(train, idx), net->config());
      net->params().ZeroGrad();
      ctx.set_mode(Mode::kTrain);
      Graph g;
      const ForwardOutput out = net->Forward(&g, batch, backend, &ctx);
      const Var loss = SoftmaxCrossEntropy(out.logits, batch.labels);
      const double value = loss.value()[0];
      if (std::isnan(result.first_batch_loss)) result.first_batch_loss = value;
      if (!std::isfinite(value)) {
        result.diverged = true;
        result.message = "non-finite loss in epoch " + std::to_string(epoch);
        break;
      }
      g.Backward(loss);
      try {
        AdamStep(&net->params(), &adam, names);
      } catch (const Error &e) {
        result.diverged = true;
        result.message = e.what();
        break;
      }
      for (const std::string &n : names) net->params().Param(n).value.RoundToFloat();

      loss_sum += value * idx.size();
      const Array &logits = out.logits.value();
      const std::size_t k = logits.dim(1);
      for (std::size_t i = 0; i < idx.size(); i++)
        wrong += RankOfLabel(logits.data() + i * k, k, batch.labels[i]) > 0;
    }
    if (result.diverged) {
      net->params() = last_good;
      LE_WARN << "training diverged (" << result.message
              << "); restored parameters of the last completed epoch";
      break;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / train.size();
    log.train_error = double(wrong) / train.size();
    const EvalResult val = Evaluate(net, backend, validation, opts.batch_size);
    log.val_loss = val.mean_loss;
    log.val_error = val.error;
    log.learning_rate = adam.opts.learning_rate;
    if (opts.monitor_train_error)
      log.eval_train_error = Evaluate(net, backend, train, opts.batch_size).error;
    result.epochs.push_back(log);
    LE_VLOG(1) << "epoch " << epoch << " loss " << log.train_loss
               << " train-err " << log.train_error << " val-err "
               << log.val_error << " lr " << log.learning_rate;

    schedule = LrScheduleStep(schedule, val.error, opts.schedule);
    adam.opts.learning_rate = schedule.learning_rate;
    last_good = net->params();
    if (opts.monitor_train_error && log.eval_train_error < opts.target_train_error)
      break;
  }
  return result;
}

StagedResult StagedTrain(Network *net, const std::vector<VideoClip> &train,
                         const std::vector<VideoClip> &validation,
                         const StagedOptions &opts) {
  StagedResult r;
  if (!net->has_temporal_conv_backend()) net->AttachTemporalConvBackend(opts.seed + 1);
  TrainOptions s1 = opts.stage1, s2 = opts.stage2;
  s1.seed = opts.seed;
  s2.seed = opts.seed + 2;
  r.stage1 = Train(net, Backend::kTemporalConv, train, validation, s1);
  r.stage1_val_error =
      Evaluate(net, Backend::kTemporalConv, validation, s1.batch_size).error;
  net->DetachTemporalConvBackend();
  if (r.stage1.diverged) {
    r.final_val_error = r.stage1_val_error;
    return r;
  }
  r.stage2_initial_val_error =
      Evaluate(net, Backend::kLstm, validation, s2.batch_size).error;
  r.stage2 = Train(net, Backend::kLstm, train, validation, s2);
  r.final_val_error = Evaluate(net, Backend::kLstm, validation, s2.batch_size).error;
  return r;
}

std::vector<Embedding> ExtractEmbeddings(Network *net,
                                         const std::vector<VideoClip> &clips,
                                         std::size_t batch_size) {
  net->CheckRunningStats(Backend::kLstm);
  OpContext ctx(Mode::kEval);
  std::vector<std::size_t> order(clips.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Embedding> out;
  out.reserve(clips.size());
  const std::size_t d = net->config().embedding_size;
  for (const auto &idx : MakeBatches(order, std::max<std::size_t>(batch_size, 1))) {
    const Batch batch = MakeBatch(Gather(clips, idx), net->config());
    Graph g;
    const ForwardOutput fwd = net->Forward(&g, batch, Backend::kLstm, &ctx);
    const Array &e = fwd.embeddings.value();
    for (std::size_t i = 0; i < idx.size(); i++) {
      Embedding emb;
      emb.id = clips[idx[i]].id;
      emb.label = clips[idx[i]].label;
      emb.values.assign(e.data() + i * d, e.data() + (i + 1) * d);
      out.push_back(std::move(emb));
    }
  }
  return out;
}

}  // namespace lipembed
