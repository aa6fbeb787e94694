// tools/lipembed.cc

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

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "base/io.h"
#include "diffgraph/op-suite.h"
#include "lipnet/checkpoint.h"
#include "lipnet/network-grad-check.h"
#include "lipnet/train.h"
#include "lowshot/lowshot.h"
#include "synthgen/dataset.h"
#include "synthgen/embeddings.h"
#include "synthgen/videos.h"

namespace fs = std::filesystem;

namespace lipembed {
namespace {

const char *kUsage =
    "Visual word embeddings from lip videos, with PLDA enrollment and\n"
    "low-shot word identification and matching.\n"
    "\n"
    "Typical synthetic run:\n"
    "  lipembed gen-synth videos --out data\n"
    "  lipembed split --manifest data/manifest.csv --seen-classes 7 \\\n"
    "      --fractions 0.8,0.2 --names train,val --out data\n"
    "  lipembed train --train data/train.csv --val data/val.csv --out net.json\n"
    "  lipembed extract --checkpoint net.json --manifest data/train.csv --out seen.csv\n"
    "  lipembed plda-train --embeddings seen.csv --dy 6 --out plda.json\n"
    "  lipembed eval-match --plda plda.json --pool unseen.csv \\\n"
    "      --enroll-per-class 10 --nc 1 --out match.json\n";

// Options shared by every subcommand.
struct Common {
  uint64 seed = 17;
  int verbose = 0;
};

void AddCommon(CLI::App *app, Common *c) {
  app->add_option("--seed", c->seed, "Seed of every random choice")->capture_default_str();
  app->add_option("--verbose", c->verbose, "Log level on stderr (0 quiet, 1 progress, 2 debug)")
      ->capture_default_str();
  app->add_option("--config", "key=value lines used as defaults for the other flags");
}

// Expands --config FILE into flags.  Keys given on the command line win.
std::vector<std::string> ExpandConfig(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc), out, from_file;
  std::string path;
  for (std::size_t i = 0; i < args.size(); i++) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (path.empty()) return out;
  std::set<std::string> given;
  for (const std::string &a : out)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
  std::istringstream in(ReadFile(path));
  std::string line;
  for (int n = 1; std::getline(in, line); n++) {
    const auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      LE_ERR << path << ":" << n << ": expected key=value, got '" << line << "'";
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (given.count(key)) continue;
    if (value == "true") {
      from_file.push_back("--" + key);
    } else if (value != "false") {
      from_file.push_back("--" + key);
      from_file.push_back(value);
    }
  }
  out.insert(out.end(), from_file.begin(), from_file.end());
  return out;
}

std::string Join(const std::string &dir, const std::string &file) {
  return (fs::path(dir) / file).string();
}

void MakeDirs(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) LE_ERR << "cannot create directory " << dir << ": " << ec.message();
}

std::pair<std::size_t, std::size_t> ParseSize(const std::string &s) {
  std::size_t h = 0, w = 0;
  char x = 0, extra = 0;
  if (std::sscanf(s.c_str(), "%zu%c%zu%c", &h, &x, &w, &extra) != 3 || x != 'x')
    LE_ERR << "size must look like HxW, got '" << s << "'";
  return {h, w};
}

std::vector<VideoClip> LoadClips(const std::string &manifest_path) {
  const DatasetManifest m = ReadManifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<VideoClip> clips;
  clips.reserve(m.records.size());
  for (const ManifestRecord &r : m.records) {
    VideoClip c = ReadClip((base / r.file).string(), r.source_id);
    if (c.label != r.label)
      LE_ERR << "clip " << r.source_id << " has label " << c.label
             << " but the manifest says " << r.label;
    clips.push_back(std::move(c));
  }
  LE_LOG << "read " << clips.size() << " clips from " << manifest_path;
  return clips;
}

// ---------------------------------------------------------------------------

struct VideoArgs {
  Common common;
  VideoSpec spec;
  std::string size = "24x24";
  std::string out;
};

int GenVideos(VideoArgs &a) {
  std::tie(a.spec.height, a.spec.width) = ParseSize(a.size);
  a.spec.seed = a.common.seed;
  const std::vector<VideoClip> clips = GenerateVideos(a.spec);
  MakeDirs(Join(a.out, "clips"));
  DatasetManifest m;
  std::ostringstream echo;
  echo << "videos classes=" << a.spec.num_classes << " per-class=" << a.spec.instances_per_class
       << " frames=" << a.spec.frames << " size=" << a.spec.height << "x" << a.spec.width
       << " word=" << a.spec.min_boundary << "-" << a.spec.max_boundary
       << " templates=" << a.spec.templates_per_class << " inventory=" << a.spec.inventory_size
       << " noise=" << a.spec.instance_noise << " context-noise=" << a.spec.context_noise
       << " seed=" << a.spec.seed;
  m.spec_echo = echo.str();
  for (const VideoClip &c : clips) {
    const std::string file = "clips/" + c.id + ".lpcl";
    WriteClip(c, Join(a.out, file));
    m.records.push_back({c.id, file, c.label, "all"});
  }
  WriteManifest(m, Join(a.out, "manifest.csv"));
  std::cout << "wrote " << clips.size() << " clips and " << Join(a.out, "manifest.csv") << "\n";
  return 0;
}

struct ModelArgs {
  Common common;
  std::size_t dim = 32, latent_dim = 8;
  double between = 1.0, within = 1.0;
  std::string out;
};

int GenModel(const ModelArgs &a) {
  const PldaModel m =
      RandomPldaModel(a.dim, a.latent_dim, a.between, a.within, a.common.seed);
  WritePldaModel(m, a.out);
  std::cout << "wrote model d_x=" << m.dim() << " d_y=" << m.latent_dim() << " to " << a.out
            << "\n";
  return 0;
}

struct EmbeddingArgs {
  Common common;
  std::string plda;
  EmbeddingSpec spec;
  std::string out;
};

int GenEmbeddings(EmbeddingArgs &a) {
  a.spec.seed = a.common.seed;
  const std::vector<Embedding> v = SamplePldaEmbeddings(ReadPldaModel(a.plda), a.spec);
  WriteEmbeddings(v, a.out);
  std::cout << "wrote " << v.size() << " embeddings to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SplitArgs {
  Common common;
  std::string manifest;
  std::vector<double> fractions = {0.8, 0.2};
  std::vector<std::string> names = {"train", "val"};
  std::size_t seen_classes = 0;
  std::string out;
};

int Split(const SplitArgs &a) {
  if (a.names.size() != a.fractions.size())
    LE_ERR << "got " << a.names.size() << " split names for " << a.fractions.size()
           << " fractions";
  const DatasetManifest m = ReadManifest(a.manifest);
  MakeDirs(a.out);
  // File references stay valid from the output directory.
  const fs::path from = fs::absolute(fs::path(a.manifest).parent_path());
  const fs::path to = fs::absolute(fs::path(a.out));
  DatasetManifest seen, unseen;
  seen.spec_echo = unseen.spec_echo = m.spec_echo;
  for (ManifestRecord r : m.records) {
    r.file = fs::relative(from / r.file, to).generic_string();
    (a.seen_classes > 0 && r.label >= a.seen_classes ? unseen : seen).records.push_back(r);
  }
  const std::vector<DatasetManifest> parts =
      SplitManifest(seen, a.fractions, a.names, a.common.seed);
  for (std::size_t k = 0; k < parts.size(); k++) {
    WriteManifest(parts[k], Join(a.out, a.names[k] + ".csv"));
    std::cout << a.names[k] << ": " << parts[k].records.size() << " records\n";
  }
  if (a.seen_classes > 0) {
    for (ManifestRecord &r : unseen.records) r.split = "unseen";
    WriteManifest(unseen, Join(a.out, "unseen.csv"));
    std::cout << "unseen: " << unseen.records.size() << " records\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string train, val, out, log;
  std::string preset = "toy";
  std::size_t classes = 0;
  std::size_t embedding_size = 0;
  std::string pooling = "average";
  bool no_word_boundaries = false;
  bool no_staging = false;
  std::size_t stage1_epochs = 20, stage2_epochs = 40;
  std::size_t batch_size = 16;
  double learning_rate = 3e-3;
};

std::string FormatLog(const std::string &stage, const TrainResult &r) {
  std::ostringstream s;
  char buf[256];
  for (const EpochLog &e : r.epochs) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", stage.c_str(),
                  e.epoch, e.train_loss, e.train_error, e.val_loss, e.val_error,
                  e.learning_rate);
    s << buf;
  }
  return s.str();
}

int TrainCmd(const TrainArgs &a) {
  const std::vector<VideoClip> train = LoadClips(a.train), val = LoadClips(a.val);
  NetworkConfig config = a.preset == "toy"    ? ToyConfig()
                         : a.preset == "tiny" ? TinyConfig()
                                              : FullSizeConfig();
  std::size_t max_label = 0;
  for (const VideoClip &c : train) max_label = std::max(max_label, c.label);
  config.num_classes = a.classes > 0 ? a.classes : max_label + 1;
  if (a.embedding_size > 0) config.embedding_size = a.embedding_size;
  config.pooling = a.pooling == "last" ? PoolMode::kLast : PoolMode::kAverage;
  config.use_word_boundaries = !a.no_word_boundaries;
  if (!train.empty()) {
    config.frames = train[0].frames.dim(0);
    config.height = train[0].frames.dim(1);
    config.width = train[0].frames.dim(2);
  }
  Network net(config, a.common.seed);
  LE_LOG << DescribeNetwork(net);

  TrainOptions base;
  base.batch_size = a.batch_size;
  base.adam.learning_rate = base.schedule.initial = a.learning_rate;
  std::string log = "stage,epoch,train_loss,train_error,val_loss,val_error,learning_rate\n";
  bool diverged = false;
  double final_error = 0.0;
  if (a.no_staging) {
    base.epochs = a.stage2_epochs;
    base.seed = a.common.seed;
    const TrainResult r = Train(&net, Backend::kLstm, train, val, base);
    log += FormatLog("lstm", r);
    diverged = r.diverged;
    final_error = Evaluate(&net, Backend::kLstm, val).error;
  } else {
    StagedOptions o;
    o.seed = a.common.seed;
    o.stage1 = o.stage2 = base;
    o.stage1.epochs = a.stage1_epochs;
    o.stage2.epochs = a.stage2_epochs;
    const StagedResult r = StagedTrain(&net, train, val, o);
    log += FormatLog("tcn", r.stage1) + FormatLog("lstm", r.stage2);
    diverged = r.stage1.diverged || r.stage2.diverged;
    std::cerr << "stage 1 validation error " << r.stage1_val_error
              << ", stage 2 initial " << r.stage2_initial_val_error << "\n";
    final_error = r.final_val_error;
  }
  SaveCheckpoint(net, a.out);
  if (!a.log.empty()) WriteFileAtomic(a.log, log);
  std::cout << "validation error " << final_error << "; checkpoint " << a.out << "\n";
  if (diverged) {
    std::cerr << "training diverged; the checkpoint holds the last good parameters\n";
    return 1;
  }
  return 0;
}

struct ExtractArgs {
  Common common;
  std::string checkpoint, manifest, out;
  std::size_t batch_size = 16;
};

int ExtractCmd(const ExtractArgs &a) {
  std::unique_ptr<Network> net = LoadCheckpoint(a.checkpoint);
  const std::vector<VideoClip> clips = LoadClips(a.manifest);
  const std::vector<Embedding> e = ExtractEmbeddings(net.get(), clips, a.batch_size);
  WriteEmbeddings(e, a.out);
  std::cout << "wrote " << e.size() << " embeddings of dimension "
            << net->config().embedding_size << " to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct PldaArgs {
  Common common;
  std::string embeddings, out;
  std::size_t classes_below = 0;
  EmOptions em;
  bool plain_em = false;
};

int PldaTrain(PldaArgs &a) {
  std::vector<Embedding> data = ReadEmbeddings(a.embeddings);
  if (a.classes_below > 0)
    std::erase_if(data, [&](const Embedding &e) { return e.label >= a.classes_below; });
  a.em.seed = a.common.seed;
  a.em.expand_latent = !a.plain_em;
  const EmResult r = EmFit(data, a.em);
  bool monotone = true;
  for (std::size_t i = 0; i < r.loglik.size(); i++) {
    std::fprintf(stderr, "plda-train: iteration %zu log-likelihood %.10g\n", i, r.loglik[i]);
    if (i > 0 && r.loglik[i] < r.loglik[i - 1] - 1e-8) monotone = false;
  }
  if (r.ridge_events > 0)
    std::cerr << "plda-train: " << r.ridge_events << " ridge regularizations\n";
  WritePldaModel(r.model, a.out);
  std::cout << "wrote model d_x=" << r.model.dim() << " d_y=" << r.model.latent_dim()
            << " to " << a.out << "\n";
  if (!monotone) {
    std::cerr << "plda-train: log-likelihood decreased\n";
    return 1;
  }
  return 0;
}

struct EvalArgs {
  Common common;
  std::string plda, enroll, test, pool, out;
  std::size_t enroll_per_class = 0;
  ProtocolConfig protocol;
};

// Either explicit pools, or a single file whose first n instances of every
// class (in file order) enroll and the rest test.
void LoadPools(const EvalArgs &a, std::vector<Embedding> *enroll,
               std::vector<Embedding> *test, std::vector<std::string> *files) {
  if (!a.pool.empty()) {
    if (a.enroll_per_class == 0) LE_ERR << "--pool needs --enroll-per-class";
    std::map<std::size_t, std::size_t> seen;
    for (const Embedding &e : ReadEmbeddings(a.pool))
      (seen[e.label]++ < a.enroll_per_class ? enroll : test)->push_back(e);
    *files = {a.pool};
  } else {
    if (a.enroll.empty() || a.test.empty())
      LE_ERR << "give --enroll and --test, or --pool with --enroll-per-class";
    *enroll = ReadEmbeddings(a.enroll);
    *test = ReadEmbeddings(a.test);
    *files = {a.enroll, a.test};
  }
}

int EvalCmd(EvalArgs &a, bool matching) {
  a.protocol.seed = a.common.seed;
  const Plda plda(ReadPldaModel(a.plda));
  std::vector<Embedding> enroll, test;
  std::vector<std::string> files;
  LoadPools(a, &enroll, &test, &files);
  const TrialMetrics m = matching ? RunMatchingProtocol(plda, enroll, test, a.protocol)
                                  : RunIdentificationProtocol(plda, enroll, test, a.protocol);
  WriteFileAtomic(a.out, FormatMetrics(m, a.plda, files));
  for (const NcMetrics &n : m.per_nc) {
    std::cout << "nc=" << n.nc;
    if (n.top1) std::cout << " top1=" << *n.top1 << " top5=" << *n.top5;
    if (n.eer) std::cout << " eer=" << *n.eer;
    std::cout << " trials=" << n.trials << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct GradArgs {
  Common common;
  std::string what = "all";
  std::string backend = "both";
  double tolerance = 1e-4;
};

int GradCheckCmd(const GradArgs &a) {
  GradCheckOptions check;
  check.tolerance = a.tolerance;
  check.seed = a.common.seed;
  bool passed = true;
  std::printf("%-40s %8s %8s %12s %s\n", "group", "checked", "kinks", "max-rel-err", "result");
  auto row = [&](const std::string &name, const GroupReport &g) {
    std::printf("%-40s %8zu %8zu %12.3e %s\n", name.c_str(), g.checked, g.excluded,
                g.max_rel_error, g.passed ? "ok" : "FAIL");
    passed = passed && g.passed;
  };
  if (a.what == "ops" || a.what == "all")
    for (const OpCheck &op : CheckOperatorGradients(check, a.common.seed))
      for (const GroupReport &g : op.report.groups) row("op:" + op.op + "." + g.name, g);
  if (a.what == "network" || a.what == "all") {
    std::vector<std::pair<std::string, Backend>> backends;
    if (a.backend != "tcn") backends.push_back({"lstm", Backend::kLstm});
    if (a.backend != "lstm") backends.push_back({"tcn", Backend::kTemporalConv});
    for (const auto &[name, backend] : backends) {
      NetworkGradCheckOptions o;
      o.backend = backend;
      o.seed = a.common.seed;
      o.check = check;
      for (const GroupReport &g : CheckNetworkGradients(TinyConfig(), o).groups)
        row(name + ":" + g.name, g);
    }
  }
  std::printf("%s (tolerance %g)\n", passed ? "all groups passed" : "GRADIENT CHECK FAILED",
              a.tolerance);
  return passed ? 0 : 1;
}

int Main(int argc, char **argv) {
  CLI::App app(kUsage, "lipembed");
  std::pair<const Common *, std::function<int()>> selected;
  app.require_subcommand(1);
  app.fallthrough();

  CLI::App *gen = app.add_subcommand("gen-synth", "Generate synthetic data");
  gen->require_subcommand(1);

  VideoArgs va;
  CLI::App *videos = gen->add_subcommand("videos", "Toy word clips and a manifest");
  AddCommon(videos, &va.common);
  videos->add_option("--classes", va.spec.num_classes)->capture_default_str();
  videos->add_option("--per-class", va.spec.instances_per_class)->capture_default_str();
  videos->add_option("--frames", va.spec.frames)->capture_default_str();
  videos->add_option("--size", va.size, "Frame size HxW")->capture_default_str();
  videos->add_option("--min-word", va.spec.min_boundary, "Shortest word in frames")
      ->capture_default_str();
  videos->add_option("--max-word", va.spec.max_boundary, "Longest word in frames")
      ->capture_default_str();
  videos->add_option("--templates", va.spec.templates_per_class,
                     "Viseme templates per word")->capture_default_str();
  videos->add_option("--inventory", va.spec.inventory_size, "Shared template inventory")
      ->capture_default_str();
  videos->add_option("--noise", va.spec.instance_noise)->capture_default_str();
  videos->add_option("--context-noise", va.spec.context_noise)->capture_default_str();
  videos->add_option("--out", va.out, "Output directory")->required();
  videos->callback([&] { selected = {&va.common, [&] { return GenVideos(va); }}; });

  ModelArgs ma;
  CLI::App *model = gen->add_subcommand("model", "Random PLDA generator model");
  AddCommon(model, &ma.common);
  model->add_option("--dim", ma.dim, "Embedding dimension")->capture_default_str();
  model->add_option("--dy", ma.latent_dim, "Class subspace dimension")->capture_default_str();
  model->add_option("--between", ma.between, "Scale of V")->capture_default_str();
  model->add_option("--within", ma.within, "Scale of Sigma")->capture_default_str();
  model->add_option("--out", ma.out)->required();
  model->callback([&] { selected = {&ma.common, [&] { return GenModel(ma); }}; });

  EmbeddingArgs ea;
  CLI::App *emb = gen->add_subcommand("embeddings", "Embeddings sampled from a PLDA model");
  AddCommon(emb, &ea.common);
  emb->add_option("--plda", ea.plda, "Generator model file")->required();
  emb->add_option("--classes", ea.spec.num_classes)->capture_default_str();
  emb->add_option("--per-class", ea.spec.instances_per_class)->capture_default_str();
  emb->add_option("--first-label", ea.spec.first_label)->capture_default_str();
  emb->add_option("--out", ea.out)->required();
  emb->callback([&] { selected = {&ea.common, [&] { return GenEmbeddings(ea); }}; });

  SplitArgs sa;
  CLI::App *split = app.add_subcommand("split", "Class-stratified manifest splits");
  AddCommon(split, &sa.common);
  split->add_option("--manifest", sa.manifest)->required();
  split->add_option("--fractions", sa.fractions)->delimiter(',')->capture_default_str();
  split->add_option("--names", sa.names)->delimiter(',')->capture_default_str();
  split->add_option("--seen-classes", sa.seen_classes,
                    "Labels at or above this go whole to unseen.csv (0: no cut)")
      ->capture_default_str();
  split->add_option("--out", sa.out, "Output directory")->required();
  split->callback([&] { selected = {&sa.common, [&] { return Split(sa); }}; });

  TrainArgs ta;
  CLI::App *train = app.add_subcommand("train", "Train the embedding network");
  AddCommon(train, &ta.common);
  train->add_option("--train", ta.train, "Training manifest")->required();
  train->add_option("--val", ta.val, "Validation manifest")->required();
  train->add_option("--preset", ta.preset)
      ->check(CLI::IsMember({"toy", "tiny", "full"}))->capture_default_str();
  train->add_option("--classes", ta.classes, "Output classes (0: from the labels)");
  train->add_option("--embedding-size", ta.embedding_size, "0 keeps the preset");
  train->add_option("--pooling", ta.pooling)
      ->check(CLI::IsMember({"average", "last"}))->capture_default_str();
  train->add_flag("--no-word-boundaries", ta.no_word_boundaries);
  train->add_flag("--no-staging", ta.no_staging, "Train the full network directly");
  train->add_option("--stage1-epochs", ta.stage1_epochs)->capture_default_str();
  train->add_option("--stage2-epochs", ta.stage2_epochs)->capture_default_str();
  train->add_option("--batch-size", ta.batch_size)->capture_default_str();
  train->add_option("--lr", ta.learning_rate)->capture_default_str();
  train->add_option("--log", ta.log, "Per-epoch CSV log");
  train->add_option("--out", ta.out, "Checkpoint manifest")->required();
  train->callback([&] { selected = {&ta.common, [&] { return TrainCmd(ta); }}; });

  ExtractArgs xa;
  CLI::App *extract = app.add_subcommand("extract", "Embeddings of every clip");
  AddCommon(extract, &xa.common);
  extract->add_option("--checkpoint", xa.checkpoint)->required();
  extract->add_option("--manifest", xa.manifest)->required();
  extract->add_option("--batch-size", xa.batch_size)->capture_default_str();
  extract->add_option("--out", xa.out)->required();
  extract->callback([&] { selected = {&xa.common, [&] { return ExtractCmd(xa); }}; });

  PldaArgs pa;
  CLI::App *plda = app.add_subcommand("plda-train", "Fit PLDA by EM");
  AddCommon(plda, &pa.common);
  plda->add_option("--embeddings", pa.embeddings)->required();
  plda->add_option("--dy", pa.em.latent_dim)->capture_default_str();
  plda->add_option("--iters", pa.em.iterations)->capture_default_str();
  plda->add_option("--min-gain", pa.em.min_gain_per_instance,
                   "Stop below this gain per instance")->capture_default_str();
  plda->add_option("--classes-below", pa.classes_below,
                   "Only use labels below this (0: all)");
  plda->add_flag("--plain-em", pa.plain_em, "No latent rescaling step");
  plda->add_option("--out", pa.out)->required();
  plda->callback([&] { selected = {&pa.common, [&] { return PldaTrain(pa); }}; });

  EvalArgs ia, ma2;
  for (auto [name, args, matching] :
       {std::tuple{"eval-id", &ia, false}, std::tuple{"eval-match", &ma2, true}}) {
    CLI::App *sub = app.add_subcommand(
        name, matching ? "Word matching EER" : "Closed-set identification error");
    AddCommon(sub, &args->common);
    sub->add_option("--plda", args->plda)->required();
    sub->add_option("--enroll", args->enroll, "Enrollment embeddings");
    sub->add_option("--test", args->test, "Test embeddings");
    sub->add_option("--pool", args->pool, "One file split per class");
    sub->add_option("--enroll-per-class", args->enroll_per_class);
    sub->add_option("--nc", args->protocol.nc_values)->delimiter(',')->capture_default_str();
    sub->add_option("--repeats", args->protocol.repeats)->capture_default_str();
    sub->add_option("--out", args->out, "Metrics file")->required();
    sub->callback([&selected, args = args, matching = matching] {
      selected = {&args->common, [args, matching] { return EvalCmd(*args, matching); }};
    });
  }

  GradArgs ga;
  CLI::App *grad = app.add_subcommand("grad-check", "Finite-difference gradient checks");
  AddCommon(grad, &ga.common);
  grad->add_option("--what", ga.what)
      ->check(CLI::IsMember({"ops", "network", "all"}))->capture_default_str();
  grad->add_option("--backend", ga.backend)
      ->check(CLI::IsMember({"lstm", "tcn", "both"}))->capture_default_str();
  grad->add_option("--tol", ga.tolerance)->capture_default_str();
  grad->callback([&] { selected = {&ga.common, [&] { return GradCheckCmd(ga); }}; });

  try {
    std::vector<std::string> args = ExpandConfig(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }
  SetVerboseLevel(selected.first->verbose);
  return selected.second();
}

}  // namespace
}  // namespace lipembed

int main(int argc, char **argv) {
  try {
    return lipembed::Main(argc, argv);
  } catch (const lipembed::Error &e) {
    std::cerr << "lipembed: error: " << e.what() << "\n";
  } catch (const std::exception &e) {
    std::cerr << "lipembed: error: " << e.what() << "\n";
  }
  return 1;
}
