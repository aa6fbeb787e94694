// tests/cli-test.cc

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

// Runs the lipembed binary end to end and checks its file contracts.

#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include <json.hpp>

#include "base/embedding.h"
#include "base/io.h"
#include "doctest.h"
#include "lipnet/network.h"
#include "plda/plda.h"
#include "synthgen/dataset.h"

namespace fs = std::filesystem;

namespace lipembed {
namespace {

// A scratch directory that lives as long as the test case.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("lipembed-cli-" + std::to_string(getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string &name) const { return (dir / name).string(); }
};

struct RunResult {
  int status = -1;
  std::string out, err;
};

RunResult Run(const Scratch &s, const std::string &args) {
  const std::string out = s / ".stdout", err = s / ".stderr";
  const std::string cmd = "cd '" + s.dir.string() + "' && '" LIPEMBED_CLI "' " + args + " > '" +
                          out + "' 2> '" + err + "'";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.status = rc == -1 ? -1 : WEXITSTATUS(rc);
  r.out = ReadFile(out);
  r.err = ReadFile(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

void MustRun(const Scratch &s, const std::string &args) {
  const RunResult r = Run(s, args);
  INFO("lipembed " << args << "\n" << r.err);
  REQUIRE(r.status == 0);
}

std::map<std::string, std::string> Snapshot(const fs::path &dir) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      files[fs::relative(e.path(), dir).string()] = ReadFile(e.path().string());
  return files;
}

TEST_CASE("gen-synth videos writes one clip per instance and reruns identically") {
  Scratch s;
  MustRun(s, "gen-synth videos --classes 10 --per-class 30 --out a");
  MustRun(s, "gen-synth videos --classes 10 --per-class 30 --out b");
  MustRun(s, "gen-synth videos --classes 10 --per-class 30 --seed 18 --out c");
  const DatasetManifest m = ReadManifest(s / "a/manifest.csv");
  CHECK(m.records.size() == 300);
  std::map<std::size_t, int> per_class;
  for (const ManifestRecord &r : m.records) {
    per_class[r.label]++;
    CHECK(fs::exists(fs::path(s / "a") / r.file));
  }
  CHECK(per_class.size() == 10);
  for (const auto &[label, n] : per_class) CHECK(n == 30);
  std::size_t clips = 0;
  for (const auto &e : fs::directory_iterator(fs::path(s / "a") / "clips"))
    clips += e.path().extension() == ".lpcl";
  CHECK(clips == 300);
  CHECK(Snapshot(s.dir / "a") == Snapshot(s.dir / "b"));
  CHECK(Snapshot(s.dir / "a") != Snapshot(s.dir / "c"));
}

TEST_CASE("gen-synth embeddings row count and determinism") {
  Scratch s;
  MustRun(s, "gen-synth model --dim 12 --dy 3 --out gen.json");
  const PldaModel gen = ReadPldaModel(s / "gen.json");
  CHECK(gen.dim() == 12);
  CHECK(gen.latent_dim() == 3);
  MustRun(s, "gen-synth embeddings --plda gen.json --classes 150 --per-class 100 "
             "--first-label 40 --out a.csv");
  MustRun(s, "gen-synth embeddings --plda gen.json --classes 150 --per-class 100 "
             "--first-label 40 --out b.csv");
  const std::vector<Embedding> e = ReadEmbeddings(s / "a.csv");
  CHECK(e.size() == 15000);
  std::set<std::size_t> labels;
  std::set<std::string> ids;
  for (const Embedding &x : e) {
    labels.insert(x.label);
    ids.insert(x.id);
    CHECK(x.values.size() == 12);
  }
  CHECK(labels.size() == 150);
  CHECK(*labels.begin() == 40);
  CHECK(*labels.rbegin() == 189);
  CHECK(ids.size() == 15000);
  CHECK(ReadFile(s / "a.csv") == ReadFile(s / "b.csv"));
}

TEST_CASE("split keeps classes apart and deals seen clips by fraction") {
  Scratch s;
  MustRun(s, "gen-synth videos --classes 10 --per-class 30 --out data");
  MustRun(s, "split --manifest data/manifest.csv --seen-classes 7 --fractions 0.8,0.2 "
             "--names train,val --out data");
  const DatasetManifest train = ReadManifest(s / "data/train.csv");
  const DatasetManifest val = ReadManifest(s / "data/val.csv");
  const DatasetManifest unseen = ReadManifest(s / "data/unseen.csv");
  CHECK(train.records.size() == 168);
  CHECK(val.records.size() == 42);
  CHECK(unseen.records.size() == 90);
  std::set<std::string> ids;
  for (const auto *m : {&train, &val, &unseen})
    for (const ManifestRecord &r : m->records) {
      ids.insert(r.source_id);
      CHECK((m == &unseen) == (r.label >= 7));
      CHECK(fs::exists(fs::path(s / "data") / r.file));
    }
  CHECK(ids.size() == 300);
}

TEST_CASE("plda-train reports a non-decreasing log-likelihood trace") {
  Scratch s;
  MustRun(s, "gen-synth model --dim 6 --dy 2 --out gen.json");
  MustRun(s, "gen-synth embeddings --plda gen.json --classes 40 --per-class 10 --out e.csv");
  const RunResult r = Run(s, "plda-train --embeddings e.csv --dy 2 --iters 15 --min-gain 0 "
                             "--plain-em --out fit.json");
  REQUIRE(r.status == 0);
  const std::regex line(R"(iteration (\d+) log-likelihood (\S+))");
  std::vector<double> trace;
  for (std::sregex_iterator it(r.err.begin(), r.err.end(), line), end; it != end; ++it) {
    CHECK(std::stoul((*it)[1]) == trace.size());
    trace.push_back(std::stod((*it)[2]));
  }
  CHECK(trace.size() == 16);
  for (std::size_t i = 1; i < trace.size(); i++) CHECK(trace[i] >= trace[i - 1]);
  const PldaModel fit = ReadPldaModel(s / "fit.json");
  CHECK(fit.dim() == 6);
  CHECK(fit.latent_dim() == 2);
}

TEST_CASE("evaluation commands report every requested enrollment size") {
  Scratch s;
  MustRun(s, "gen-synth model --dim 8 --dy 2 --out gen.json");
  MustRun(s, "gen-synth embeddings --plda gen.json --classes 20 --per-class 40 --out e.csv");
  MustRun(s, "eval-id --plda gen.json --pool e.csv --enroll-per-class 20 --repeats 3 "
             "--out id.json");
  const nlohmann::json id = nlohmann::json::parse(ReadFile(s / "id.json"));
  CHECK(id["protocol"] == "identification");
  CHECK(id["nc"].size() == 5);
  for (const char *nc : {"1", "2", "4", "8", "16"}) {
    REQUIRE(id["nc"].contains(nc));
    CHECK(id["nc"][nc]["top1"].is_number());
    CHECK(id["nc"][nc]["eer"].is_null());
    CHECK(id["nc"][nc]["repeats"].size() == 3);
  }

  // Without a between-class subspace every trial scores the same.
  PldaModel flat = ReadPldaModel(s / "gen.json");
  flat.V.setZero();
  WritePldaModel(flat, s / "flat.json");
  MustRun(s, "eval-match --plda flat.json --pool e.csv --enroll-per-class 20 --nc 1,4 "
             "--repeats 2 --out m.json");
  const nlohmann::json m = nlohmann::json::parse(ReadFile(s / "m.json"));
  CHECK(m["protocol"] == "matching");
  for (const char *nc : {"1", "4"}) CHECK(m["nc"][nc]["eer"].get<double>() == doctest::Approx(0.5));
}

TEST_CASE("grad-check lists each group once and fails at an impossible tolerance") {
  Scratch s;
  const RunResult ok = Run(s, "grad-check --what all --backend both");
  CHECK(ok.status == 0);
  std::map<std::string, int> seen;
  std::istringstream lines(ok.out);
  std::string row;
  while (std::getline(lines, row)) {
    std::istringstream cols(row);
    std::string group, result;
    std::size_t checked = 0, kinks = 0;
    double err = 0.0;
    if (cols >> group >> checked >> kinks >> err >> result) {
      seen[group]++;
      CHECK(result == "ok");
      CHECK(err < 1e-4);
    }
  }
  for (const auto &[group, n] : seen) CHECK_MESSAGE(n == 1, group);
  for (Backend b : {Backend::kLstm, Backend::kTemporalConv}) {
    Network net(TinyConfig(), 17);
    if (b == Backend::kTemporalConv) net.AttachTemporalConvBackend(18);
    const std::string prefix = b == Backend::kLstm ? "lstm:" : "tcn:";
    for (const std::string &name : net.TrainableNames(b)) CHECK_MESSAGE(seen.count(prefix + name), name);
  }
  CHECK(seen.count("op:conv3d.arg0") == 1);

  const RunResult strict = Run(s, "grad-check --what ops --tol 1e-12");
  CHECK(strict.status != 0);
  CHECK(strict.out.find("FAIL") != std::string::npos);
}

TEST_CASE("input errors exit nonzero with a message") {
  Scratch s;
  MustRun(s, "gen-synth model --dim 5 --dy 2 --out five.json");
  MustRun(s, "gen-synth model --dim 4 --dy 2 --out four.json");
  MustRun(s, "gen-synth embeddings --plda four.json --classes 5 --per-class 6 --out e.csv");
  const RunResult r = Run(s, "eval-id --plda five.json --pool e.csv --enroll-per-class 3 "
                             "--nc 1 --out id.json");
  CHECK(r.status != 0);
  CHECK(r.err.find("dimension 4 but the PLDA model has 5") != std::string::npos);
  CHECK_FALSE(fs::exists(s / "id.json"));

  CHECK(Run(s, "plda-train --out x.json").status != 0);
  CHECK(Run(s, "extract --checkpoint missing.json --manifest none.csv --out x.csv").status != 0);
  CHECK(Run(s, "no-such-command").status != 0);
}

TEST_CASE("config file supplies defaults and flags override it") {
  Scratch s;
  std::ofstream(s / "gen.cfg") << "# small set\nclasses = 3\nper-class=2\n";
  MustRun(s, "gen-synth videos --config gen.cfg --out a");
  CHECK(ReadManifest(s / "a/manifest.csv").records.size() == 6);
  MustRun(s, "gen-synth videos --config gen.cfg --per-class 5 --out b");
  CHECK(ReadManifest(s / "b/manifest.csv").records.size() == 15);
  std::ofstream(s / "bad.cfg") << "classes 3\n";
  const RunResult r = Run(s, "gen-synth videos --config bad.cfg --out c");
  CHECK(r.status != 0);
  CHECK(r.err.find("expected key=value") != std::string::npos);
}

TEST_CASE("train and extract reproduce byte-identical artifacts") {
  Scratch s;
  MustRun(s, "gen-synth videos --classes 4 --per-class 6 --out data");
  MustRun(s, "split --manifest data/manifest.csv --seen-classes 3 --fractions 0.5,0.5 "
             "--names train,val --out data");
  for (const char *tag : {"a", "b"}) {
    const std::string t(tag);
    MustRun(s, "train --train data/train.csv --val data/val.csv --stage1-epochs 1 "
               "--stage2-epochs 1 --log " + t + "-log.csv --out " + t + "/net.json");
    MustRun(s, "extract --checkpoint " + t + "/net.json --manifest data/unseen.csv --out " +
                   t + "-emb.csv");
  }
  CHECK(Snapshot(s.dir / "a") == Snapshot(s.dir / "b"));
  CHECK(ReadFile(s / "a-log.csv") == ReadFile(s / "b-log.csv"));
  const std::string emb = ReadFile(s / "a-emb.csv");
  CHECK(emb == ReadFile(s / "b-emb.csv"));
  CHECK(ReadEmbeddings(s / "a-emb.csv").size() == 6);
}

}  // namespace
}  // namespace lipembed
