// synthgen/synthgen-test.cc

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
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "synthgen/dataset.h"
#include "synthgen/embeddings.h"
#include "synthgen/videos.h"

namespace lipembed {
namespace {

Eigen::MatrixXd PooledCov(const std::vector<Embedding> &v, Eigen::VectorXd *mean) {
  const Eigen::Index d = Eigen::Index(v[0].values.size());
  *mean = Eigen::VectorXd::Zero(d);
  for (const Embedding &e : v) *mean += Eigen::Map<const Eigen::VectorXd>(e.values.data(), d);
  *mean /= double(v.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (const Embedding &e : v) {
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(e.values.data(), d) - *mean;
    c += r * r.transpose();
  }
  return c / double(v.size() - 1);
}

TEST_CASE("standard normal embeddings") {
  PldaModel m;
  m.mu = Eigen::VectorXd::Zero(3);
  m.V = Eigen::MatrixXd::Zero(3, 1);
  m.Sigma = Eigen::MatrixXd::Identity(3, 3);
  EmbeddingSpec spec;
  spec.num_classes = 100;
  spec.instances_per_class = 100;
  const std::vector<Embedding> v = SamplePldaEmbeddings(m, spec);
  REQUIRE(v.size() == 10000);
  Eigen::VectorXd mean;
  const Eigen::MatrixXd c = PooledCov(v, &mean);
  const double n = 10000.0;
  for (int i = 0; i < 3; i++) {
    CHECK(std::abs(mean[i]) < 3.0 / std::sqrt(n));
    CHECK(std::abs(c(i, i) - 1.0) < 3.0 * std::sqrt(2.0 / n));
    for (int j = 0; j < i; j++) CHECK(std::abs(c(i, j)) < 3.0 / std::sqrt(n));
  }
}

TEST_CASE("sampled covariance approaches the model marginal") {
  const PldaModel m = RandomPldaModel(6, 3, 1.0, 1.0, 4);
  EmbeddingSpec spec;
  spec.num_classes = 20000;
  spec.instances_per_class = 1;
  Eigen::VectorXd mean;
  const Eigen::MatrixXd c = PooledCov(SamplePldaEmbeddings(m, spec), &mean);
  const Eigen::MatrixXd want = m.V * m.V.transpose() + m.Sigma;
  CHECK((c - want).norm() / want.norm() < 0.1);
  CHECK((mean - m.mu).norm() < 0.1 * std::sqrt(want.trace()));

  // Instances of one class share their latent, so within-class scatter
  // estimates Sigma.
  spec.num_classes = 400;
  spec.instances_per_class = 50;
  const std::vector<Embedding> v = SamplePldaEmbeddings(m, spec);
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(6, 6);
  for (std::size_t c0 = 0; c0 < 400; c0++) {
    std::vector<Embedding> cls(v.begin() + c0 * 50, v.begin() + (c0 + 1) * 50);
    Eigen::VectorXd cm;
    within += PooledCov(cls, &cm) / 400.0;
  }
  CHECK((within - m.Sigma).norm() / m.Sigma.norm() < 0.05);
}

TEST_CASE("embedding sampling is seeded") {
  const PldaModel m = RandomPldaModel(4, 2, 1.0, 1.0, 1);
  EmbeddingSpec spec;
  spec.num_classes = 5;
  spec.instances_per_class = 3;
  spec.first_label = 350;
  const std::vector<Embedding> a = SamplePldaEmbeddings(m, spec);
  const std::vector<Embedding> b = SamplePldaEmbeddings(m, spec);
  CHECK(FormatEmbeddings(a) == FormatEmbeddings(b));
  CHECK(a.front().label == 350);
  CHECK(a.back().label == 354);
  std::set<std::string> ids;
  for (const Embedding &e : a) ids.insert(e.id);
  CHECK(ids.size() == a.size());
  spec.seed = 18;
  CHECK(FormatEmbeddings(SamplePldaEmbeddings(m, spec)) != FormatEmbeddings(a));

  std::vector<Embedding> seen, unseen;
  spec.first_label = 0;
  PartitionByLabel(SamplePldaEmbeddings(m, spec), 3, &seen, &unseen);
  CHECK(seen.size() == 9);
  CHECK(unseen.size() == 6);
  for (const Embedding &e : unseen) CHECK(e.label >= 3);
  CHECK(RandomPldaModel(4, 2, 1.0, 1.0, 1).V == m.V);
}

double MaxDiff(const Array &a, const Array &b) { return MaxAbsDiff(a, b); }

std::vector<double> Frame(const Array &frames, std::size_t t) {
  const std::size_t n = frames.dim(1) * frames.dim(2);
  return std::vector<double>(frames.data() + t * n, frames.data() + (t + 1) * n);
}

double MaxDiff(const std::vector<double> &a, const std::vector<double> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); i++) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST_CASE("video clips") {
  VideoSpec spec;
  const std::vector<VideoClip> clips = GenerateVideos(spec);
  REQUIRE(clips.size() == 300);
  std::map<std::size_t, std::size_t> per_class;
  std::set<std::string> ids;
  for (const VideoClip &c : clips) {
    per_class[c.label]++;
    ids.insert(c.id);
    CHECK_NOTHROW(c.Validate());
    const std::size_t len = c.boundary_end - c.boundary_begin;
    CHECK(len >= 3);
    CHECK(len <= 6);
    CHECK(c.boundary_end <= 9);
    bool in_range = true, on_grid = true;
    for (double v : c.frames.values()) {
      in_range &= v >= 0.0 && v <= 1.0;
      on_grid &= double(float(v)) == v;
    }
    CHECK(in_range);
    CHECK(on_grid);
  }
  CHECK(ids.size() == 300);
  CHECK(per_class.size() == 10);
  for (const auto &[label, n] : per_class) CHECK(n == 30);

  SUBCASE("deterministic and independent of the instance count") {
    VideoSpec fewer = spec;
    fewer.instances_per_class = 4;
    const std::vector<VideoClip> small = GenerateVideos(fewer);
    for (std::size_t c = 0; c < 10; c++)
      for (std::size_t n = 0; n < 4; n++)
        CHECK(small[c * 4 + n].frames == clips[c * 30 + n].frames);
    VideoSpec other = spec;
    other.seed = 18;
    CHECK(GenerateVideos(other)[0].frames != clips[0].frames);
  }
}

TEST_CASE("noise-free whole-word clips repeat within a class") {
  VideoSpec spec;
  spec.min_boundary = spec.max_boundary = spec.frames;
  spec.instance_noise = 0.0;
  spec.instances_per_class = 4;
  const std::vector<VideoClip> clean = GenerateVideos(spec);
  for (std::size_t c = 0; c < 10; c++)
    for (std::size_t n = 1; n < 4; n++) {
      CHECK(clean[c * 4 + n].boundary_begin == 0);
      CHECK(clean[c * 4 + n].frames == clean[c * 4].frames);
    }
  for (std::size_t c = 1; c < 10; c++) CHECK(MaxDiff(clean[c * 4].frames, clean[0].frames) > 0.1);

  spec.instance_noise = 0.05;
  const std::vector<VideoClip> noisy = GenerateVideos(spec);
  for (std::size_t i = 0; i < noisy.size(); i++) {
    double mean_abs = 0.0;
    for (std::size_t k = 0; k < noisy[i].frames.size(); k++)
      mean_abs += std::abs(noisy[i].frames[k] - clean[i].frames[k]);
    mean_abs /= double(noisy[i].frames.size());
    CHECK(mean_abs < 0.05);
    CHECK(mean_abs > 0.0);
  }
}

TEST_CASE("context frames show other words") {
  VideoSpec whole;
  whole.min_boundary = whole.max_boundary = whole.frames;
  whole.instance_noise = 0.0;
  whole.instances_per_class = 1;
  const std::vector<VideoClip> words = GenerateVideos(whole);
  VideoSpec spec = whole;
  spec.min_boundary = 3;
  spec.max_boundary = 6;
  spec.instances_per_class = 20;
  std::size_t checked = 0;
  for (const VideoClip &c : GenerateVideos(spec)) {
    if (c.boundary_begin == 0) continue;
    // The first frame starts the word of some other class.
    bool other = false;
    for (const VideoClip &w : words)
      other |= w.label != c.label && Frame(c.frames, 0) == Frame(w.frames, 0);
    CHECK(other);
    checked++;
  }
  CHECK(checked > 50);

  SUBCASE("context noise stays outside the word") {
    VideoSpec loud = spec;
    loud.instance_noise = 0.0;
    loud.context_noise = 0.3;
    const std::vector<VideoClip> a = GenerateVideos(spec), b = GenerateVideos(loud);
    for (std::size_t i = 0; i < a.size(); i++) {
      for (std::size_t t = 0; t < 9; t++) {
        const bool inside = t >= a[i].boundary_begin && t < a[i].boundary_end;
        const double d = MaxDiff(Frame(a[i].frames, t), Frame(b[i].frames, t));
        if (inside) CHECK(d == 0.0);
        else CHECK(d > 0.0);
      }
    }
  }
}

TEST_CASE("video spec validation") {
  VideoSpec s;
  s.max_boundary = 10;
  CHECK_THROWS_WITH_AS(GenerateVideos(s), doctest::Contains("T=9"), Error);
  s = VideoSpec();
  s.num_classes = 0;
  CHECK_THROWS_AS(s.Validate(), Error);
  s = VideoSpec();
  s.num_classes = 200;
  s.inventory_size = 2;
  s.templates_per_class = 2;
  CHECK_THROWS_WITH_AS(GenerateVideos(s), doctest::Contains("distinct class"), Error);
}

TEST_CASE("clip encoding round trip") {
  VideoSpec spec;
  spec.instances_per_class = 1;
  spec.num_classes = 2;
  const VideoClip c = GenerateVideos(spec)[1];
  const std::string bytes = EncodeClip(c);
  CHECK(bytes.size() == 32 + 4 * 9 * 24 * 24);
  CHECK(bytes.compare(0, 4, "LPCL") == 0);
  const VideoClip back = DecodeClip(bytes, c.id);
  CHECK(back.frames == c.frames);
  CHECK(back.frames.shape() == c.frames.shape());
  CHECK(back.label == c.label);
  CHECK(back.boundary_begin == c.boundary_begin);
  CHECK(back.boundary_end == c.boundary_end);
  CHECK(EncodeClip(back) == bytes);

  CHECK_THROWS_AS(DecodeClip(bytes.substr(0, bytes.size() - 1), "x"), Error);
  CHECK_THROWS_WITH_AS(DecodeClip("JUNK" + bytes.substr(4), "x"),
                       doctest::Contains("not a clip"), Error);
  std::string v2 = bytes;
  v2[4] = 2;
  CHECK_THROWS_WITH_AS(DecodeClip(v2, "x"), doctest::Contains("version 2"), Error);

  const std::string path =
      (std::filesystem::temp_directory_path() / "lipembed-clip-test.lpcl").string();
  WriteClip(c, path);
  CHECK(ReadClip(path, c.id).frames == c.frames);
  std::filesystem::remove(path);
}

DatasetManifest Manifest(std::size_t classes, std::size_t per_class) {
  DatasetManifest m;
  m.spec_echo = "classes=" + std::to_string(classes);
  for (std::size_t c = 0; c < classes; c++)
    for (std::size_t i = 0; i < per_class; i++)
      m.records.push_back({"s" + std::to_string(c) + "-" + std::to_string(i),
                           "clips/" + std::to_string(c) + "-" + std::to_string(i) + ".lpcl",
                           c, "all"});
  return m;
}

TEST_CASE("manifest text round trip") {
  const DatasetManifest m = Manifest(3, 2);
  const std::string text = FormatManifest(m);
  CHECK(text.rfind("# classes=3\n", 0) == 0);
  CHECK(text.find("source-id,file,label,split\n") != std::string::npos);
  const DatasetManifest back = ParseManifest(text);
  CHECK(back.spec_echo == m.spec_echo);
  REQUIRE(back.records.size() == 6);
  CHECK(back.records[3].file == m.records[3].file);
  CHECK(back.records[3].label == 1);
  CHECK(FormatManifest(back) == text);

  DatasetManifest dup = m;
  dup.records[1].source_id = dup.records[0].source_id;
  CHECK_THROWS_WITH_AS(dup.Validate(), doctest::Contains("s0-0"), Error);
  CHECK_THROWS_AS(ParseManifest("bad,header\n"), Error);
  CHECK_THROWS_AS(ParseManifest("source-id,file,label,split\na,b,notanumber,c\n"), Error);
}

TEST_CASE("stratified splits") {
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < 4; c++)
    for (int i = 0; i < 10; i++) labels.push_back(c);

  const auto one = StratifiedSplit(labels, {1.0}, 17);
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == 40);
  for (std::size_t i = 0; i < 40; i++) CHECK(one[0][i] == i);

  const auto half = StratifiedSplit(labels, {0.5, 0.5}, 17);
  for (const auto &part : half) {
    std::map<std::size_t, int> count;
    for (std::size_t i : part) count[labels[i]]++;
    for (const auto &[label, n] : count) CHECK(n == 5);
    CHECK(std::is_sorted(part.begin(), part.end()));
  }

  const auto three = StratifiedSplit(labels, {0.7, 0.2, 0.1}, 3);
  std::vector<std::size_t> all;
  for (const auto &part : three) all.insert(all.end(), part.begin(), part.end());
  std::sort(all.begin(), all.end());
  CHECK(all.size() == 40);
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
  CHECK(three[0].size() == 28);
  CHECK(StratifiedSplit(labels, {0.7, 0.2, 0.1}, 3) == three);
  CHECK(StratifiedSplit(labels, {0.7, 0.2, 0.1}, 4) != three);

  CHECK_THROWS_AS(StratifiedSplit(labels, {0.5, 0.4}, 1), Error);
  CHECK_THROWS_WITH_AS(StratifiedSplit({0, 0, 1}, {0.5, 0.5}, 1),
                       doctest::Contains("class 1"), Error);

  const auto parts = SplitManifest(Manifest(4, 10), {0.8, 0.2}, {"train", "val"}, 17);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].records.size() == 32);
  CHECK(parts[1].records.size() == 8);
  for (const ManifestRecord &r : parts[1].records) CHECK(r.split == "val");
  CHECK(parts[1].spec_echo == "classes=4");
}

}  // namespace
}  // namespace lipembed
