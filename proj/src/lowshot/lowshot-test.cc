// lowshot/lowshot-test.cc

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
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "lowshot/lowshot.h"
#include "synthgen/embeddings.h"

namespace lipembed {
namespace {

// Direct threshold sweep: every candidate threshold is scored by counting
// over all trials.
double EerOracle(const TrialSet &t) {
  std::vector<double> thr = t.target;
  thr.insert(thr.end(), t.nontarget.begin(), t.nontarget.end());
  std::sort(thr.begin(), thr.end());
  thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
  thr.push_back(std::numeric_limits<double>::infinity());
  double pf = 0.0, pa = 0.0;
  for (std::size_t k = 0; k < thr.size(); k++) {
    double miss = 0.0, fa = 0.0;
    for (double s : t.target) miss += s < thr[k];
    for (double s : t.nontarget) fa += s >= thr[k];
    const double frr = miss / t.target.size(), far = fa / t.nontarget.size();
    if (frr >= far) {
      if (frr == far || k == 0) return frr;
      // Intersection of the segment (pf,pa)-(frr,far) with frr = far.
      const double a = (pa - pf) / ((pa - pf) - (far - frr));
      return pf + a * (frr - pf);
    }
    pf = frr;
    pa = far;
  }
  return 1.0;
}

TrialSet RandomTrials(std::size_t n, uint64 seed, bool integer) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  TrialSet t;
  for (std::size_t i = 0; i < n; i++) {
    double a = normal(rng) + 1.0, b = normal(rng);
    if (integer) {
      a = std::round(2 * a);
      b = std::round(2 * b);
    }
    t.target.push_back(a);
    t.nontarget.push_back(b);
  }
  return t;
}

TEST_CASE("equal error rate examples") {
  CHECK(Eer({{1, 2, 3}, {-3, -2, -1}}) == 0.0);
  CHECK(Eer({{1, 2, 3}, {1, 2, 3}}) == 0.5);
  CHECK(Eer({{0, 0, 0}, {0, 0}}) == 0.5);
  CHECK(Eer({{-1}, {1}}) == 1.0);
  CHECK_THROWS_AS(Eer({{}, {1}}), Error);
  CHECK_THROWS_AS(Eer({{std::nan("")}, {1}}), Error);
}

TEST_CASE("equal error rate matches the exhaustive sweep") {
  for (uint64 seed = 1; seed <= 20; seed++) {
    for (bool integer : {false, true}) {
      const TrialSet t = RandomTrials(100, seed, integer);
      CHECK(std::abs(Eer(t) - EerOracle(t)) < 1e-12);
    }
  }
  TrialSet uneven = RandomTrials(100, 99, false);
  uneven.target.resize(37);
  CHECK(std::abs(Eer(uneven) - EerOracle(uneven)) < 1e-12);
}

TEST_CASE("equal error rate invariances") {
  for (uint64 seed = 1; seed <= 10; seed++) {
    const TrialSet t = RandomTrials(60, seed, seed % 2 == 0);
    TrialSet mapped = t;
    for (auto *v : {&mapped.target, &mapped.nontarget})
      for (double &s : *v) s = std::atan(s) * 3.0 + 7.0;
    CHECK(Eer(mapped) == Eer(t));
    TrialSet swapped;
    for (double s : t.nontarget) swapped.target.push_back(-s);
    for (double s : t.target) swapped.nontarget.push_back(-s);
    CHECK(std::abs(Eer(swapped) - Eer(t)) < 1e-12);
  }
}

TEST_CASE("ranking and top-k error") {
  CHECK(RankLabels({1.0, 3.0, 3.0, 2.0}, {4, 9, 2, 0}) ==
        std::vector<std::size_t>{2, 9, 0, 4});
  CHECK(TopKError({{1, 0, 2}, {0, 1, 2}}, {1, 0}, 1) == 0.0);
  CHECK(TopKError({{1, 0, 2}, {0, 1, 2}}, {2, 0}, 1) == 0.5);
  CHECK(TopKError({{1, 0, 2}, {0, 1, 2}}, {2, 2}, 3) == 0.0);
  CHECK(TopKError({{1, 0, 2}, {0, 1, 2}}, {2, 2}, 7) == 0.0);
  CHECK_THROWS_AS(TopKError({{1, 0}}, {1}, 0), Error);

  std::mt19937_64 rng(17);
  std::vector<std::vector<std::size_t>> rankings;
  std::vector<std::size_t> truth;
  std::uniform_int_distribution<std::size_t> pick(0, 9);
  for (int i = 0; i < 10000; i++) {
    std::vector<std::size_t> r(10);
    std::iota(r.begin(), r.end(), 0);
    std::shuffle(r.begin(), r.end(), rng);
    rankings.push_back(r);
    truth.push_back(pick(rng));
  }
  CHECK(std::abs(TopKError(rankings, truth, 1) - 0.9) < 0.01);
  double prev = 1.0;
  for (std::size_t k = 1; k <= 10; k++) {
    const double e = TopKError(rankings, truth, k);
    CHECK(e <= prev);
    CHECK(std::abs(e - (1.0 - k / 10.0)) < 0.02);
    prev = e;
  }
  CHECK(prev == 0.0);
}

PldaModel Model2d() {
  PldaModel m;
  m.mu = Eigen::Vector2d(0.5, -0.2);
  m.V = Eigen::MatrixXd(2, 1);
  m.V << 2.0, 1.0;
  m.Sigma = Eigen::MatrixXd(2, 2);
  m.Sigma << 0.5, 0.1, 0.1, 0.3;
  return m;
}

double LogNormal2(const Eigen::Vector2d &x, const Eigen::Vector2d &mean,
                  const Eigen::Matrix2d &cov) {
  const Eigen::Vector2d r = x - mean;
  return -std::log(2 * std::numbers::pi) - 0.5 * std::log(cov.determinant()) -
         0.5 * r.dot(cov.inverse() * r);
}

TEST_CASE("identification ranks classes by conditional density") {
  const PldaModel m = Model2d();
  const Plda p(m);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<ClassEnrollment> enrollments;
  std::vector<Eigen::MatrixXd> raw;
  for (std::size_t c = 0; c < 5; c++) {
    Eigen::MatrixXd x(1 + c, 2);
    for (Eigen::Index i = 0; i < x.size(); i++) x.data()[i] = 2.0 * normal(rng);
    raw.push_back(x);
    enrollments.push_back(p.Enroll(10 + c, x));
  }
  for (int trial = 0; trial < 50; trial++) {
    const Eigen::Vector2d x(2.0 * normal(rng), 2.0 * normal(rng));
    // Rescore from scratch: scalar posterior of y, then the 2-d predictive.
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t c = 0; c < 5; c++) {
      const Eigen::Vector2d v = m.V.col(0);
      const Eigen::Matrix2d si = m.Sigma.inverse();
      const double n = double(raw[c].rows());
      const double cov = 1.0 / (1.0 + n * v.dot(si * v));
      Eigen::Vector2d sum = Eigen::Vector2d::Zero();
      for (Eigen::Index i = 0; i < raw[c].rows(); i++)
        sum += raw[c].row(i).transpose() - m.mu;
      const double mean = cov * v.dot(si * sum);
      scored.push_back({LogNormal2(x, m.mu + v * mean,
                                   m.Sigma + cov * v * v.transpose()), 10 + c});
    }
    std::sort(scored.begin(), scored.end(), [](auto &a, auto &b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const std::vector<std::size_t> ranks = Identify(p, enrollments, x);
    for (std::size_t c = 0; c < 5; c++) CHECK(ranks[c] == scored[c].second);
  }
  // A predictive mean ranks its own class first.
  for (std::size_t c = 0; c < 5; c++)
    if (raw[c].rows() >= 3)
      CHECK(Identify(p, enrollments, p.PredictiveMean(enrollments[c]))[0] == 10 + c);
  // Identical enrollments tie and go by label.
  const ClassEnrollment a = p.Enroll(7, raw[0]), b = p.Enroll(3, raw[0]);
  CHECK(Identify(p, {a, b}, Eigen::Vector2d(0.1, 0.2)) == std::vector<std::size_t>{3, 7});
  CHECK_THROWS_AS(Identify(p, {a}, Eigen::Vector2d(0.1, 0.2)), Error);
}

std::vector<Embedding> Relabel(std::vector<Embedding> v, const std::string &prefix) {
  for (Embedding &e : v) e.id = prefix + e.id;
  return v;
}

struct Pools {
  std::vector<Embedding> enroll, test;
};

Pools SamplePools(const PldaModel &m, std::size_t classes, std::size_t enroll,
                  std::size_t test, uint64 seed) {
  EmbeddingSpec spec;
  spec.num_classes = classes;
  spec.instances_per_class = enroll + test;
  spec.first_label = 100;
  spec.seed = seed;
  std::vector<Embedding> all = SamplePldaEmbeddings(m, spec);
  Pools p;
  std::map<std::size_t, std::size_t> seen;
  for (Embedding &e : all) (seen[e.label]++ < enroll ? p.enroll : p.test).push_back(e);
  return p;
}

TEST_CASE("full-pool enrollment matches per-trial scoring") {
  const PldaModel m = RandomPldaModel(6, 3, 1.0, 1.0, 3);
  const Plda p(m);
  const Pools pools = SamplePools(m, 12, 5, 7, 3);
  ProtocolConfig cfg;
  cfg.nc_values = {5};
  cfg.repeats = 2;
  const TrialMetrics id = RunIdentificationProtocol(p, pools.enroll, pools.test, cfg);

  std::vector<ClassEnrollment> enrollments;
  TrialSet trials;
  for (std::size_t c = 100; c < 112; c++) {
    std::vector<Eigen::VectorXd> rows;
    for (const Embedding &e : pools.enroll)
      if (e.label == c) rows.push_back(Eigen::Map<const Eigen::VectorXd>(e.values.data(), 6));
    Eigen::MatrixXd x(rows.size(), 6);
    for (std::size_t i = 0; i < rows.size(); i++) x.row(i) = rows[i].transpose();
    enrollments.push_back(p.Enroll(c, x));
  }
  std::vector<std::vector<std::size_t>> rankings;
  std::vector<std::size_t> truth;
  for (const Embedding &e : pools.test) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(e.values.data(), 6);
    rankings.push_back(Identify(p, enrollments, x));
    truth.push_back(e.label);
    for (const ClassEnrollment &en : enrollments)
      (en.label == e.label ? trials.target : trials.nontarget).push_back(p.Llr(en, x));
  }
  REQUIRE(id.per_nc.size() == 1);
  CHECK(id.protocol == "identification");
  CHECK(*id.per_nc[0].top1 == doctest::Approx(TopKError(rankings, truth, 1)).epsilon(1e-12));
  CHECK(*id.per_nc[0].top5 == doctest::Approx(TopKError(rankings, truth, 5)).epsilon(1e-12));
  CHECK_FALSE(id.per_nc[0].eer.has_value());
  CHECK(id.per_nc[0].trials == pools.test.size());

  const TrialMetrics match = RunMatchingProtocol(p, pools.enroll, pools.test, cfg);
  CHECK(match.protocol == "matching");
  CHECK(std::abs(*match.per_nc[0].eer - Eer(trials)) < 1e-9);
  CHECK(match.per_nc[0].trials == trials.target.size() + trials.nontarget.size());
  CHECK(match.per_nc[0].target_trials == trials.target.size());
  CHECK_FALSE(match.per_nc[0].top1.has_value());
}

TEST_CASE("matching trials of a tiny instance") {
  const PldaModel m = Model2d();
  const Plda p(m);
  const Pools pools = SamplePools(m, 2, 4, 2, 11);
  REQUIRE(pools.enroll.size() == 8);
  REQUIRE(pools.test.size() == 4);
  auto vec = [](const Embedding &e) {
    return Eigen::Map<const Eigen::VectorXd>(e.values.data(), 2).eval();
  };
  // Every pairing of the four instances of one class into two models.
  const std::vector<std::vector<std::vector<int>>> pairings = {
      {{0, 1}, {2, 3}}, {{0, 2}, {1, 3}}, {{0, 3}, {1, 2}}};
  auto trials_for = [&](const std::vector<std::vector<std::vector<int>>> &groups) {
    TrialSet t;
    for (std::size_t c = 0; c < 2; c++)
      for (const auto &g : groups[c]) {
        Eigen::MatrixXd x(g.size(), 2);
        for (std::size_t i = 0; i < g.size(); i++)
          x.row(i) = vec(pools.enroll[4 * c + g[i]]).transpose();
        const ClassEnrollment en = p.Enroll(100 + c, x);
        for (const Embedding &e : pools.test)
          (e.label == 100 + c ? t.target : t.nontarget).push_back(p.Llr(en, vec(e)));
      }
    std::sort(t.target.begin(), t.target.end());
    std::sort(t.nontarget.begin(), t.nontarget.end());
    return t;
  };
  auto same = [](std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); i++)
      if (std::abs(a[i] - b[i]) > 1e-10) return false;
    return true;
  };
  for (uint64 seed : {1, 2, 3, 4, 5}) {
    const TrialSet whole = MatchingTrials(p, pools.enroll, pools.test, 4, seed);
    const TrialSet oracle = trials_for({{{0, 1, 2, 3}}, {{0, 1, 2, 3}}});
    CHECK(same(whole.target, oracle.target));
    CHECK(same(whole.nontarget, oracle.nontarget));
    CHECK(whole.target.size() == 4);
    CHECK(whole.nontarget.size() == 4);

    const TrialSet halves = MatchingTrials(p, pools.enroll, pools.test, 2, seed);
    int matches = 0;
    for (const auto &a : pairings)
      for (const auto &b : pairings) {
        const TrialSet o = trials_for({a, b});
        if (same(halves.target, o.target) && same(halves.nontarget, o.nontarget)) {
          matches++;
          CHECK(std::abs(Eer(halves) - Eer(o)) < 1e-12);
        }
      }
    CHECK(matches == 1);
  }
}

TEST_CASE("protocol edge cases") {
  const PldaModel m = RandomPldaModel(4, 2, 1.0, 1.0, 2);
  const Pools pools = SamplePools(m, 6, 16, 6, 2);
  ProtocolConfig cfg;
  cfg.repeats = 3;

  SUBCASE("determinism") {
    const Plda p(m);
    const std::string a = FormatMetrics(RunMatchingProtocol(p, pools.enroll, pools.test, cfg),
                                        "m.json", {"e.csv", "t.csv"});
    const std::string b = FormatMetrics(RunMatchingProtocol(p, pools.enroll, pools.test, cfg),
                                        "m.json", {"e.csv", "t.csv"});
    CHECK(a == b);
    ProtocolConfig other = cfg;
    other.seed = 18;
    CHECK(FormatMetrics(RunMatchingProtocol(p, pools.enroll, pools.test, other), "m.json",
                        {"e.csv", "t.csv"}) != a);
  }
  SUBCASE("no class subspace gives chance matching") {
    PldaModel flat = m;
    flat.V.setZero();
    const TrialMetrics r = RunMatchingProtocol(Plda(flat), pools.enroll, pools.test, cfg);
    for (const NcMetrics &n : r.per_nc) CHECK(*n.eer == 0.5);
  }
  SUBCASE("no within-class variance gives perfect identification") {
    PldaModel sharp = m;
    sharp.Sigma = 1e-6 * Eigen::MatrixXd::Identity(4, 4);
    std::vector<Embedding> enroll = pools.enroll, test = pools.test;
    std::map<std::size_t, std::vector<double>> centre;
    for (const Embedding &e : pools.enroll) centre.emplace(e.label, e.values);
    for (auto *v : {&enroll, &test})
      for (Embedding &e : *v) e.values = centre[e.label];
    const TrialMetrics r = RunIdentificationProtocol(Plda(sharp), enroll, test, cfg);
    for (const NcMetrics &n : r.per_nc) {
      CHECK(*n.top1 == 0.0);
      CHECK(*n.top5 == 0.0);
    }
  }
  SUBCASE("nc larger than a class pool") {
    std::vector<Embedding> enroll = pools.enroll;
    enroll.erase(std::find_if(enroll.begin(), enroll.end(),
                              [](const Embedding &e) { return e.label == 103; }));
    CHECK_THROWS_WITH_AS(RunIdentificationProtocol(Plda(m), enroll, pools.test, cfg),
                         doctest::Contains("class 103 has 15"), Error);
  }
  SUBCASE("single class") {
    std::vector<Embedding> enroll, test;
    for (const Embedding &e : pools.enroll)
      if (e.label == 100) enroll.push_back(e);
    for (const Embedding &e : pools.test)
      if (e.label == 100) test.push_back(e);
    CHECK_THROWS_WITH_AS(RunMatchingProtocol(Plda(m), enroll, test, cfg),
                         doctest::Contains("at least 2 classes"), Error);
  }
  SUBCASE("mismatched dimensions") {
    const PldaModel wide = RandomPldaModel(5, 2, 1.0, 1.0, 2);
    CHECK_THROWS_WITH_AS(RunMatchingProtocol(Plda(wide), pools.enroll, pools.test, cfg),
                         doctest::Contains("dimension 4 but the PLDA model has 5"), Error);
  }
  SUBCASE("unknown test label") {
    std::vector<Embedding> test = pools.test;
    test[0].label = 999;
    CHECK_THROWS_WITH_AS(RunIdentificationProtocol(Plda(m), pools.enroll, test, cfg),
                         doctest::Contains("label 999"), Error);
  }
  SUBCASE("bad configuration") {
    ProtocolConfig bad = cfg;
    bad.repeats = 0;
    CHECK_THROWS_AS(bad.Validate(), Error);
    bad = cfg;
    bad.nc_values = {1, 0};
    CHECK_THROWS_AS(bad.Validate(), Error);
  }
}

TEST_CASE("metrics document") {
  const PldaModel m = RandomPldaModel(4, 2, 1.0, 1.0, 4);
  const Pools pools = SamplePools(m, 5, 4, 3, 4);
  ProtocolConfig cfg;
  cfg.nc_values = {1, 2};
  cfg.repeats = 2;
  const TrialMetrics r = RunIdentificationProtocol(Plda(m), pools.enroll, pools.test, cfg);
  const nlohmann::json j =
      nlohmann::json::parse(FormatMetrics(r, "model.json", {"enroll.csv", "test.csv"}));
  CHECK(j["protocol"] == "identification");
  CHECK(j["seed"] == 17);
  CHECK(j["model_file"] == "model.json");
  CHECK(j["pool_files"].size() == 2);
  CHECK(j["nc"]["2"]["eer"].is_null());
  CHECK(j["nc"]["1"]["repeats"].size() == 2);
  CHECK(j["nc"]["1"]["n_trials"] == 15);
  for (const NcMetrics &n : r.per_nc) {
    CHECK(*n.top5 <= *n.top1);
    CHECK(*n.top1 >= 0.0);
    CHECK(*n.top1 <= 1.0);
  }
}

TEST_CASE("more enrollment data helps on a small synthetic sweep") {
  const PldaModel m = RandomPldaModel(16, 6, 0.6, 1.0, 8);
  const Plda p(m);
  const Pools pools = SamplePools(m, 40, 16, 20, 8);
  ProtocolConfig cfg;
  cfg.repeats = 4;
  const TrialMetrics id = RunIdentificationProtocol(p, pools.enroll, pools.test, cfg);
  const TrialMetrics match = RunMatchingProtocol(p, pools.enroll, pools.test, cfg);
  for (std::size_t i = 1; i < cfg.nc_values.size(); i++) {
    CHECK(*id.per_nc[i].top1 <= *id.per_nc[i - 1].top1 + 0.01);
    CHECK(*match.per_nc[i].eer <= *match.per_nc[i - 1].eer + 0.005);
  }
  CHECK(*id.per_nc.back().top1 < *id.per_nc.front().top1);
  CHECK(*match.per_nc.back().eer < *match.per_nc.front().eer);
}

}  // namespace
}  // namespace lipembed
