// lowshot/lowshot.cc

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

#include "lowshot/lowshot.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "json.hpp"

namespace lipembed {

namespace {

struct Pool {
  std::vector<std::size_t> labels;                 // sorted, distinct
  std::vector<std::vector<std::size_t>> members;   // indices per label
};

Pool MakePool(const std::vector<Embedding> &set) {
  Pool p;
  for (const auto &[label, idx] : GroupByLabel(set)) {
    p.labels.push_back(label);
    p.members.push_back(idx);
  }
  return p;
}

Eigen::MatrixXd Columns(const std::vector<Embedding> &set) {
  const std::size_t d = set.empty() ? 0 : set[0].values.size();
  Eigen::MatrixXd m(d, set.size());
  for (std::size_t i = 0; i < set.size(); i++)
    m.col(i) = Eigen::Map<const Eigen::VectorXd>(set[i].values.data(), d);
  return m;
}

std::mt19937_64 RepeatRng(uint64 seed, std::size_t nc, std::size_t repeat) {
  std::seed_seq seq{uint32(seed), uint32(seed >> 32), uint32(nc), uint32(repeat)};
  return std::mt19937_64(seq);
}

void CheckPools(const Plda &plda, const std::vector<Embedding> &enroll_pool,
                const std::vector<Embedding> &test_pool, const Pool &enroll,
                const ProtocolConfig &cfg) {
  cfg.Validate();
  for (const auto *set : {&enroll_pool, &test_pool}) {
    const std::size_t d = CheckEmbeddings(*set);
    if (d != plda.dim())
      LE_ERR << "embeddings have dimension " << d << " but the PLDA model has "
             << plda.dim();
  }
  if (enroll.labels.size() < 2)
    LE_ERR << "protocol needs at least 2 classes, enrollment pool has "
           << enroll.labels.size();
  for (const Embedding &e : test_pool)
    if (!std::binary_search(enroll.labels.begin(), enroll.labels.end(), e.label))
      LE_ERR << "test embedding " << e.id << " has label " << e.label
             << " with no enrollment data";
  const std::size_t max_nc = *std::max_element(cfg.nc_values.begin(), cfg.nc_values.end());
  for (std::size_t c = 0; c < enroll.labels.size(); c++)
    if (enroll.members[c].size() < max_nc)
      LE_ERR << "class " << enroll.labels[c] << " has "
             << enroll.members[c].size() << " enrollment embeddings, fewer than "
             << "nc=" << max_nc;
}

// Whitened-distance scoring of many test vectors against many predictive
// means sharing one covariance factor: returns [models x tests] of
// log N(x_j; mean_i, S).
Eigen::MatrixXd ScoreAll(const GaussianFactor &f, const Eigen::MatrixXd &means,
                         const Eigen::MatrixXd &z, const Eigen::VectorXd &z_norm) {
  const Eigen::MatrixXd w = f.WhitenColumns(means);
  const Eigen::VectorXd w_norm = w.colwise().squaredNorm().transpose();
  Eigen::MatrixXd s = w.transpose() * z;
  for (Eigen::Index j = 0; j < s.cols(); j++)
    for (Eigen::Index i = 0; i < s.rows(); i++)
      s(i, j) = f.log_normalizer() - 0.5 * (w_norm[i] + z_norm[j] - 2.0 * s(i, j));
  return s;
}

}  // namespace

double Eer(const TrialSet &trials) {
  if (trials.target.empty() || trials.nontarget.empty())
    LE_ERR << "EER needs target and non-target scores (got "
           << trials.target.size() << " and " << trials.nontarget.size() << ")";
  std::vector<double> t = trials.target, n = trials.nontarget;
  for (const auto *v : {&t, &n})
    for (double s : *v)
      if (!std::isfinite(s)) LE_ERR << "EER scores must be finite";
  std::sort(t.begin(), t.end());
  std::sort(n.begin(), n.end());
  const double nt = double(t.size()), nn = double(n.size());
  std::size_t pt = 0, pn = 0;
  double prev_frr = 0.0, prev_far = 1.0;
  bool have_prev = false;
  while (true) {
    const bool at_end = pt == t.size() && pn == n.size();
    double frr = 1.0, far = 0.0, v = 0.0;
    if (!at_end) {
      v = pt == t.size() ? n[pn] : pn == n.size() ? t[pt] : std::min(t[pt], n[pn]);
      frr = double(pt) / nt;
      far = (nn - double(pn)) / nn;
    }
    const double diff = frr - far;
    if (diff >= 0.0) {
      if (diff == 0.0 || !have_prev) return frr;
      const double prev_diff = prev_frr - prev_far;
      const double a = -prev_diff / (diff - prev_diff);
      return prev_frr + a * (frr - prev_frr);
    }
    prev_frr = frr;
    prev_far = far;
    have_prev = true;
    while (pt < t.size() && t[pt] == v) pt++;
    while (pn < n.size() && n[pn] == v) pn++;
  }
}

std::vector<std::size_t> RankLabels(const std::vector<double> &scores,
                                    const std::vector<std::size_t> &labels) {
  if (scores.size() != labels.size())
    LE_ERR << "got " << scores.size() << " scores for " << labels.size() << " labels";
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return labels[a] < labels[b];
  });
  std::vector<std::size_t> out;
  for (std::size_t i : order) out.push_back(labels[i]);
  return out;
}

std::vector<std::size_t> Identify(const Plda &plda,
                                  const std::vector<ClassEnrollment> &enrollments,
                                  const Eigen::VectorXd &x) {
  if (enrollments.size() < 2) LE_ERR << "identification needs at least 2 classes";
  std::vector<double> scores;
  std::vector<std::size_t> labels;
  for (const ClassEnrollment &e : enrollments) {
    scores.push_back(plda.ConditionalLogDensity(e, x));
    labels.push_back(e.label);
  }
  return RankLabels(scores, labels);
}

double TopKError(const std::vector<std::vector<std::size_t>> &rankings,
                 const std::vector<std::size_t> &truth, std::size_t k) {
  if (k < 1) LE_ERR << "top-k error needs k >= 1";
  if (rankings.size() != truth.size())
    LE_ERR << "got " << rankings.size() << " rankings for " << truth.size() << " labels";
  if (rankings.empty()) return 0.0;
  std::size_t misses = 0;
  for (std::size_t i = 0; i < rankings.size(); i++) {
    const auto &r = rankings[i];
    const auto end = r.begin() + std::min(k, r.size());
    misses += std::find(r.begin(), end, truth[i]) == end;
  }
  return double(misses) / double(rankings.size());
}

void ProtocolConfig::Validate() const {
  if (nc_values.empty()) LE_ERR << "protocol needs at least one nc value";
  for (std::size_t nc : nc_values)
    if (nc == 0) LE_ERR << "nc values must be positive";
  if (repeats < 1) LE_ERR << "protocol needs at least one repeat";
}

TrialMetrics RunIdentificationProtocol(const Plda &plda,
                                       const std::vector<Embedding> &enroll_pool,
                                       const std::vector<Embedding> &test_pool,
                                       const ProtocolConfig &cfg) {
  const Pool pool = MakePool(enroll_pool);
  CheckPools(plda, enroll_pool, test_pool, pool, cfg);
  const Eigen::MatrixXd enroll_x = Columns(enroll_pool), test_x = Columns(test_pool);
  const std::size_t k = pool.labels.size(), n_test = test_pool.size();
  std::vector<std::size_t> truth_row(n_test);
  for (std::size_t j = 0; j < n_test; j++)
    truth_row[j] = std::lower_bound(pool.labels.begin(), pool.labels.end(),
                                    test_pool[j].label) - pool.labels.begin();

  TrialMetrics m;
  m.protocol = "identification";
  m.seed = cfg.seed;
  for (std::size_t nc : cfg.nc_values) {
    const GaussianFactor f = plda.PredictiveFactor(nc);
    const Eigen::MatrixXd z = f.WhitenColumns(test_x);
    const Eigen::VectorXd z_norm = z.colwise().squaredNorm().transpose();
    NcMetrics r;
    r.nc = nc;
    r.trials = n_test;
    double top1 = 0.0, top5 = 0.0;
    for (std::size_t rep = 0; rep < cfg.repeats; rep++) {
      std::mt19937_64 rng = RepeatRng(cfg.seed, nc, rep);
      Eigen::MatrixXd means(plda.dim(), k);
      for (std::size_t c = 0; c < k; c++) {
        std::vector<std::size_t> idx = pool.members[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(plda.dim());
        for (std::size_t i = 0; i < nc; i++) sum += enroll_x.col(idx[i]);
        means.col(c) = plda.PredictiveMean(plda.EnrollFromSum(pool.labels[c], nc, sum));
      }
      const Eigen::MatrixXd s = ScoreAll(f, means, z, z_norm);
      std::size_t miss1 = 0, miss5 = 0;
      for (std::size_t j = 0; j < n_test; j++) {
        // Rank of the true class under the descending-score, ascending-label
        // order; labels are sorted, so row order is label order.
        const std::size_t t = truth_row[j];
        std::size_t rank = 0;
        for (std::size_t c = 0; c < k; c++)
          rank += s(c, j) > s(t, j) || (s(c, j) == s(t, j) && c < t);
        miss1 += rank >= 1;
        miss5 += rank >= 5;
      }
      const double e1 = double(miss1) / double(n_test), e5 = double(miss5) / double(n_test);
      r.repeat_values.push_back(e1);
      top1 += e1;
      top5 += e5;
    }
    r.top1 = top1 / double(cfg.repeats);
    r.top5 = top5 / double(cfg.repeats);
    m.per_nc.push_back(r);
  }
  return m;
}

namespace {

// Appends the trials of one random partition into nc-sized models.
void AppendMatchingTrials(const Plda &plda, const Pool &pool,
                          const Eigen::MatrixXd &enroll_x,
                          const std::vector<std::size_t> &test_labels,
                          const GaussianFactor &f, const Eigen::MatrixXd &z,
                          const Eigen::VectorXd &z_norm,
                          const Eigen::VectorXd &marginal, std::size_t nc,
                          std::mt19937_64 *rng, TrialSet *out) {
  std::vector<Eigen::VectorXd> means;
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < pool.labels.size(); c++) {
    std::vector<std::size_t> idx = pool.members[c];
    std::shuffle(idx.begin(), idx.end(), *rng);
    for (std::size_t g = 0; g + nc <= idx.size(); g += nc) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(plda.dim());
      for (std::size_t i = g; i < g + nc; i++) sum += enroll_x.col(idx[i]);
      means.push_back(plda.PredictiveMean(plda.EnrollFromSum(pool.labels[c], nc, sum)));
      labels.push_back(pool.labels[c]);
    }
  }
  // Scored in blocks of models to bound the temporary matrix.
  const std::size_t block = 256;
  for (std::size_t b = 0; b < means.size(); b += block) {
    const std::size_t e = std::min(means.size(), b + block);
    Eigen::MatrixXd mb(plda.dim(), e - b);
    for (std::size_t i = b; i < e; i++) mb.col(i - b) = means[i];
    const Eigen::MatrixXd s = ScoreAll(f, mb, z, z_norm);
    for (std::size_t i = b; i < e; i++)
      for (Eigen::Index j = 0; j < s.cols(); j++) {
        const double llr = s(i - b, j) - marginal[j];
        (labels[i] == test_labels[j] ? out->target : out->nontarget).push_back(llr);
      }
  }
}

struct MatchingInputs {
  Eigen::MatrixXd enroll_x, test_x;
  std::vector<std::size_t> test_labels;
  Eigen::VectorXd marginal;
};

MatchingInputs PrepareMatching(const Plda &plda,
                               const std::vector<Embedding> &enroll_pool,
                               const std::vector<Embedding> &test_pool) {
  MatchingInputs in;
  in.enroll_x = Columns(enroll_pool);
  in.test_x = Columns(test_pool);
  in.marginal.resize(test_pool.size());
  for (std::size_t j = 0; j < test_pool.size(); j++) {
    in.test_labels.push_back(test_pool[j].label);
    in.marginal[j] = plda.MarginalLogDensity(in.test_x.col(j));
  }
  return in;
}

}  // namespace

TrialSet MatchingTrials(const Plda &plda, const std::vector<Embedding> &enroll_pool,
                        const std::vector<Embedding> &test_pool, std::size_t nc,
                        uint64 seed) {
  ProtocolConfig cfg;
  cfg.nc_values = {nc};
  cfg.repeats = 1;
  cfg.seed = seed;
  const Pool pool = MakePool(enroll_pool);
  CheckPools(plda, enroll_pool, test_pool, pool, cfg);
  const MatchingInputs in = PrepareMatching(plda, enroll_pool, test_pool);
  const GaussianFactor f = plda.PredictiveFactor(nc);
  const Eigen::MatrixXd z = f.WhitenColumns(in.test_x);
  const Eigen::VectorXd z_norm = z.colwise().squaredNorm().transpose();
  std::mt19937_64 rng = RepeatRng(seed, nc, 0);
  TrialSet trials;
  AppendMatchingTrials(plda, pool, in.enroll_x, in.test_labels, f, z, z_norm,
                       in.marginal, nc, &rng, &trials);
  return trials;
}

TrialMetrics RunMatchingProtocol(const Plda &plda,
                                 const std::vector<Embedding> &enroll_pool,
                                 const std::vector<Embedding> &test_pool,
                                 const ProtocolConfig &cfg) {
  const Pool pool = MakePool(enroll_pool);
  CheckPools(plda, enroll_pool, test_pool, pool, cfg);
  const MatchingInputs in = PrepareMatching(plda, enroll_pool, test_pool);
  TrialMetrics m;
  m.protocol = "matching";
  m.seed = cfg.seed;
  for (std::size_t nc : cfg.nc_values) {
    const GaussianFactor f = plda.PredictiveFactor(nc);
    const Eigen::MatrixXd z = f.WhitenColumns(in.test_x);
    const Eigen::VectorXd z_norm = z.colwise().squaredNorm().transpose();
    NcMetrics r;
    r.nc = nc;
    double eer = 0.0;
    for (std::size_t rep = 0; rep < cfg.repeats; rep++) {
      std::mt19937_64 rng = RepeatRng(cfg.seed, nc, rep);
      TrialSet trials;
      AppendMatchingTrials(plda, pool, in.enroll_x, in.test_labels, f, z, z_norm,
                           in.marginal, nc, &rng, &trials);
      r.trials = trials.target.size() + trials.nontarget.size();
      r.target_trials = trials.target.size();
      const double e = Eer(trials);
      r.repeat_values.push_back(e);
      eer += e;
    }
    r.eer = eer / double(cfg.repeats);
    m.per_nc.push_back(r);
  }
  return m;
}

std::string FormatMetrics(const TrialMetrics &m, const std::string &model_file,
                          const std::vector<std::string> &pool_files) {
  using nlohmann::json;
  auto opt = [](const std::optional<double> &v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["protocol"] = m.protocol;
  j["seed"] = m.seed;
  j["model_file"] = model_file;
  j["pool_files"] = pool_files;
  json per = json::object();
  for (const NcMetrics &r : m.per_nc) {
    json e;
    e["top1"] = opt(r.top1);
    e["top5"] = opt(r.top5);
    e["eer"] = opt(r.eer);
    e["n_trials"] = r.trials;
    e["n_target_trials"] = r.target_trials;
    e["repeats"] = r.repeat_values;
    per[std::to_string(r.nc)] = e;
  }
  j["nc"] = per;
  return j.dump(2) + "\n";
}

}  // namespace lipembed
