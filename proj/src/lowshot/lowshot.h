// lowshot/lowshot.h

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

#ifndef LIPEMBED_LOWSHOT_LOWSHOT_H_
#define LIPEMBED_LOWSHOT_LOWSHOT_H_

// Low-shot evaluation on embeddings of unseen words:
//  - identification: enroll every word from nc instances and pick the word
//    with the highest class-conditional density (Top-1 / Top-5 error);
//  - matching: score (word model, instance) pairs by log-likelihood ratio
//    and report the equal error rate.

#include <optional>
#include <string>
#include <vector>

#include "base/embedding.h"
#include "plda/plda.h"

namespace lipembed {

struct TrialSet {
  std::vector<double> target;
  std::vector<double> nontarget;
};

/// Equal error rate.  Thresholds sweep the sorted union of all scores plus
/// +infinity, with FRR(t) = frac(target < t) and FAR(t) = frac(nontarget >=
/// t).  At the first threshold where FRR - FAR >= 0 the rate is FRR if the
/// difference is exactly zero, else the crossing point of the straight lines
/// through this and the previous threshold.
double Eer(const TrialSet &trials);

/// Labels ordered by descending score; equal scores go by ascending label.
std::vector<std::size_t> RankLabels(const std::vector<double> &scores,
                                    const std::vector<std::size_t> &labels);

/// Enrollment labels ranked by conditional log-density of x.
std::vector<std::size_t> Identify(const Plda &plda,
                                  const std::vector<ClassEnrollment> &enrollments,
                                  const Eigen::VectorXd &x);

/// Fraction of trials whose true label is not among the first k entries.
double TopKError(const std::vector<std::vector<std::size_t>> &rankings,
                 const std::vector<std::size_t> &truth, std::size_t k);

struct ProtocolConfig {
  std::vector<std::size_t> nc_values = {1, 2, 4, 8, 16};
  std::size_t repeats = 10;
  uint64 seed = 17;

  void Validate() const;
};

struct NcMetrics {
  std::size_t nc = 0;
  std::optional<double> top1, top5, eer;  // means over repeats
  std::vector<double> repeat_values;      // top1 or eer of every repeat
  std::size_t trials = 0;                 // per repeat
  std::size_t target_trials = 0;
};

struct TrialMetrics {
  std::string protocol;  // "identification" or "matching"
  uint64 seed = 17;
  std::vector<NcMetrics> per_nc;
};

/// For every nc and repeat: nc enrollment instances are drawn per class
/// without replacement, every test embedding is ranked against all classes.
TrialMetrics RunIdentificationProtocol(const Plda &plda,
                                       const std::vector<Embedding> &enroll_pool,
                                       const std::vector<Embedding> &test_pool,
                                       const ProtocolConfig &cfg);

/// For every nc and repeat: each class pool is shuffled and cut into
/// floor(n/nc) disjoint models of nc instances; every (model, test) pair is
/// a trial, a target when the labels agree.
TrialMetrics RunMatchingProtocol(const Plda &plda,
                                 const std::vector<Embedding> &enroll_pool,
                                 const std::vector<Embedding> &test_pool,
                                 const ProtocolConfig &cfg);

/// The matching trials of a single partition, for inspection and testing.
TrialSet MatchingTrials(const Plda &plda, const std::vector<Embedding> &enroll_pool,
                        const std::vector<Embedding> &test_pool, std::size_t nc,
                        uint64 seed);

/// JSON text: {protocol, seed, model_file, pool_files, nc: {"1": {top1,
/// top5, eer, n_trials, n_target_trials, repeats}, ...}}; metrics that do not
/// apply are null.
std::string FormatMetrics(const TrialMetrics &m, const std::string &model_file,
                          const std::vector<std::string> &pool_files);

}  // namespace lipembed

#endif  // LIPEMBED_LOWSHOT_LOWSHOT_H_
