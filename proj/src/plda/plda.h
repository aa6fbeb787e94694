// plda/plda.h

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

#ifndef LIPEMBED_PLDA_PLDA_H_
#define LIPEMBED_PLDA_PLDA_H_

// Probabilistic LDA with a single latent class variable:
//
//   y_c ~ N(0, I_{d_y}),   x_i = mu + V y_{c_i} + eps_i,   eps_i ~ N(0, Sigma).
//
// An enrollment is the posterior of y_c given n_c class instances; scoring
// uses the posterior predictive N(mu + V m_c, Sigma + V C_c V^T) against the
// marginal N(mu, V V^T + Sigma).

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "base/embedding.h"

namespace lipembed {

struct PldaModel {
  Eigen::VectorXd mu;     // d_x
  Eigen::MatrixXd V;      // d_x x d_y
  Eigen::MatrixXd Sigma;  // d_x x d_x, symmetric positive definite

  std::size_t dim() const { return std::size_t(mu.size()); }
  std::size_t latent_dim() const { return std::size_t(V.cols()); }
  /// Throws on inconsistent shapes, non-finite entries, an asymmetric or
  /// non-positive-definite Sigma, or d_y > d_x.
  void Validate() const;
};

/// Cholesky factor of a covariance, for repeated log-density evaluation.
class GaussianFactor {
 public:
  GaussianFactor() = default;
  /// Throws if cov is not positive definite.
  explicit GaussianFactor(const Eigen::MatrixXd &cov);

  /// L^{-1} v, where cov = L L^T.
  Eigen::VectorXd Whiten(const Eigen::VectorXd &v) const;
  /// L^{-1} applied to every column.
  Eigen::MatrixXd WhitenColumns(const Eigen::MatrixXd &m) const;
  /// -0.5 (d log 2 pi + log det cov).
  double log_normalizer() const { return log_normalizer_; }
  double LogDensity(const Eigen::VectorXd &mean, const Eigen::VectorXd &x) const;

 private:
  Eigen::MatrixXd lower_;
  double log_normalizer_ = 0.0;
};

struct ClassEnrollment {
  std::size_t label = 0;
  std::size_t count = 0;  // n_c
  Eigen::VectorXd mean;   // m_c, d_y
  Eigen::MatrixXd cov;    // C_c, d_y x d_y
};

/// An immutable model with the factorizations every score needs.
class Plda {
 public:
  explicit Plda(PldaModel model);

  const PldaModel &model() const { return model_; }
  std::size_t dim() const { return model_.dim(); }
  std::size_t latent_dim() const { return model_.latent_dim(); }

  /// Posterior of y from the instances (rows of x), or the prior if empty.
  ClassEnrollment Enroll(std::size_t label, const Eigen::MatrixXd &x) const;
  /// Same, from the instance count and the sum of the instances.
  ClassEnrollment EnrollFromSum(std::size_t label, std::size_t count,
                                const Eigen::VectorXd &sum) const;

  /// C_n = (I + n V^T Sigma^{-1} V)^{-1}; depends on n only.
  Eigen::MatrixXd PosteriorCov(std::size_t count) const;
  /// Factor of the predictive covariance Sigma + V C_n V^T.
  GaussianFactor PredictiveFactor(std::size_t count) const;
  Eigen::VectorXd PredictiveMean(const ClassEnrollment &e) const;

  double MarginalLogDensity(const Eigen::VectorXd &x) const;
  double ConditionalLogDensity(const ClassEnrollment &e,
                               const Eigen::VectorXd &x) const;
  double Llr(const ClassEnrollment &e, const Eigen::VectorXd &x) const;

  const GaussianFactor &marginal_factor() const { return marginal_; }

 private:
  void CheckDim(const Eigen::VectorXd &x) const;

  PldaModel model_;
  Eigen::MatrixXd vt_sigma_inv_;  // V^T Sigma^{-1}, d_y x d_x
  Eigen::MatrixXd precision_;     // V^T Sigma^{-1} V
  GaussianFactor marginal_;
};

struct EmOptions {
  std::size_t latent_dim = 2;
  std::size_t iterations = 20;
  /// Stop once an iteration gains less than this much log-likelihood per
  /// instance.  Zero or negative disables the early stop.
  double min_gain_per_instance = 1e-6;
  /// Rescale the latent space after every M-step so the class posteriors
  /// have unit second moment (parameter-expanded EM).  Same fixed points,
  /// far fewer iterations when the between-class scale is off.
  bool expand_latent = true;
  uint64 seed = 17;
};

struct EmResult {
  PldaModel model;
  /// Total marginal log-likelihood of the data: entry 0 for the initial
  /// model, then one entry per completed iteration.
  std::vector<double> loglik;
  std::size_t ridge_events = 0;
};

/// Sufficient statistics of labelled data around a fixed mean.
struct ClassStats {
  Eigen::VectorXd mean;                // global mean mu
  std::vector<std::size_t> counts;     // n_c per class
  std::vector<Eigen::VectorXd> sums;   // sum of (x - mu) per class
  Eigen::MatrixXd scatter;             // sum of (x - mu)(x - mu)^T
  std::size_t total = 0;
};

ClassStats ComputeClassStats(const std::vector<Embedding> &data);

/// Exact marginal log-likelihood of all classes under the model.
double TotalLogLikelihood(const PldaModel &model, const ClassStats &stats);

/// One E-step plus M-step from `model`; mu is kept.
PldaModel EmIteration(const PldaModel &model, const ClassStats &stats,
                      bool expand_latent = false);

/// Seeded starting point: mu = global mean, Sigma = within-class covariance
/// plus a small ridge, V uniform scaled by per-dimension standard deviation
/// over sqrt(d_y).
PldaModel InitialModel(const ClassStats &stats, std::size_t latent_dim,
                       const std::vector<Embedding> &data, uint64 seed);

EmResult EmFit(const std::vector<Embedding> &data, const EmOptions &opts);

/// Versioned JSON text document {format, version, d_x, d_y, mu, V, Sigma},
/// matrices row-major, numbers with round-trip precision.
std::string FormatPldaModel(const PldaModel &model);
PldaModel ParsePldaModel(const std::string &text);
void WritePldaModel(const PldaModel &model, const std::string &path);
PldaModel ReadPldaModel(const std::string &path);

}  // namespace lipembed

#endif  // LIPEMBED_PLDA_PLDA_H_
