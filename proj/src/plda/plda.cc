// plda/plda.cc

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

#include "plda/plda.h"

#include <cmath>
#include <numbers>
#include <random>

#include "base/io.h"
#include "json.hpp"

namespace lipembed {

namespace {

constexpr int kModelVersion = 1;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double LogDet(const Eigen::LLT<Eigen::MatrixXd> &llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

bool Factorizes(const Eigen::MatrixXd &m, Eigen::LLT<Eigen::MatrixXd> *llt) {
  llt->compute(m);
  if (llt->info() != Eigen::Success) return false;
  const Eigen::VectorXd d = llt->matrixLLT().diagonal();
  return (d.array() > 0.0).all() && d.allFinite();
}

// Adds escalating ridges until the covariance factorizes; returns the number
// of ridges added.
std::size_t Stabilize(Eigen::MatrixXd *cov) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (Factorizes(*cov, &llt)) return 0;
  const double d = double(cov->rows());
  double ridge = 1e-6 * std::max(cov->trace(), 1e-300) / d;
  for (std::size_t n = 1; n <= 12; n++, ridge *= 10.0) {
    cov->diagonal().array() += ridge;
    LE_LOG << "covariance not positive definite; added ridge " << ridge;
    if (Factorizes(*cov, &llt)) return n;
  }
  LE_ERR << "covariance stays singular after ridge regularization";
  return 0;
}

Eigen::MatrixXd Symmetrized(const Eigen::MatrixXd &m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

void PldaModel::Validate() const {
  const Eigen::Index d = mu.size();
  if (d < 1) LE_ERR << "PLDA model has empty mean";
  if (V.rows() != d || Sigma.rows() != d || Sigma.cols() != d)
    LE_ERR << "PLDA model shapes disagree: mu " << d << ", V " << V.rows()
           << "x" << V.cols() << ", Sigma " << Sigma.rows() << "x" << Sigma.cols();
  if (V.cols() < 1 || V.cols() > d)
    LE_ERR << "PLDA latent dimension " << V.cols() << " must lie in [1, " << d << "]";
  if (!mu.allFinite() || !V.allFinite() || !Sigma.allFinite())
    LE_ERR << "PLDA model has non-finite entries";
  const double asym = (Sigma - Sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, Sigma.cwiseAbs().maxCoeff()))
    LE_ERR << "PLDA Sigma is not symmetric (max asymmetry " << asym << ")";
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!Factorizes(Sigma, &llt)) LE_ERR << "PLDA Sigma is not positive definite";
}

GaussianFactor::GaussianFactor(const Eigen::MatrixXd &cov) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!Factorizes(cov, &llt)) LE_ERR << "covariance is not positive definite";
  lower_ = llt.matrixL();
  log_normalizer_ = -0.5 * (double(cov.rows()) * kLog2Pi + LogDet(llt));
}

Eigen::VectorXd GaussianFactor::Whiten(const Eigen::VectorXd &v) const {
  return lower_.triangularView<Eigen::Lower>().solve(v);
}

Eigen::MatrixXd GaussianFactor::WhitenColumns(const Eigen::MatrixXd &m) const {
  return lower_.triangularView<Eigen::Lower>().solve(m);
}

double GaussianFactor::LogDensity(const Eigen::VectorXd &mean,
                                  const Eigen::VectorXd &x) const {
  return log_normalizer_ - 0.5 * Whiten(x - mean).squaredNorm();
}

Plda::Plda(PldaModel model) : model_(std::move(model)) {
  model_.Validate();
  Eigen::LLT<Eigen::MatrixXd> llt(model_.Sigma);
  vt_sigma_inv_ = llt.solve(model_.V).transpose();
  precision_ = Symmetrized(vt_sigma_inv_ * model_.V);
  marginal_ = GaussianFactor(
      Symmetrized(model_.V * model_.V.transpose() + model_.Sigma));
}

void Plda::CheckDim(const Eigen::VectorXd &x) const {
  if (std::size_t(x.size()) != dim())
    LE_ERR << "embedding has dimension " << x.size() << ", PLDA model has "
           << dim();
}

Eigen::MatrixXd Plda::PosteriorCov(std::size_t count) const {
  const Eigen::Index dy = precision_.rows();
  const Eigen::MatrixXd m =
      Eigen::MatrixXd::Identity(dy, dy) + double(count) * precision_;
  return Symmetrized(m.llt().solve(Eigen::MatrixXd::Identity(dy, dy)));
}

ClassEnrollment Plda::EnrollFromSum(std::size_t label, std::size_t count,
                                    const Eigen::VectorXd &sum) const {
  CheckDim(sum);
  ClassEnrollment e;
  e.label = label;
  e.count = count;
  e.cov = PosteriorCov(count);
  if (count == 0) {
    e.mean = Eigen::VectorXd::Zero(latent_dim());
    return e;
  }
  e.mean = e.cov * (vt_sigma_inv_ * (sum - double(count) * model_.mu));
  return e;
}

ClassEnrollment Plda::Enroll(std::size_t label, const Eigen::MatrixXd &x) const {
  if (x.rows() > 0 && std::size_t(x.cols()) != dim())
    LE_ERR << "enrollment embeddings have dimension " << x.cols()
           << ", PLDA model has " << dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim());
  if (x.rows() > 0) sum = x.colwise().sum().transpose();
  return EnrollFromSum(label, std::size_t(x.rows()), sum);
}

GaussianFactor Plda::PredictiveFactor(std::size_t count) const {
  const Eigen::MatrixXd &v = model_.V;
  return GaussianFactor(
      Symmetrized(model_.Sigma + v * PosteriorCov(count) * v.transpose()));
}

Eigen::VectorXd Plda::PredictiveMean(const ClassEnrollment &e) const {
  return model_.mu + model_.V * e.mean;
}

double Plda::MarginalLogDensity(const Eigen::VectorXd &x) const {
  CheckDim(x);
  return marginal_.LogDensity(model_.mu, x);
}

double Plda::ConditionalLogDensity(const ClassEnrollment &e,
                                   const Eigen::VectorXd &x) const {
  CheckDim(x);
  if (std::size_t(e.mean.size()) != latent_dim())
    LE_ERR << "enrollment has latent dimension " << e.mean.size()
           << ", PLDA model has " << latent_dim();
  const Eigen::MatrixXd &v = model_.V;
  const GaussianFactor f(Symmetrized(model_.Sigma + v * e.cov * v.transpose()));
  return f.LogDensity(PredictiveMean(e), x);
}

double Plda::Llr(const ClassEnrollment &e, const Eigen::VectorXd &x) const {
  return ConditionalLogDensity(e, x) - MarginalLogDensity(x);
}

ClassStats ComputeClassStats(const std::vector<Embedding> &data) {
  const std::size_t d = CheckEmbeddings(data);
  ClassStats s;
  s.total = data.size();
  s.mean = Eigen::VectorXd::Zero(d);
  for (const Embedding &e : data)
    s.mean += Eigen::Map<const Eigen::VectorXd>(e.values.data(), d);
  s.mean /= double(s.total);
  s.scatter = Eigen::MatrixXd::Zero(d, d);
  for (const auto &[label, idx] : GroupByLabel(data)) {
    Eigen::MatrixXd x(idx.size(), d);
    for (std::size_t i = 0; i < idx.size(); i++)
      x.row(i) = Eigen::Map<const Eigen::VectorXd>(data[idx[i]].values.data(), d)
                     .transpose() - s.mean.transpose();
    s.counts.push_back(idx.size());
    s.sums.push_back(x.colwise().sum().transpose());
    s.scatter.noalias() += x.transpose() * x;
  }
  s.scatter = Symmetrized(s.scatter);
  return s;
}

double TotalLogLikelihood(const PldaModel &model, const ClassStats &stats) {
  const Eigen::Index d = model.mu.size(), dy = model.V.cols();
  Eigen::LLT<Eigen::MatrixXd> sigma(model.Sigma);
  if (sigma.info() != Eigen::Success) LE_ERR << "Sigma is not positive definite";
  const Eigen::MatrixXd vt_si = sigma.solve(model.V).transpose();
  const Eigen::MatrixXd prec = vt_si * model.V;
  const double n = double(stats.total);
  const double trace = sigma.solve(stats.scatter).trace();
  double ll = -0.5 * (n * double(d) * kLog2Pi + n * LogDet(sigma) + trace);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dy, dy);
  for (std::size_t c = 0; c < stats.counts.size(); c++) {
    Eigen::LLT<Eigen::MatrixXd> m(eye + double(stats.counts[c]) * prec);
    const Eigen::VectorXd b = vt_si * stats.sums[c];
    ll += -0.5 * LogDet(m) + 0.5 * b.dot(m.solve(b));
  }
  return ll;
}

namespace {

PldaModel EmIterationImpl(const PldaModel &model, const ClassStats &stats,
                          bool expand_latent, std::size_t *ridge_events) {
  const Eigen::Index dy = model.V.cols();
  Eigen::LLT<Eigen::MatrixXd> sigma(model.Sigma);
  const Eigen::MatrixXd vt_si = sigma.solve(model.V).transpose();
  const Eigen::MatrixXd prec = vt_si * model.V;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dy, dy);

  // E-step accumulated straight into the M-step statistics.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dy, dy);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(model.V.rows(), dy);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(dy, dy);
  for (std::size_t c = 0; c < stats.counts.size(); c++) {
    const double nc = double(stats.counts[c]);
    const Eigen::MatrixXd cc =
        Symmetrized((eye + nc * prec).llt().solve(eye));
    const Eigen::VectorXd mc = cc * (vt_si * stats.sums[c]);
    a += nc * (cc + mc * mc.transpose());
    b += stats.sums[c] * mc.transpose();
    r += cc + mc * mc.transpose();
  }
  PldaModel next;
  next.mu = model.mu;
  next.V = a.llt().solve(b.transpose()).transpose();
  next.Sigma = Symmetrized((stats.scatter - next.V * b.transpose()) /
                           double(stats.total));
  const std::size_t ridges = Stabilize(&next.Sigma);
  if (ridge_events) *ridge_events += ridges;
  if (expand_latent) {
    Eigen::LLT<Eigen::MatrixXd> scale(Symmetrized(r / double(stats.counts.size())));
    if (scale.info() == Eigen::Success) next.V = next.V * scale.matrixL();
  }
  return next;
}

}  // namespace

PldaModel EmIteration(const PldaModel &model, const ClassStats &stats,
                      bool expand_latent) {
  return EmIterationImpl(model, stats, expand_latent, nullptr);
}

PldaModel InitialModel(const ClassStats &stats, std::size_t latent_dim,
                       const std::vector<Embedding> &data, uint64 seed) {
  const std::size_t d = stats.mean.size();
  // Within-class scatter = total scatter minus the class-mean part.
  Eigen::MatrixXd within = stats.scatter;
  for (std::size_t c = 0; c < stats.counts.size(); c++)
    within -= stats.sums[c] * stats.sums[c].transpose() / double(stats.counts[c]);
  within = Symmetrized(within / double(stats.total));
  within.diagonal().array() += 1e-6 * std::max(within.trace(), 1e-300) / double(d);
  Stabilize(&within);

  Eigen::VectorXd stddev(d);
  for (std::size_t j = 0; j < d; j++) {
    double ss = 0.0;
    for (const Embedding &e : data) ss += std::pow(e.values[j] - stats.mean[j], 2);
    stddev[j] = std::sqrt(ss / double(stats.total));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PldaModel m;
  m.mu = stats.mean;
  m.Sigma = within;
  m.V = Eigen::MatrixXd(d, latent_dim);
  for (std::size_t i = 0; i < d; i++)
    for (std::size_t k = 0; k < latent_dim; k++)
      m.V(i, k) = u(rng) * stddev[i] / std::sqrt(double(latent_dim));
  return m;
}

EmResult EmFit(const std::vector<Embedding> &data, const EmOptions &opts) {
  const std::size_t d = CheckEmbeddings(data);
  const ClassStats stats = ComputeClassStats(data);
  const std::size_t k = stats.counts.size();
  if (k < 2) LE_ERR << "PLDA training needs at least 2 classes, got " << k;
  if (stats.total < 2 * k)
    LE_ERR << "PLDA training needs at least 2 instances per class on average, "
           << "got " << stats.total << " for " << k << " classes";
  if (opts.latent_dim < 1 || opts.latent_dim > d)
    LE_ERR << "latent dimension " << opts.latent_dim << " must lie in [1, " << d
           << "]";
  if (opts.latent_dim > k - 1)
    LE_WARN << "latent dimension " << opts.latent_dim << " exceeds the rank "
            << "of the between-class scatter (at most " << k - 1
            << "); fitting anyway";

  EmResult r;
  r.model = InitialModel(stats, opts.latent_dim, data, opts.seed);
  r.loglik.push_back(TotalLogLikelihood(r.model, stats));
  LE_VLOG(1) << "PLDA EM initial log-likelihood " << r.loglik.back();
  for (std::size_t it = 0; it < opts.iterations; it++) {
    r.model = EmIterationImpl(r.model, stats, opts.expand_latent, &r.ridge_events);
    r.loglik.push_back(TotalLogLikelihood(r.model, stats));
    const double gain = r.loglik.back() - r.loglik[r.loglik.size() - 2];
    LE_VLOG(1) << "PLDA EM iteration " << it + 1 << " log-likelihood "
               << r.loglik.back() << " gain " << gain;
    if (opts.min_gain_per_instance > 0.0 &&
        gain < opts.min_gain_per_instance * double(stats.total))
      break;
  }
  return r;
}

std::string FormatPldaModel(const PldaModel &model) {
  model.Validate();
  const std::size_t d = model.dim(), dy = model.latent_dim();
  nlohmann::json j;
  j["format"] = "lipembed-plda";
  j["version"] = kModelVersion;
  j["d_x"] = d;
  j["d_y"] = dy;
  j["mu"] = std::vector<double>(model.mu.data(), model.mu.data() + d);
  std::vector<double> v, s;
  for (std::size_t i = 0; i < d; i++) {
    for (std::size_t k = 0; k < dy; k++) v.push_back(model.V(i, k));
    for (std::size_t k = 0; k < d; k++) s.push_back(model.Sigma(i, k));
  }
  j["V"] = v;
  j["Sigma"] = s;
  return j.dump(1) + "\n";
}

PldaModel ParsePldaModel(const std::string &text) {
  PldaModel m;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "lipembed-plda")
      LE_ERR << "not a PLDA model document";
    if (j.value("version", -1) != kModelVersion)
      LE_ERR << "unsupported PLDA model version " << j.value("version", -1);
    const std::size_t d = j.at("d_x"), dy = j.at("d_y");
    const auto mu = j.at("mu").get<std::vector<double>>();
    const auto v = j.at("V").get<std::vector<double>>();
    const auto s = j.at("Sigma").get<std::vector<double>>();
    if (mu.size() != d || v.size() != d * dy || s.size() != d * d)
      LE_ERR << "PLDA model arrays do not match d_x=" << d << ", d_y=" << dy;
    m.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), d);
    m.V = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>(v.data(), d, dy);
    m.Sigma = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                             Eigen::Dynamic, Eigen::RowMajor>>(
        s.data(), d, d);
  } catch (const nlohmann::json::exception &e) {
    LE_ERR << "malformed PLDA model: " << e.what();
  }
  m.Validate();
  return m;
}

void WritePldaModel(const PldaModel &model, const std::string &path) {
  WriteFileAtomic(path, FormatPldaModel(model));
}

PldaModel ReadPldaModel(const std::string &path) {
  return ParsePldaModel(ReadFile(path));
}

}  // namespace lipembed
