// plda/plda-test.cc

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

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "plda/plda.h"
#include "synthgen/embeddings.h"

namespace lipembed {
namespace {

const double kPi = std::numbers::pi;

double NormalLogPdf(double x, double mean, double var) {
  return -0.5 * std::log(2 * kPi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

PldaModel Scalar(double mu, double v, double sigma) {
  PldaModel m;
  m.mu = Eigen::VectorXd::Constant(1, mu);
  m.V = Eigen::MatrixXd::Constant(1, 1, v);
  m.Sigma = Eigen::MatrixXd::Constant(1, 1, sigma);
  return m;
}

Eigen::VectorXd Vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  std::size_t i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Trapezoid rule of f over [lo, hi] with n intervals.
template <typename F>
double Integrate(F f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; i++) s += f(lo + i * h);
  return s * h;
}

// Log-density of a stacked Gaussian vector, evaluated with a full dense
// factorization.
double DenseLogPdf(const Eigen::VectorXd &x, const Eigen::VectorXd &mean,
                   const Eigen::MatrixXd &cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  REQUIRE(llt.info() == Eigen::Success);
  const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); i++)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (double(x.size()) * std::log(2 * kPi) + logdet + z.squaredNorm());
}

// Joint log-density of instances sharing one class under the generative
// model: every instance has covariance VV^T + Sigma and any two share VV^T.
double JointLogPdf(const PldaModel &m, const std::vector<Eigen::VectorXd> &xs) {
  const Eigen::Index d = m.mu.size(), n = Eigen::Index(xs.size());
  if (n == 0) return 0.0;
  const Eigen::MatrixXd b = m.V * m.V.transpose();
  Eigen::MatrixXd cov(n * d, n * d);
  Eigen::VectorXd x(n * d), mean(n * d);
  for (Eigen::Index i = 0; i < n; i++) {
    x.segment(i * d, d) = xs[i];
    mean.segment(i * d, d) = m.mu;
    for (Eigen::Index j = 0; j < n; j++)
      cov.block(i * d, j * d, d, d) = i == j ? Eigen::MatrixXd(b + m.Sigma) : b;
  }
  return DenseLogPdf(x, mean, cov);
}

Eigen::MatrixXd Rows(const std::vector<Eigen::VectorXd> &xs, Eigen::Index d) {
  Eigen::MatrixXd x(xs.size(), d);
  for (std::size_t i = 0; i < xs.size(); i++) x.row(i) = xs[i].transpose();
  return x;
}

TEST_CASE("scalar marginal density") {
  CHECK(Plda(Scalar(0, 0, 1)).MarginalLogDensity(Vec({0})) ==
        doctest::Approx(-0.5 * std::log(2 * kPi)).epsilon(1e-14));
  const Plda p(Scalar(0, 1, 1));
  CHECK(p.MarginalLogDensity(Vec({0})) ==
        doctest::Approx(-0.5 * std::log(4 * kPi)).epsilon(1e-14));
  // Marginalizing y numerically gives the same value.
  const double q = Integrate(
      [](double y) { return std::exp(NormalLogPdf(0, y, 1) + NormalLogPdf(y, 0, 1)); },
      -12, 12, 20000);
  CHECK(std::abs(std::log(q) - p.MarginalLogDensity(Vec({0}))) < 1e-9);
  const double mass = Integrate(
      [&](double x) { return std::exp(p.MarginalLogDensity(Vec({x}))); }, -20, 20,
      4000);
  CHECK(std::abs(mass - 1.0) < 1e-3);
}

TEST_CASE("enrollment posterior") {
  const Plda p(Scalar(0, 1, 1));
  SUBCASE("empty enrollment is the prior") {
    const ClassEnrollment e = p.Enroll(4, Eigen::MatrixXd(0, 1));
    CHECK(e.label == 4);
    CHECK(e.count == 0);
    CHECK(e.mean(0) == 0.0);
    CHECK(e.cov(0, 0) == 1.0);
  }
  SUBCASE("single instance") {
    const ClassEnrollment e = p.Enroll(0, Eigen::MatrixXd::Constant(1, 1, 2.0));
    CHECK(e.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(e.mean(0) == doctest::Approx(1.0).epsilon(1e-14));
    // Posterior moments by quadrature over y.
    auto post = [](double y) {
      return std::exp(NormalLogPdf(y, 0, 1) + NormalLogPdf(2, y, 1));
    };
    const double z = Integrate(post, -12, 12, 20000);
    const double mean =
        Integrate([&](double y) { return y * post(y); }, -12, 12, 20000) / z;
    const double var = Integrate([&](double y) { return (y - mean) * (y - mean) * post(y); },
                                 -12, 12, 20000) / z;
    CHECK(std::abs(mean - e.mean(0)) < 1e-8);
    CHECK(std::abs(var - e.cov(0, 0)) < 1e-8);
  }
  SUBCASE("repeated instance") {
    const ClassEnrollment e = p.Enroll(0, Eigen::MatrixXd::Constant(2, 1, 2.0));
    CHECK(e.count == 2);
    CHECK(e.cov(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(e.mean(0) == doctest::Approx(4.0 / 3).epsilon(1e-14));
    const ClassEnrollment s = p.EnrollFromSum(0, 2, Vec({4.0}));
    CHECK(s.mean(0) == doctest::Approx(e.mean(0)).epsilon(1e-15));
  }
  SUBCASE("no class subspace") {
    PldaModel m = RandomPldaModel(3, 2, 1.0, 1.0, 5);
    m.V.setZero();
    const Plda z(m);
    const ClassEnrollment e = z.Enroll(0, Eigen::MatrixXd::Random(4, 3));
    CHECK(e.mean.norm() == 0.0);
    CHECK((e.cov - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  }
}

TEST_CASE("scalar conditional density and log-likelihood ratio") {
  const Plda p(Scalar(0, 1, 1));
  const ClassEnrollment e = p.Enroll(0, Eigen::MatrixXd::Constant(1, 1, 2.0));
  const double value = p.ConditionalLogDensity(e, Vec({1}));
  CHECK(value == doctest::Approx(NormalLogPdf(1, 1, 1.5)).epsilon(1e-14));
  const double q = Integrate(
      [](double y) { return std::exp(NormalLogPdf(1, y, 1) + NormalLogPdf(y, 1, 0.5)); },
      -12, 12, 20000);
  CHECK(std::abs(std::log(q) - value) < 1e-6);

  // log p(x, x_e) / (p(x) p(x_e)) for the pair (2, 2) with cov [[2,1],[1,2]].
  const double joint = -std::log(2 * kPi) - 0.5 * std::log(3.0) -
                       0.5 * (2 * 4 - 2 * 4 + 2 * 4) / 3.0;
  const double marg = NormalLogPdf(2, 0, 2);
  const double llr = p.Llr(e, Vec({2}));
  CHECK(std::abs(llr - (joint - 2 * marg)) < 1e-8);
  CHECK(llr == doctest::Approx(p.ConditionalLogDensity(e, Vec({2})) -
                               p.MarginalLogDensity(Vec({2}))));

  const ClassEnrollment prior = p.Enroll(0, Eigen::MatrixXd(0, 1));
  CHECK(p.Llr(prior, Vec({0.7})) == doctest::Approx(0.0).scale(1.0));
  CHECK(std::abs(p.ConditionalLogDensity(prior, Vec({0.7})) -
                 p.MarginalLogDensity(Vec({0.7}))) < 1e-14);

  const Plda flat(Scalar(0.5, 0, 2));
  const ClassEnrollment ef = flat.Enroll(0, Eigen::MatrixXd::Constant(3, 1, 9.0));
  CHECK(flat.ConditionalLogDensity(ef, Vec({-1})) ==
        doctest::Approx(NormalLogPdf(-1, 0.5, 2)).epsilon(1e-14));
  CHECK(std::abs(flat.Llr(ef, Vec({-1}))) < 1e-14);
}

TEST_CASE("multivariate densities match the joint Gaussian") {
  for (uint64 seed : {1, 2, 3}) {
    for (std::size_t dy : {1, 2}) {
      const PldaModel m = RandomPldaModel(3, dy, 1.0, 0.8, seed);
      const Plda p(m);
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.0, 1.5);
      std::vector<Eigen::VectorXd> xs;
      for (int n = 0; n <= 4; n++) {
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; i++) x[i] = normal(rng);
        const ClassEnrollment e = p.Enroll(0, Rows(xs, 3));
        std::vector<Eigen::VectorXd> with = xs;
        with.push_back(x);
        const double cond = JointLogPdf(m, with) - JointLogPdf(m, xs);
        CHECK(std::abs(p.ConditionalLogDensity(e, x) - cond) < 1e-6);
        CHECK(std::abs(p.MarginalLogDensity(x) - JointLogPdf(m, {x})) < 1e-6);
        CHECK(std::abs(p.Llr(e, x) - (cond - JointLogPdf(m, {x}))) < 1e-6);

        // Posterior of y by Gaussian conditioning of (y, x_1..x_n).
        if (n > 0) {
          const Eigen::Index k = Eigen::Index(dy), nd = Eigen::Index(3 * n);
          Eigen::MatrixXd cxx(nd, nd), cyx(k, nd);
          Eigen::VectorXd r(nd);
          for (int i = 0; i < n; i++) {
            r.segment(3 * i, 3) = xs[i] - m.mu;
            cyx.block(0, 3 * i, k, 3) = m.V.transpose();
            for (int j = 0; j < n; j++)
              cxx.block(3 * i, 3 * j, 3, 3) =
                  m.V * m.V.transpose() + (i == j ? m.Sigma : Eigen::MatrixXd::Zero(3, 3));
          }
          const Eigen::MatrixXd gain = cxx.ldlt().solve(cyx.transpose()).transpose();
          const Eigen::VectorXd mean = gain * r;
          const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(k, k) - gain * cyx.transpose();
          CHECK((mean - e.mean).cwiseAbs().maxCoeff() < 1e-9);
          CHECK((cov - e.cov).cwiseAbs().maxCoeff() < 1e-9);
        }
        xs.push_back(x);
      }
    }
  }
}

TEST_CASE("predictive covariance shrinks with more enrollment") {
  const PldaModel m = RandomPldaModel(6, 3, 1.0, 1.0, 9);
  const Plda p(m);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n <= 64; n++) {
    const Eigen::MatrixXd c = m.Sigma + m.V * p.PosteriorCov(n) * m.V.transpose();
    CHECK(c.trace() < prev);
    prev = c.trace();
  }
  CHECK(prev - m.Sigma.trace() < 0.05 * (m.V * m.V.transpose()).trace());
}

// Draws n samples of N(mean, cov).
std::vector<Eigen::VectorXd> Draw(const Eigen::VectorXd &mean, const Eigen::MatrixXd &cov,
                                  std::size_t n, std::mt19937_64 *rng) {
  const Eigen::MatrixXd l = cov.llt().matrixL();
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> out;
  for (std::size_t s = 0; s < n; s++) {
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); i++) z[i] = normal(*rng);
    out.push_back(mean + l * z);
  }
  return out;
}

TEST_CASE("expected log-likelihood ratio under the marginal is not positive") {
  for (uint64 seed : {4, 5}) {
    const PldaModel m = RandomPldaModel(5, 2, 1.0, 0.7, seed);
    const Plda p(m);
    std::mt19937_64 rng(seed + 100);
    const Eigen::MatrixXd marg = m.V * m.V.transpose() + m.Sigma;
    for (std::size_t n : {1, 4}) {
      const auto enroll = Draw(m.mu, marg, n, &rng);
      const ClassEnrollment e = p.Enroll(0, Rows(enroll, 5));
      double sum = 0.0, sq = 0.0;
      const std::size_t count = 10000;
      for (const Eigen::VectorXd &x : Draw(m.mu, marg, count, &rng)) {
        const double l = p.Llr(e, x);
        sum += l;
        sq += l * l;
      }
      const double mean = sum / count;
      const double se = std::sqrt((sq / count - mean * mean) / count);
      CHECK(mean <= 3 * se);
    }
  }
}

ClassStats Stats(const std::vector<Embedding> &data) { return ComputeClassStats(data); }

std::vector<Embedding> Points(const std::vector<std::vector<std::vector<double>>> &classes) {
  std::vector<Embedding> out;
  for (std::size_t c = 0; c < classes.size(); c++)
    for (std::size_t i = 0; i < classes[c].size(); i++)
      out.push_back({"p" + std::to_string(c) + "-" + std::to_string(i), c, classes[c][i]});
  return out;
}

TEST_CASE("one EM iteration matches the update formulas") {
  const std::vector<std::vector<std::vector<double>>> pts = {
      {{1.0, 2.0}, {1.5, 1.0}, {0.3, 2.2}, {1.1, 1.7}},
      {{-2.0, 0.5}, {-1.4, 0.1}, {-2.6, 0.9}, {-1.9, -0.2}},
      {{0.2, -1.8}, {0.9, -2.4}, {-0.5, -1.1}, {0.4, -2.0}}};
  const std::vector<Embedding> data = Points(pts);
  const ClassStats stats = Stats(data);

  // Scalar re-implementation for d_x = 2, d_y = 1.
  double mu[2] = {0, 0};
  for (const auto &c : pts)
    for (const auto &x : c) {
      mu[0] += x[0] / 12;
      mu[1] += x[1] / 12;
    }
  const double v[2] = {0.8, -0.3};
  const double s[2][2] = {{0.6, 0.1}, {0.1, 0.4}};
  const double det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
  const double si[2][2] = {{s[1][1] / det, -s[0][1] / det}, {-s[1][0] / det, s[0][0] / det}};
  const double w[2] = {si[0][0] * v[0] + si[0][1] * v[1], si[1][0] * v[0] + si[1][1] * v[1]};
  const double vsv = v[0] * w[0] + v[1] * w[1];
  double m[3], cc[3];
  double a = 0.0, b[2] = {0, 0};
  for (int c = 0; c < 3; c++) {
    double sum[2] = {0, 0};
    for (const auto &x : pts[c]) {
      sum[0] += x[0] - mu[0];
      sum[1] += x[1] - mu[1];
    }
    cc[c] = 1.0 / (1.0 + 4 * vsv);
    m[c] = cc[c] * (w[0] * sum[0] + w[1] * sum[1]);
    a += 4 * (cc[c] + m[c] * m[c]);
    b[0] += sum[0] * m[c];
    b[1] += sum[1] * m[c];
  }
  const double vn[2] = {b[0] / a, b[1] / a};
  // Sigma as the mean expected residual outer product.
  double sn[2][2] = {{0, 0}, {0, 0}};
  for (int c = 0; c < 3; c++)
    for (const auto &x : pts[c]) {
      const double r[2] = {x[0] - mu[0] - vn[0] * m[c], x[1] - mu[1] - vn[1] * m[c]};
      for (int i = 0; i < 2; i++)
        for (int j = 0; j < 2; j++) sn[i][j] += (r[i] * r[j] + vn[i] * cc[c] * vn[j]) / 12;
    }

  PldaModel start;
  start.mu = Vec({mu[0], mu[1]});
  start.V = Eigen::MatrixXd(2, 1);
  start.V << v[0], v[1];
  start.Sigma = Eigen::MatrixXd(2, 2);
  start.Sigma << s[0][0], s[0][1], s[1][0], s[1][1];
  const PldaModel next = EmIteration(start, stats);
  // The expanded step rescales V by the root of the mean latent second moment.
  double r2 = 0.0;
  for (int c = 0; c < 3; c++) r2 += (cc[c] + m[c] * m[c]) / 3;
  const PldaModel expanded = EmIteration(start, stats, true);
  CHECK(std::abs(expanded.V(0, 0) - vn[0] * std::sqrt(r2)) < 1e-10);
  CHECK(std::abs(expanded.V(1, 0) - vn[1] * std::sqrt(r2)) < 1e-10);
  CHECK((expanded.Sigma - next.Sigma).norm() == 0.0);
  CHECK(std::abs(next.mu[0] - mu[0]) < 1e-12);
  CHECK(std::abs(next.mu[1] - mu[1]) < 1e-12);
  CHECK(std::abs(next.V(0, 0) - vn[0]) < 1e-10);
  CHECK(std::abs(next.V(1, 0) - vn[1]) < 1e-10);
  for (int i = 0; i < 2; i++)
    for (int j = 0; j < 2; j++) CHECK(std::abs(next.Sigma(i, j) - sn[i][j]) < 1e-10);

  // The E-step with V = 0 leaves every class at the prior.
  PldaModel flat = start;
  flat.V.setZero();
  const Plda pf(flat);
  for (std::size_t c = 0; c < 3; c++) {
    const ClassEnrollment e = pf.EnrollFromSum(c, 4, stats.sums[c]);
    CHECK(e.mean(0) == 0.0);
    CHECK(e.cov(0, 0) == 1.0);
  }
}

TEST_CASE("total log-likelihood matches the per-class joint densities") {
  const PldaModel m = RandomPldaModel(3, 2, 1.0, 1.0, 12);
  EmbeddingSpec spec;
  spec.num_classes = 4;
  spec.instances_per_class = 3;
  std::vector<Embedding> data = SamplePldaEmbeddings(m, spec);
  data.pop_back();  // unequal class sizes
  ClassStats stats = Stats(data);
  PldaModel at = m;
  at.mu = stats.mean;
  double oracle = 0.0;
  for (std::size_t c = 0; c < 4; c++) {
    std::vector<Eigen::VectorXd> xs;
    for (const Embedding &e : data)
      if (e.label == c) xs.push_back(Eigen::Map<const Eigen::VectorXd>(e.values.data(), 3));
    oracle += JointLogPdf(at, xs);
  }
  CHECK(std::abs(TotalLogLikelihood(at, stats) - oracle) < 1e-8);
}

TEST_CASE("EM log-likelihood never decreases") {
  for (uint64 seed : {21, 22, 23, 24}) {
    const PldaModel truth = RandomPldaModel(6, 3, 1.0, 1.0, seed);
    EmbeddingSpec spec;
    spec.num_classes = 15;
    spec.instances_per_class = 6;
    spec.seed = seed;
    EmOptions o;
    o.latent_dim = 1 + seed % 4;
    o.iterations = 40;
    o.min_gain_per_instance = 0.0;
    o.seed = seed;
    const EmResult r = EmFit(SamplePldaEmbeddings(truth, spec), o);
    REQUIRE(r.loglik.size() == 41);
    for (std::size_t i = 1; i < r.loglik.size(); i++)
      CHECK(r.loglik[i] >= r.loglik[i - 1] - 1e-8);
    CHECK(r.model.mu.size() == 6);
    CHECK(std::size_t(r.model.V.cols()) == o.latent_dim);
  }
}

double RelFrobenius(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  return (a - b).norm() / b.norm();
}

// Method-of-moments fit of a balanced data set: within-class covariance from
// the residuals, between-class covariance from the class means with the
// within share removed, truncated to the leading latent_dim eigenpairs.
void MomentFit(const std::vector<Embedding> &data, std::size_t latent_dim,
               Eigen::MatrixXd *between, Eigen::MatrixXd *within) {
  std::map<std::size_t, std::vector<const Embedding *>> by;
  for (const Embedding &e : data) by[e.label].push_back(&e);
  const Eigen::Index d = Eigen::Index(data[0].values.size());
  Eigen::VectorXd grand = Eigen::VectorXd::Zero(d);
  for (const Embedding &e : data) grand += Eigen::Map<const Eigen::VectorXd>(e.values.data(), d);
  grand /= double(data.size());
  Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(d, d), sw = Eigen::MatrixXd::Zero(d, d);
  double n = 0.0;
  for (const auto &[label, members] : by) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const Embedding *e : members) mean += Eigen::Map<const Eigen::VectorXd>(e->values.data(), d);
    mean /= double(members.size());
    n = double(members.size());
    for (const Embedding *e : members) {
      const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(e->values.data(), d) - mean;
      sw += r * r.transpose();
    }
    sb += (mean - grand) * (mean - grand).transpose();
  }
  *within = sw / double(data.size() - by.size());
  Eigen::MatrixXd b = sb / double(by.size()) - *within / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  *between = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < latent_dim; k++) {
    const Eigen::Index i = d - 1 - Eigen::Index(k);
    *between += es.eigenvalues()[i] * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
  }
}

TEST_CASE("EM recovers a known model") {
  const PldaModel truth = RandomPldaModel(8, 2, 1.0, 1.0, 17);
  EmbeddingSpec spec;
  spec.num_classes = 200;
  spec.instances_per_class = 50;
  spec.seed = 17;
  const std::vector<Embedding> data = SamplePldaEmbeddings(truth, spec);
  EmOptions o;
  o.latent_dim = 2;
  const EmResult r = EmFit(data, o);
  const Eigen::MatrixXd vv = r.model.V * r.model.V.transpose();
  const double between = RelFrobenius(vv, truth.V * truth.V.transpose());
  const double within = RelFrobenius(r.model.Sigma, truth.Sigma);
  MESSAGE("between error " << between << ", within error " << within << " after "
                           << r.loglik.size() - 1 << " iterations");
  CHECK(r.loglik.size() - 1 < o.iterations);  // converged before the cap
  CHECK(within < 0.1);
  // With 200 classes the between-class estimate carries roughly 10% sampling
  // error, so it is compared to the moment estimator of the same sample.
  Eigen::MatrixXd mb, mw;
  MomentFit(data, 2, &mb, &mw);
  CHECK(RelFrobenius(vv, mb) < 0.02);
  CHECK(RelFrobenius(r.model.Sigma, mw) < 0.02);
  CHECK(between < 0.25);
}

TEST_CASE("latent expansion reaches the plain EM fixed point faster") {
  const PldaModel truth = RandomPldaModel(5, 2, 2.0, 0.5, 31);
  EmbeddingSpec spec;
  spec.num_classes = 40;
  spec.instances_per_class = 10;
  const std::vector<Embedding> data = SamplePldaEmbeddings(truth, spec);
  EmOptions fast, slow;
  fast.iterations = 60;
  slow.iterations = 3000;
  fast.min_gain_per_instance = slow.min_gain_per_instance = 1e-13;
  slow.expand_latent = false;
  const EmResult a = EmFit(data, fast), b = EmFit(data, slow);
  CHECK(a.loglik.size() < b.loglik.size());
  CHECK(a.loglik.back() >= b.loglik.back() - 1e-3);
  // The expanded fit is a fixed point of the plain update.
  const ClassStats stats = ComputeClassStats(data);
  const PldaModel again = EmIteration(a.model, stats);
  CHECK(RelFrobenius(again.V * again.V.transpose(), a.model.V * a.model.V.transpose()) < 1e-4);
  CHECK(RelFrobenius(again.Sigma, a.model.Sigma) < 1e-6);
}

TEST_CASE("EM input checks and degenerate data") {
  EmOptions o;
  CHECK_THROWS_WITH_AS(EmFit(Points({{{1, 2}, {2, 3}}}), o),
                       doctest::Contains("at least 2 classes"), Error);
  CHECK_THROWS_WITH_AS(EmFit(Points({{{1, 2}}, {{2, 3}}}), o),
                       doctest::Contains("2 instances per class"), Error);
  o.latent_dim = 3;
  CHECK_THROWS_WITH_AS(EmFit(Points({{{1, 2}, {2, 1}}, {{2, 3}, {3, 3}}}), o),
                       doctest::Contains("latent dimension 3"), Error);

  SUBCASE("latent dimension above the class count still fits") {
    EmOptions wide;
    wide.latent_dim = 3;
    const EmResult r =
        EmFit(Points({{{1, 2, 0}, {2, 1, 1}}, {{2, 3, 1}, {3, 3, 0}}}), wide);
    CHECK_NOTHROW(r.model.Validate());
  }
  SUBCASE("a constant coordinate triggers the ridge") {
    std::vector<std::vector<std::vector<double>>> pts;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (int c = 0; c < 5; c++) {
      pts.emplace_back();
      const double shift = normal(rng);
      for (int i = 0; i < 6; i++) pts.back().push_back({shift + normal(rng), normal(rng), 4.0});
    }
    EmOptions one;
    one.latent_dim = 1;
    one.iterations = 5;
    const EmResult r = EmFit(Points(pts), one);
    CHECK(r.ridge_events > 0);
    CHECK_NOTHROW(r.model.Validate());
  }
}

TEST_CASE("model validation") {
  PldaModel m = RandomPldaModel(3, 2, 1.0, 1.0, 1);
  CHECK_NOTHROW(m.Validate());
  PldaModel bad = m;
  bad.Sigma(0, 1) += 0.5;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = m;
  bad.Sigma = -bad.Sigma;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = m;
  bad.V = Eigen::MatrixXd::Ones(3, 4);
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = m;
  bad.mu[1] = std::nan("");
  CHECK_THROWS_AS(bad.Validate(), Error);
  CHECK_THROWS_WITH_AS(Plda(m).MarginalLogDensity(Vec({1, 2})),
                       doctest::Contains("dimension"), Error);
}

TEST_CASE("model text round trip") {
  const PldaModel m = RandomPldaModel(5, 2, 1.3, 0.9, 8);
  const std::string text = FormatPldaModel(m);
  const PldaModel back = ParsePldaModel(text);
  CHECK(FormatPldaModel(back) == text);
  const Plda a(m), b(back);
  std::mt19937_64 rng(1);
  for (const Eigen::VectorXd &x : Draw(m.mu, m.Sigma, 20, &rng)) {
    CHECK(std::abs(a.MarginalLogDensity(x) - b.MarginalLogDensity(x)) < 1e-12);
  }
  CHECK_THROWS_AS(ParsePldaModel("{\"format\": \"other\"}"), Error);
  nlohmann::json j = nlohmann::json::parse(text);
  j["version"] = 7;
  CHECK_THROWS_WITH_AS(ParsePldaModel(j.dump()), doctest::Contains("version"), Error);
  j = nlohmann::json::parse(text);
  j["Sigma"].erase(0);
  CHECK_THROWS_AS(ParsePldaModel(j.dump()), Error);
}

}  // namespace
}  // namespace lipembed
