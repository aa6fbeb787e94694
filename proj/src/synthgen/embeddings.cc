// synthgen/embeddings.cc

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

#include "synthgen/embeddings.h"

#include <cstdio>
#include <random>

namespace lipembed {

std::vector<Embedding> SamplePldaEmbeddings(const PldaModel &model,
                                            const EmbeddingSpec &spec) {
  model.Validate();
  if (spec.num_classes == 0 || spec.instances_per_class == 0)
    LE_ERR << "embedding spec needs positive class and instance counts";
  const Eigen::Index d = model.mu.size(), dy = model.V.cols();
  const Eigen::MatrixXd chol = model.Sigma.llt().matrixL();
  std::vector<Embedding> out;
  out.reserve(spec.num_classes * spec.instances_per_class);
  for (std::size_t c = 0; c < spec.num_classes; c++) {
    const std::size_t label = spec.first_label + c;
    std::seed_seq seq{uint32(spec.seed), uint32(spec.seed >> 32), uint32(label),
                      0x504C4441u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd y(dy), z(d);
    for (Eigen::Index k = 0; k < dy; k++) y[k] = normal(rng);
    const Eigen::VectorXd center = model.mu + model.V * y;
    for (std::size_t n = 0; n < spec.instances_per_class; n++) {
      for (Eigen::Index j = 0; j < d; j++) z[j] = normal(rng);
      const Eigen::VectorXd x = center + chol * z;
      Embedding e;
      char id[64];
      std::snprintf(id, sizeof(id), "e%04zu-%04zu", label, n);
      e.id = id;
      e.label = label;
      e.values.assign(x.data(), x.data() + d);
      out.push_back(std::move(e));
    }
  }
  return out;
}

PldaModel RandomPldaModel(std::size_t dim, std::size_t latent_dim,
                          double between_scale, double within_scale,
                          uint64 seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PldaModel m;
  m.mu = Eigen::VectorXd(dim);
  m.V = Eigen::MatrixXd(dim, latent_dim);
  Eigen::MatrixXd a(dim, dim);
  for (std::size_t i = 0; i < dim; i++) m.mu[i] = normal(rng);
  for (std::size_t i = 0; i < dim; i++)
    for (std::size_t k = 0; k < latent_dim; k++)
      m.V(i, k) = between_scale * normal(rng);
  for (std::size_t i = 0; i < dim; i++)
    for (std::size_t k = 0; k < dim; k++) a(i, k) = normal(rng);
  const Eigen::MatrixXd s =
      a * a.transpose() / double(dim) + Eigen::MatrixXd::Identity(dim, dim);
  m.Sigma = 0.5 * within_scale * within_scale * (s + s.transpose()) / 2.0;
  m.Validate();
  return m;
}

void PartitionByLabel(const std::vector<Embedding> &set, std::size_t num_seen,
                      std::vector<Embedding> *seen, std::vector<Embedding> *unseen) {
  seen->clear();
  unseen->clear();
  for (const Embedding &e : set) (e.label < num_seen ? seen : unseen)->push_back(e);
}

}  // namespace lipembed
