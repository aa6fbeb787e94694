// synthgen/embeddings.h

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

#ifndef LIPEMBED_SYNTHGEN_EMBEDDINGS_H_
#define LIPEMBED_SYNTHGEN_EMBEDDINGS_H_

#include <vector>

#include "base/embedding.h"
#include "plda/plda.h"

namespace lipembed {

struct EmbeddingSpec {
  std::size_t num_classes = 10;
  std::size_t instances_per_class = 50;
  /// Labels run from first_label to first_label + num_classes - 1.
  std::size_t first_label = 0;
  uint64 seed = 17;
};

/// Draws y_c ~ N(0, I) per class and x = mu + V y_c + eps, eps ~ N(0, Sigma)
/// per instance.  Every class uses its own derived random stream.
std::vector<Embedding> SamplePldaEmbeddings(const PldaModel &model,
                                            const EmbeddingSpec &spec);

/// A random generator model: mu ~ N(0, I), V entries ~ N(0, between_scale^2),
/// Sigma = within_scale^2 (A A^T / d_x + I) / 2 for a Gaussian A.
PldaModel RandomPldaModel(std::size_t dim, std::size_t latent_dim,
                          double between_scale, double within_scale, uint64 seed);

/// Splits by label into [0, num_seen) and the rest, preserving order.
void PartitionByLabel(const std::vector<Embedding> &set, std::size_t num_seen,
                      std::vector<Embedding> *seen, std::vector<Embedding> *unseen);

}  // namespace lipembed

#endif  // LIPEMBED_SYNTHGEN_EMBEDDINGS_H_
