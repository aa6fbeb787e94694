// base/embedding.h

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

#ifndef LIPEMBED_BASE_EMBEDDING_H_
#define LIPEMBED_BASE_EMBEDDING_H_

#include <map>
#include <string>
#include <vector>

#include "base/common.h"

namespace lipembed {

/// A fixed-size vector summarizing one clip.
struct Embedding {
  std::string id;
  std::size_t label = 0;
  std::vector<double> values;
};

/// Throws unless every embedding has the same, positive length and finite
/// values; returns that length.
std::size_t CheckEmbeddings(const std::vector<Embedding> &set);

/// Indices of the embeddings of each label, in input order.
std::map<std::size_t, std::vector<std::size_t>> GroupByLabel(
    const std::vector<Embedding> &set);

/// CSV with header "label,id,v0,...,v{d-1}"; values printed with 17
/// significant digits so parsing restores them exactly.
std::string FormatEmbeddings(const std::vector<Embedding> &set);
std::vector<Embedding> ParseEmbeddings(const std::string &text);
void WriteEmbeddings(const std::vector<Embedding> &set, const std::string &path);
std::vector<Embedding> ReadEmbeddings(const std::string &path);

}  // namespace lipembed

#endif  // LIPEMBED_BASE_EMBEDDING_H_
