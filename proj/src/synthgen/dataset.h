// synthgen/dataset.h

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

#ifndef LIPEMBED_SYNTHGEN_DATASET_H_
#define LIPEMBED_SYNTHGEN_DATASET_H_

#include <string>
#include <vector>

#include "base/common.h"

namespace lipembed {

struct ManifestRecord {
  std::string source_id;
  std::string file;
  std::size_t label = 0;
  std::string split;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  /// Free-form description of how the data was generated; written as a
  /// leading "#" comment line.
  std::string spec_echo;

  /// Throws on duplicate source ids.
  void Validate() const;
};

/// CSV with header "source-id,file,label,split".
std::string FormatManifest(const DatasetManifest &m);
DatasetManifest ParseManifest(const std::string &text);
void WriteManifest(const DatasetManifest &m, const std::string &path);
DatasetManifest ReadManifest(const std::string &path);

/// Class-stratified random partition of item indices: within every class the
/// items are shuffled and dealt out in proportion to the fractions (largest
/// remainder rounding).  Each output list is sorted.  Fractions must sum to
/// 1; a class with fewer items than there are (non-empty) splits is
/// rejected.
std::vector<std::vector<std::size_t>> StratifiedSplit(
    const std::vector<std::size_t> &labels, const std::vector<double> &fractions,
    uint64 seed);

/// Applies StratifiedSplit to a manifest; record i of split k gets the split
/// name names[k].
std::vector<DatasetManifest> SplitManifest(const DatasetManifest &m,
                                           const std::vector<double> &fractions,
                                           const std::vector<std::string> &names,
                                           uint64 seed);

}  // namespace lipembed

#endif  // LIPEMBED_SYNTHGEN_DATASET_H_
