// synthgen/dataset.cc

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

#include "synthgen/dataset.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "base/io.h"

namespace lipembed {

namespace {

const char kManifestHeader[] = "source-id,file,label,split";

std::vector<std::string> SplitCsv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

void DatasetManifest::Validate() const {
  std::set<std::string> seen;
  for (const ManifestRecord &r : records)
    if (!seen.insert(r.source_id).second)
      LE_ERR << "duplicate source id " << r.source_id << " in manifest";
}

std::string FormatManifest(const DatasetManifest &m) {
  m.Validate();
  std::ostringstream os;
  if (!m.spec_echo.empty()) os << "# " << m.spec_echo << "\n";
  os << kManifestHeader << "\n";
  for (const ManifestRecord &r : m.records) {
    for (const std::string *s : {&r.source_id, &r.file, &r.split})
      if (s->find_first_of(",\n") != std::string::npos)
        LE_ERR << "manifest field '" << *s << "' contains a delimiter";
    os << r.source_id << "," << r.file << "," << r.label << "," << r.split << "\n";
  }
  return os.str();
}

DatasetManifest ParseManifest(const std::string &text) {
  DatasetManifest m;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (m.spec_echo.empty()) m.spec_echo = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      continue;
    }
    if (!have_header) {
      if (line != kManifestHeader)
        LE_ERR << "manifest header must be '" << kManifestHeader << "', got '"
               << line << "'";
      have_header = true;
      continue;
    }
    const std::vector<std::string> f = SplitCsv(line);
    if (f.size() != 4)
      LE_ERR << "manifest line " << line_no << " has " << f.size()
             << " fields, expected 4";
    ManifestRecord r;
    r.source_id = f[0];
    r.file = f[1];
    try {
      std::size_t pos = 0;
      const long long label = std::stoll(f[2], &pos);
      if (pos != f[2].size() || label < 0) throw std::invalid_argument(f[2]);
      r.label = std::size_t(label);
    } catch (const std::exception &) {
      LE_ERR << "manifest line " << line_no << " has invalid label '" << f[2] << "'";
    }
    r.split = f[3];
    m.records.push_back(r);
  }
  if (!have_header) LE_ERR << "manifest has no header line";
  m.Validate();
  return m;
}

void WriteManifest(const DatasetManifest &m, const std::string &path) {
  WriteFileAtomic(path, FormatManifest(m));
}

DatasetManifest ReadManifest(const std::string &path) {
  return ParseManifest(ReadFile(path));
}

std::vector<std::vector<std::size_t>> StratifiedSplit(
    const std::vector<std::size_t> &labels, const std::vector<double> &fractions,
    uint64 seed) {
  if (fractions.empty()) LE_ERR << "no split fractions given";
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) LE_ERR << "split fractions must be non-negative";
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9)
    LE_ERR << "split fractions sum to " << total << ", not 1";

  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); i++) by_class[labels[i]].push_back(i);

  const std::size_t k = fractions.size();
  std::vector<std::vector<std::size_t>> out(k);
  std::mt19937_64 rng(seed);
  for (auto &[label, items] : by_class) {
    const std::size_t n = items.size();
    if (n < k)
      LE_ERR << "class " << label << " has " << n << " items, fewer than the "
             << k << " requested splits";
    std::shuffle(items.begin(), items.end(), rng);
    std::vector<std::size_t> count(k);
    std::vector<std::pair<double, std::size_t>> remainder;
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < k; s++) {
      const double quota = fractions[s] * double(n);
      count[s] = std::size_t(std::floor(quota + 1e-9));
      assigned += count[s];
      remainder.push_back({quota - double(count[s]), s});
    }
    std::stable_sort(remainder.begin(), remainder.end(),
                     [](const auto &a, const auto &b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n; i++, assigned++)
      count[remainder[i % k].second]++;
    std::size_t pos = 0;
    for (std::size_t s = 0; s < k; s++)
      for (std::size_t j = 0; j < count[s]; j++) out[s].push_back(items[pos++]);
  }
  for (auto &v : out) std::sort(v.begin(), v.end());
  return out;
}

std::vector<DatasetManifest> SplitManifest(const DatasetManifest &m,
                                           const std::vector<double> &fractions,
                                           const std::vector<std::string> &names,
                                           uint64 seed) {
  if (names.size() != fractions.size())
    LE_ERR << "got " << names.size() << " split names for " << fractions.size()
           << " fractions";
  m.Validate();
  std::vector<std::size_t> labels;
  for (const ManifestRecord &r : m.records) labels.push_back(r.label);
  const auto parts = StratifiedSplit(labels, fractions, seed);
  std::vector<DatasetManifest> out(parts.size());
  for (std::size_t s = 0; s < parts.size(); s++) {
    out[s].spec_echo = m.spec_echo;
    for (std::size_t i : parts[s]) {
      ManifestRecord r = m.records[i];
      r.split = names[s];
      out[s].records.push_back(r);
    }
  }
  return out;
}

}  // namespace lipembed
