// base/embedding.cc

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

#include "base/embedding.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "base/io.h"

namespace lipembed {

std::size_t CheckEmbeddings(const std::vector<Embedding> &set) {
  if (set.empty()) LE_ERR << "empty embedding set";
  const std::size_t d = set[0].values.size();
  if (d == 0) LE_ERR << "embeddings have no components";
  for (const Embedding &e : set) {
    if (e.values.size() != d)
      LE_ERR << "embedding " << e.id << " has length " << e.values.size()
             << ", expected " << d;
    for (double v : e.values)
      if (!std::isfinite(v)) LE_ERR << "embedding " << e.id << " is not finite";
  }
  return d;
}

std::map<std::size_t, std::vector<std::size_t>> GroupByLabel(
    const std::vector<Embedding> &set) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < set.size(); i++) groups[set[i].label].push_back(i);
  return groups;
}

std::string FormatEmbeddings(const std::vector<Embedding> &set) {
  const std::size_t d = CheckEmbeddings(set);
  std::string out = "label,id";
  for (std::size_t j = 0; j < d; j++) out += ",v" + std::to_string(j);
  out += "\n";
  char buf[32];
  for (const Embedding &e : set) {
    if (e.id.find_first_of(",\n") != std::string::npos)
      LE_ERR << "embedding id '" << e.id << "' contains a delimiter";
    out += std::to_string(e.label) + "," + e.id;
    for (double v : e.values) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::vector<Embedding> ParseEmbeddings(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) LE_ERR << "embedding file is empty";
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t columns = 1;
  for (char ch : line) columns += ch == ',';
  if (line.rfind("label,id,v0", 0) != 0 || columns < 3)
    LE_ERR << "embedding header must start with 'label,id,v0', got '" << line << "'";
  const std::size_t d = columns - 2;

  std::vector<Embedding> set;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != columns)
      LE_ERR << "embedding line " << line_no << " has " << f.size()
             << " columns, header has " << columns;
    Embedding e;
    char *end = nullptr;
    const long long label = std::strtoll(f[0].c_str(), &end, 10);
    if (f[0].empty() || *end != '\0' || label < 0)
      LE_ERR << "embedding line " << line_no << " has invalid label '" << f[0] << "'";
    e.label = std::size_t(label);
    e.id = f[1];
    e.values.resize(d);
    for (std::size_t j = 0; j < d; j++) {
      e.values[j] = std::strtod(f[j + 2].c_str(), &end);
      if (f[j + 2].empty() || *end != '\0')
        LE_ERR << "embedding line " << line_no << " has invalid value '"
               << f[j + 2] << "'";
    }
    set.push_back(std::move(e));
  }
  CheckEmbeddings(set);
  return set;
}

void WriteEmbeddings(const std::vector<Embedding> &set, const std::string &path) {
  WriteFileAtomic(path, FormatEmbeddings(set));
}

std::vector<Embedding> ReadEmbeddings(const std::string &path) {
  return ParseEmbeddings(ReadFile(path));
}

}  // namespace lipembed
