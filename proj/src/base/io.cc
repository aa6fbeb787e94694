// base/io.cc

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

#include "base/io.h"

#include <bit>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lipembed {

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) LE_ERR << "cannot open " << path;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) LE_ERR << "error reading " << path;
  return ss.str();
}

void WriteFileAtomic(const std::string &path, const std::string &contents) {
  const std::string tmp = path + ".tmp";
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!dir.empty()) std::filesystem::create_directories(dir, ec);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) LE_ERR << "cannot write " << tmp;
    out.write(contents.data(), std::streamsize(contents.size()));
    out.flush();
    if (!out) LE_ERR << "error writing " << tmp;
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    LE_ERR << "cannot move " << tmp << " to " << path;
  }
}

std::string ReplaceExtension(const std::string &path, const std::string &ext) {
  std::filesystem::path p(path);
  p.replace_extension(ext);
  return p.string();
}

void AppendU32(std::string *out, uint32 v) {
  for (int i = 0; i < 4; i++) out->push_back(char((v >> (8 * i)) & 0xFF));
}

void AppendI32(std::string *out, int32 v) { AppendU32(out, uint32(v)); }

void AppendF32(std::string *out, float v) {
  AppendU32(out, std::bit_cast<uint32>(v));
}

uint32 ReadU32(const std::string &in, std::size_t offset) {
  if (offset + 4 > in.size())
    LE_ERR << "truncated data: need 4 bytes at offset " << offset << ", have "
           << in.size();
  uint32 v = 0;
  for (int i = 0; i < 4; i++)
    v |= uint32(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

int32 ReadI32(const std::string &in, std::size_t offset) {
  return int32(ReadU32(in, offset));
}

float ReadF32(const std::string &in, std::size_t offset) {
  return std::bit_cast<float>(ReadU32(in, offset));
}

}  // namespace lipembed
