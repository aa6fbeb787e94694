// base/io.h

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

#ifndef LIPEMBED_BASE_IO_H_
#define LIPEMBED_BASE_IO_H_

#include <cstddef>
#include <string>

#include "base/common.h"

namespace lipembed {

std::string ReadFile(const std::string &path);

/// Writes to a temporary sibling and renames it over path, so readers never
/// observe a partial file.
void WriteFileAtomic(const std::string &path, const std::string &contents);

/// Sibling path with the extension replaced (or appended).
std::string ReplaceExtension(const std::string &path, const std::string &ext);

// Little-endian encoding, independent of the host byte order.
void AppendU32(std::string *out, uint32 v);
void AppendI32(std::string *out, int32 v);
void AppendF32(std::string *out, float v);
uint32 ReadU32(const std::string &in, std::size_t offset);
int32 ReadI32(const std::string &in, std::size_t offset);
float ReadF32(const std::string &in, std::size_t offset);

}  // namespace lipembed

#endif  // LIPEMBED_BASE_IO_H_
