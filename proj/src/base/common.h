// base/common.h

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

#ifndef LIPEMBED_BASE_COMMON_H_
#define LIPEMBED_BASE_COMMON_H_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lipembed {

typedef std::int32_t int32;
typedef std::int64_t int64;
typedef std::uint32_t uint32;
typedef std::uint64_t uint64;

/// All recoverable failures in the toolkit are reported with this type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// 0 = warnings and errors only, 1 = progress logs, 2+ = debug.
int GetVerboseLevel();
void SetVerboseLevel(int level);

namespace internal {

class MessageLogger {
 public:
  enum Severity { kError, kWarning, kLog };
  MessageLogger(Severity severity, const char *func, int verbose = 0)
      : severity_(severity), func_(func), verbose_(verbose) {}
  // Throws for kError; this is why the destructor is not noexcept.
  ~MessageLogger() noexcept(false);
  std::ostream &stream() { return ss_; }

 private:
  Severity severity_;
  const char *func_;
  int verbose_;
  std::ostringstream ss_;
};

}  // namespace internal

#define LE_ERR                                                         \
  ::lipembed::internal::MessageLogger(                                 \
      ::lipembed::internal::MessageLogger::kError, __func__).stream()
#define LE_WARN                                                        \
  ::lipembed::internal::MessageLogger(                                 \
      ::lipembed::internal::MessageLogger::kWarning, __func__).stream()
#define LE_LOG                                                         \
  ::lipembed::internal::MessageLogger(                                 \
      ::lipembed::internal::MessageLogger::kLog, __func__, 1).stream()
#define LE_VLOG(v)                                                     \
  ::lipembed::internal::MessageLogger(                                 \
      ::lipembed::internal::MessageLogger::kLog, __func__, v).stream()

#define LE_ASSERT(cond)                                                \
  do {                                                                 \
    if (!(cond)) LE_ERR << "Assertion failed: " #cond;                 \
  } while (0)

}  // namespace lipembed

#endif  // LIPEMBED_BASE_COMMON_H_
