// base/common.cc

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

#include "base/common.h"

#include <atomic>
#include <exception>
#include <iostream>

namespace lipembed {

namespace {
std::atomic<int> g_verbose_level{0};
}

int GetVerboseLevel() { return g_verbose_level.load(); }
void SetVerboseLevel(int level) { g_verbose_level.store(level); }

namespace internal {

MessageLogger::~MessageLogger() noexcept(false) {
  switch (severity_) {
    case kError:
      // Don't throw while another exception is unwinding the stack.
      if (std::uncaught_exceptions() > 0) {
        std::cerr << "ERROR (" << func_ << "): " << ss_.str() << '\n';
        return;
      }
      throw Error(std::string(func_) + ": " + ss_.str());
    case kWarning:
      std::cerr << "WARNING (" << func_ << "): " << ss_.str() << '\n';
      break;
    case kLog:
      if (verbose_ <= GetVerboseLevel())
        std::cerr << "LOG (" << func_ << "): " << ss_.str() << '\n';
      break;
  }
}

}  // namespace internal
}  // namespace lipembed
