// Copyright 2026 The decpomdp-pbp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

// Progress logging to stderr, controlled by the DECPOMDP_LOG environment
// variable: unset or empty disables it, a number sets the verbosity, any
// other non-empty value means level 1.

namespace decpomdp {

inline int log_level() {
  static const int level = [] {
    const char* v = std::getenv("DECPOMDP_LOG");
    if (!v || !*v) return 0;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end && *end == '\0') return static_cast<int>(n);
    return 1;
  }();
  return level;
}

inline void log_line(int level, const std::string& msg) {
  if (log_level() >= level) std::clog << "[decpomdp] " << msg << std::endl;
}

}  // namespace decpomdp
