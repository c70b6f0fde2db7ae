// Copyright 2026 The GWI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace gwi::diag {

// Non-fatal numerical conditions (complex eigenvalue residue, degenerate
// eigenpairs, ...) are reported through this hook. Tests may swap it out to
// count or silence warnings.
using WarnHandler = std::function<void(const std::string&)>;

inline WarnHandler& warn_handler() {
  static WarnHandler handler;
  return handler;
}

inline void warn(const std::string& message) {
  if (warn_handler()) {
    warn_handler()(message);
  } else {
    std::cerr << "[gwi] warning: " << message << '\n';
  }
}

}  // namespace gwi::diag
