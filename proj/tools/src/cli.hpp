// Copyright (C) 2026 The mudoc Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mudoc::cli {

/// Stable process exit codes.
enum ExitCode : int {
    kOk = 0,
    kInputError = 1,
    kProviderError = 2,
    kCorruptIndex = 3,
};

/// Runs the mudoc command line with argv-style arguments (args[0] is the program name).
/// Normal output goes to out, diagnostics and the effective config to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mudoc::cli
