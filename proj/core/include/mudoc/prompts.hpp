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

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mudoc::prompts {

/// A versioned template shipped with the library. Placeholders look like {name}.
struct Prompt {
    std::string_view name;
    int version = 1;
    std::string_view text;

    /// sha256 of the template text; recorded wherever the prompt's output is persisted.
    std::string hash() const;
};

const std::vector<Prompt>& all();

/// Latest version of the named prompt. Raises InvalidArgument for unknown names.
const Prompt& get(std::string_view name);

/// Replaces every {identifier} with vars[identifier]. Braces that do not enclose a
/// lowercase identifier are left alone; a missing variable raises InvalidArgument.
std::string render(std::string_view text, const std::map<std::string, std::string>& vars);

}  // namespace mudoc::prompts
