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

#include "mudoc/prompts.hpp"

#include "mudoc/error.hpp"
#include "mudoc/util.hpp"
#include "prompt_table.hpp"

namespace mudoc::prompts {

std::string Prompt::hash() const { return sha256_hex(text); }

const std::vector<Prompt>& all() { return detail::table(); }

const Prompt& get(std::string_view name) {
    const Prompt* best = nullptr;
    for (const auto& p : detail::table()) {
        if (p.name == name && (best == nullptr || p.version > best->version)) best = &p;
    }
    if (best == nullptr) raise(ErrorCode::kInvalidArgument, "unknown prompt: " + std::string(name));
    return *best;
}

std::string render(std::string_view text, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            std::size_t j = i + 1;
            while (j < text.size() && ((text[j] >= 'a' && text[j] <= 'z') || text[j] == '_')) ++j;
            if (j > i + 1 && j < text.size() && text[j] == '}') {
                const std::string key(text.substr(i + 1, j - i - 1));
                auto it = vars.find(key);
                if (it == vars.end()) raise(ErrorCode::kInvalidArgument, "prompt variable not provided: " + key);
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

}  // namespace mudoc::prompts
