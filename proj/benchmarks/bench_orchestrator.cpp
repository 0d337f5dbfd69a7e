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

#include <benchmark/benchmark.h>

#include "mudoc/orchestrator.hpp"

namespace mudoc {
namespace {

void BM_BuildContext(benchmark::State& state) {
    std::vector<ChatMessage> history;
    for (int i = 0; i < state.range(0); ++i) {
        history.push_back(i % 2 == 0 ? ChatMessage::user(std::string(400, 'u')) : ChatMessage::assistant(std::string(900, 'a')));
    }
    const auto system = ChatMessage::system("system");
    for (auto _ : state) benchmark::DoNotOptimize(build_context(system, history, 65536));
}
BENCHMARK(BM_BuildContext)->Arg(50)->Arg(500)->Unit(benchmark::kMicrosecond);

void BM_RenderResponse(benchmark::State& state) {
    std::string text;
    for (int i = 0; i < 20; ++i) {
        text += "Paragraph " + std::to_string(i) + " explains one idea in a couple of sentences.\n\n";
        if (i % 5 == 0) text += "<img src=\"doc-f" + std::to_string(i) + ".png\">\n\n";
    }
    auto caption = [](std::string_view) -> std::optional<std::string> { return std::string("caption"); };
    for (auto _ : state) benchmark::DoNotOptimize(render_response(text, caption));
}
BENCHMARK(BM_RenderResponse)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace mudoc
