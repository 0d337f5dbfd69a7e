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

#include <random>

#include <benchmark/benchmark.h>

#include "mudoc/ingestion.hpp"
#include "mudoc/synthetic.hpp"

namespace mudoc {
namespace {

std::vector<Snippet> snippets(int count, std::size_t chars) {
    std::vector<Snippet> out;
    for (int i = 0; i < count; ++i) {
        Snippet s;
        s.doc_id = "d";
        s.snippet_id = "d-p0-r" + std::to_string(i);
        s.raw_text = synthetic::prose(static_cast<std::uint32_t>(i), static_cast<int>(chars / 6));
        out.push_back(std::move(s));
    }
    return out;
}

void BM_BuildChunks(benchmark::State& state) {
    const auto input = snippets(static_cast<int>(state.range(0)), 700);
    const IngestionConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(ingest::build_chunks(input, config));
}
BENCHMARK(BM_BuildChunks)->Arg(50)->Arg(500)->Unit(benchmark::kMicrosecond);

void BM_PaginatePage(benchmark::State& state) {
    synthetic::Options o;
    o.pages = 1;
    o.figures = 1;
    const auto doc = synthetic::generate(o);
    for (auto _ : state) benchmark::DoNotOptimize(ingest::paginate(doc.pdf, static_cast<double>(state.range(0))));
}
BENCHMARK(BM_PaginatePage)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace mudoc
