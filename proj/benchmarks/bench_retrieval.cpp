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

#include "mudoc/reference.hpp"
#include "mudoc/retrieval.hpp"

namespace mudoc {
namespace {

std::vector<float> unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<float> n;
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = n(rng);
    normalize(v);
    return v;
}

DocumentIndex chunk_index(int chunks, int dim) {
    std::mt19937_64 rng(1);
    DocumentIndex index;
    EmbeddingMatrix raw(EmbeddingFamily::kCtxText, dim), cleaned(EmbeddingFamily::kCtxText, dim),
        summary(EmbeddingFamily::kCtxText, dim);
    for (int i = 0; i < chunks; ++i) {
        const auto id = "c" + std::to_string(i);
        index.chunks.push_back({id, "d", {"s"}, "", "", std::nullopt, 0, false});
        raw.append(id, unit(rng, dim));
        cleaned.append(id, unit(rng, dim));
        if (i % 2 == 0) summary.append(id, unit(rng, dim));
    }
    index.matrices.emplace(std::string(matrix::kChunkRaw), std::move(raw));
    index.matrices.emplace(std::string(matrix::kChunkCleaned), std::move(cleaned));
    index.matrices.emplace(std::string(matrix::kChunkSummary), std::move(summary));
    index.reindex();
    return index;
}

void BM_RankChunks(benchmark::State& state) {
    const auto index = chunk_index(static_cast<int>(state.range(0)), 768);
    std::mt19937_64 rng(2);
    const auto q = unit(rng, 768);
    for (auto _ : state) benchmark::DoNotOptimize(rank_chunks(index, q, 5));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RankChunks)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_RankFigures(benchmark::State& state) {
    std::mt19937_64 rng(3);
    DocumentIndex index;
    const int n = static_cast<int>(state.range(0));
    EmbeddingMatrix cc(EmbeddingFamily::kCtxText, 768), img(EmbeddingFamily::kJointImage, 512),
        cj(EmbeddingFamily::kJointText, 512);
    for (int i = 0; i < n; ++i) {
        const auto id = "f" + std::to_string(i);
        index.figures.push_back({id, "d", "s", "c", "", false});
        cc.append(id, unit(rng, 768));
        img.append(id, unit(rng, 512));
        cj.append(id, unit(rng, 512));
    }
    index.matrices.emplace(std::string(matrix::kFigureCaptionCtx), std::move(cc));
    index.matrices.emplace(std::string(matrix::kFigureImage), std::move(img));
    index.matrices.emplace(std::string(matrix::kFigureCaptionJoint), std::move(cj));
    index.reindex();
    const auto qd = unit(rng, 768);
    const auto qc = unit(rng, 512);
    for (auto _ : state) benchmark::DoNotOptimize(rank_figures(index, qd, qc, 5));
}
BENCHMARK(BM_RankFigures)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_HashingEmbedText(benchmark::State& state) {
    HashingEmbedder embedder;
    const std::string text(static_cast<std::size_t>(state.range(0)), 'a');
    std::string words;
    for (std::size_t i = 0; words.size() < text.size(); ++i) words += "word" + std::to_string(i % 97) + " ";
    for (auto _ : state) benchmark::DoNotOptimize(embedder.embed_text(words, EmbeddingFamily::kQueryText));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(words.size()));
}
BENCHMARK(BM_HashingEmbedText)->Arg(200)->Arg(2000);

}  // namespace
}  // namespace mudoc

BENCHMARK_MAIN();
