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

#include <unistd.h>

#include <cstdlib>
#include <random>

#include <benchmark/benchmark.h>

#include "mudoc/index.hpp"

namespace mudoc {
namespace {

namespace fs = std::filesystem;

// A 10k x 768 matrix file written once per process.
const fs::path& matrix_file() {
    static const fs::path file = [] {
        const auto path = fs::temp_directory_path() / ("mudoc-bench-" + std::to_string(::getpid()) + ".f32");
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<float> u(-1, 1);
        EmbeddingMatrix m(EmbeddingFamily::kCtxText, 768);
        std::vector<float> row(768);
        for (int i = 0; i < 10000; ++i) {
            for (auto& x : row) x = u(rng);
            m.append("c" + std::to_string(i), row);
        }
        write_file_atomic(path, m.serialize());
        std::atexit([] { fs::remove(matrix_file()); });
        return path;
    }();
    return file;
}

void BM_ReadMatrix(benchmark::State& state) {
    const bool mmap = state.range(0) != 0;
    const auto& file = matrix_file();
    for (auto _ : state) benchmark::DoNotOptimize(EmbeddingMatrix::read(file, EmbeddingFamily::kCtxText, mmap));
    state.SetLabel(mmap ? "mmap" : "copy");
}
BENCHMARK(BM_ReadMatrix)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace mudoc
