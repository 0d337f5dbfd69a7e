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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mudoc/index.hpp"
#include "mudoc/providers.hpp"

namespace mudoc::fixtures {

/// Fresh directory under the system temp dir, removed with everything in it on destruction.
class TempDir {
 public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
    std::filesystem::path path_;
};

/// Prose of exactly chars code points; about one word in forty carries a two-byte letter.
std::string random_text(std::mt19937_64& rng, std::size_t chars);

std::vector<float> random_unit_vector(std::mt19937_64& rng, int dim);

struct RandomIndexOptions {
    std::uint64_t seed = 1;
    int pages = 3;
    int min_snippets_per_page = 1;
    int max_snippets_per_page = 5;
    std::size_t min_snippet_chars = 10;
    std::size_t max_snippet_chars = 6000;
    int figures = 2;
    int text_dim = 64;
    int joint_dim = 32;
    IngestionConfig ingestion;
    /// When set, vectors come from this embedder; otherwise they are random unit vectors.
    std::shared_ptr<Embedder> embedder;
};

/// An in-memory index that satisfies every verify rule: real chunking over random snippets,
/// figure crops as PNG assets, and a row in each matrix for every record that needs one.
DocumentIndex random_index(const RandomIndexOptions& options);

/// Ingests the default synthetic textbook with reference providers into dir.
DocumentIndex synthetic_index(const std::filesystem::path& dir, const std::string& doc_id = "book");

struct SseEvent {
    std::string type;
    std::string id;
    std::string data;
};

/// Splits a text/event-stream body into records.
std::vector<SseEvent> parse_sse(const std::string& body);

}  // namespace mudoc::fixtures
