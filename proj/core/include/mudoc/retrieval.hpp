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

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mudoc/index.hpp"
#include "mudoc/providers.hpp"

namespace mudoc {

enum class TextVariant { kRaw, kCleaned, kSummary };

std::string_view to_string(TextVariant variant) noexcept;

struct ScoredChunk {
    std::string chunk_id;
    double score = 0.0;
    TextVariant best_variant = TextVariant::kRaw;
};

struct ScoredFigure {
    std::string figure_id;
    double score = 0.0;  // (dpr_max + clip_max) / 2
    double dpr_max = 0.0;
    double clip_max = 0.0;
};

/// Exhaustive scan. A chunk scores the best cosine over its raw, cleaned and summary vectors.
/// Sorted by descending score, ties by ascending chunk id.
std::vector<ScoredChunk> rank_chunks(const DocumentIndex& index, std::span<const float> query, std::size_t k);

/// Exhaustive scan. dpr_max is the best query/caption/description match in the context space,
/// clip_max the best match against the image, caption and description in the joint space.
/// Figures lacking every vector on one side are left out and their ids appended to skipped.
std::vector<ScoredFigure> rank_figures(const DocumentIndex& index, std::span<const float> query_dpr,
                                       std::span<const float> query_clip, std::size_t k,
                                       std::vector<std::string>* skipped = nullptr);

/// Embeds queries and ranks against one immutable index. Safe for concurrent callers.
class Retriever {
 public:
    Retriever(std::shared_ptr<const DocumentIndex> index, std::shared_ptr<Embedder> embedder);

    /// Raises InvalidArgument for an empty query; an index without chunks yields an empty list.
    std::vector<ScoredChunk> retrieve_text(std::string_view query, std::size_t k = 5) const;
    std::vector<ScoredFigure> retrieve_images(std::string_view query, std::size_t k = 5) const;

    const DocumentIndex& index() const noexcept { return *index_; }
    Embedder& embedder() const noexcept { return *embedder_; }

 private:
    std::shared_ptr<const DocumentIndex> index_;
    std::shared_ptr<Embedder> embedder_;
};

}  // namespace mudoc
